"""Run chains and replicate batches on a worker pool; pool draws deterministically.

The pool is in-process (threads).  Jitted kernels release the GIL, so
CPU-bound chains overlap on multicore hosts; on the numpy backend the
pool still works but overlap is limited by the interpreter lock.

Determinism contract: every task derives its RNG from the master seed
plus a (domain, index) pair via numpy's SeedSequence, and pooled results
are always reduced in (chain id, iteration) order, so outputs are
identical for any worker count and scheduling order.
"""

import concurrent.futures
import csv
import pathlib
import re

import numpy as np

from .samplers import run_chain

# seed-derivation domains keep chain, replicate, simulation, and
# reference streams disjoint under one master seed
CHAIN_DOMAIN = 0
REPLICATE_DOMAIN = 1
SIMULATE_DOMAIN = 2
REFERENCE_DOMAIN = 3


def derive_seed(master_seed, domain, index):
    """Stable 64-bit seed for task `index` in stream family `domain`."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(domain, index))
    return int(ss.generate_state(1, np.uint64)[0])


def derive_rng(master_seed, domain, index):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(master_seed), spawn_key=(domain, index)))


class ChainError(RuntimeError):
    def __init__(self, chain_id, cause):
        super().__init__(f"chain {chain_id} failed: {cause!r}")
        self.chain_id = chain_id


class DrawStore:
    """Pooled draws from L chains in canonical (chain, iteration) order."""

    def __init__(self, dim, chain_ids, iters, thetas, is_burnin, normalization=None):
        self.dim = int(dim)
        self.chain_ids = np.asarray(chain_ids, dtype=np.int64)
        self.iters = np.asarray(iters, dtype=np.int64)
        self.thetas = np.asarray(thetas, dtype=np.float64).reshape(-1, self.dim)
        self.is_burnin = np.asarray(is_burnin, dtype=bool)
        n = self.chain_ids.size
        if not (self.iters.size == n and self.thetas.shape[0] == n
                and self.is_burnin.size == n):
            raise ValueError("inconsistent record lengths")
        order = np.lexsort((self.iters, self.chain_ids))
        if not np.array_equal(order, np.arange(n)):
            self.chain_ids = self.chain_ids[order]
            self.iters = self.iters[order]
            self.thetas = self.thetas[order]
            self.is_burnin = self.is_burnin[order]
        for cid in np.unique(self.chain_ids):
            it = self.iters[self.chain_ids == cid]
            if it.size > 1 and not np.all(np.diff(it) > 0):
                raise ValueError(f"chain {cid} iterations not strictly increasing")
        self.normalization = (None if normalization is None
                              else np.asarray(normalization, dtype=np.float64))

    @classmethod
    def empty(cls, dim):
        return cls(dim, np.empty(0, np.int64), np.empty(0, np.int64),
                   np.empty((0, dim)), np.empty(0, bool))

    @classmethod
    def from_segments(cls, segments, dim=None):
        segs = list(segments)
        if not segs:
            if dim is None:
                raise ValueError("dim required for an empty store")
            return cls.empty(dim)
        dim = segs[0].thetas.shape[1]
        chain_ids = np.concatenate([
            np.full(s.thetas.shape[0], s.chain_id if s.chain_id is not None else i,
                    dtype=np.int64)
            for i, s in enumerate(segs)])
        iters = np.concatenate([np.arange(s.thetas.shape[0], dtype=np.int64)
                                for s in segs])
        thetas = np.concatenate([s.thetas for s in segs])
        burn = np.concatenate([s.is_burnin for s in segs])
        return cls(dim, chain_ids, iters, thetas, burn)

    @property
    def n_draws(self):
        return self.chain_ids.size

    @property
    def chains(self):
        return np.unique(self.chain_ids)

    @property
    def post_burnin(self):
        return self.thetas[~self.is_burnin]

    def prefix(self, n_iters):
        """Keep only iterations < n_iters within each chain."""
        keep = self.iters < int(n_iters)
        return DrawStore(self.dim, self.chain_ids[keep], self.iters[keep],
                         self.thetas[keep], self.is_burnin[keep],
                         self.normalization)

    def post_burnin_prefix(self, per_chain):
        """First `per_chain` post-burn-in draws of each chain, pooled."""
        keep = np.zeros(self.n_draws, dtype=bool)
        for cid in self.chains:
            idx = np.flatnonzero((self.chain_ids == cid) & ~self.is_burnin)
            keep[idx[:per_chain]] = True
        return self.thetas[keep]

    def merge(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return DrawStore(
            self.dim,
            np.concatenate([self.chain_ids, other.chain_ids]),
            np.concatenate([self.iters, other.iters]),
            np.concatenate([self.thetas, other.thetas]),
            np.concatenate([self.is_burnin, other.is_burnin]),
            self.normalization)

    # CSV layout: one file per chain, `chain,iter,theta_1..theta_p,is_burnin`
    def to_csv_dir(self, out_dir):
        out = pathlib.Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = (["chain", "iter"]
                  + [f"theta_{i + 1}" for i in range(self.dim)]
                  + ["is_burnin"])
        for cid in self.chains:
            mask = self.chain_ids == cid
            path = out / f"chain_{cid:04d}.csv"
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(header)
                for it, th, bi in zip(self.iters[mask], self.thetas[mask],
                                      self.is_burnin[mask]):
                    wr.writerow([cid, it] + [f"{v:.17g}" for v in th] + [int(bi)])

    @classmethod
    def from_csv_dir(cls, in_dir):
        paths = sorted(pathlib.Path(in_dir).glob("chain_*.csv"),
                       key=lambda p: int(re.findall(r"\d+", p.stem)[-1]))
        if not paths:
            raise FileNotFoundError(f"no chain_*.csv files under {in_dir}")
        cids, its, ths, bis = [], [], [], []
        dim = None
        for path in paths:
            with open(path, newline="") as fh:
                rd = csv.reader(fh)
                header = next(rd)
                d = len(header) - 3
                if dim is None:
                    dim = d
                elif d != dim:
                    raise ValueError("chain files disagree on dimension")
                for row in rd:
                    cids.append(int(row[0]))
                    its.append(int(row[1]))
                    ths.append([float(v) for v in row[2:2 + d]])
                    bis.append(bool(int(row[2 + d])))
        return cls(dim, np.array(cids), np.array(its),
                   np.array(ths, dtype=np.float64).reshape(len(cids), dim),
                   np.array(bis))


def run_parallel_chains(target, cfgs, workers=1):
    """Run each ChainConfig as an independent chain; pool into a DrawStore.

    Chains may complete in any order; the pooled store is sorted by
    (chain id, iteration) so the result does not depend on scheduling.
    A failing chain aborts the whole run with its chain id attached.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    cfgs = list(cfgs)
    if not cfgs:
        return DrawStore.empty(target.dim)
    segments = [None] * len(cfgs)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_chain, target, cfg, i): i
                   for i, cfg in enumerate(cfgs)}
        for fut in concurrent.futures.as_completed(futures):
            i = futures[fut]
            try:
                segments[i] = fut.result()
            except Exception as exc:
                for other in futures:
                    other.cancel()
                raise ChainError(i, exc) from exc
    return DrawStore.from_segments(segments)


def run_parallel_replicates(task, n, workers=1, master_seed=0):
    """Evaluate `task(rng)` for n independent replicates; ordered results.

    Replicate i gets the RNG derived from (master_seed, replicate domain,
    i), so results are a pure function of the master seed regardless of
    worker count.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    results = [None] * n
    if n == 0:
        return results

    def run_block(indices):
        return [(i, task(derive_rng(master_seed, REPLICATE_DOMAIN, i)))
                for i in indices]

    blocks = np.array_split(np.arange(n), min(n, workers * 4))
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(run_block, b) for b in blocks if b.size]:
            for i, val in fut.result():
                results[i] = val
    return results


def parallel_map(fn, items, workers=1):
    """Order-preserving map over a thread pool (internal plumbing)."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
