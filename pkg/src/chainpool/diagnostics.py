"""Distributional diagnostics: binned TV distance, autocorrelation, and
iterations-to-threshold searches, plus the reference-draw oracles the
experiment comparisons are scored against.
"""

import csv
import pathlib

import numpy as np
from scipy.special import log_ndtr

from .samplers import ChainConfig, run_chain


class Discretization:
    """Disjoint half-open bins (lo, hi] over one coordinate.

    Bins need not cover the line (one experiment's printed bin list skips
    an interior interval); probabilities are always reported against the
    full sample mass, so uncovered mass simply belongs to no bin.
    """

    def __init__(self, intervals):
        arr = np.asarray(intervals, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise ValueError("need a nonempty list of (lo, hi] pairs")
        if np.any(arr[:, 0] >= arr[:, 1]):
            raise ValueError("each bin needs lo < hi")
        order = np.argsort(arr[:, 0])
        arr = arr[order]
        if np.any(arr[1:, 0] < arr[:-1, 1]):
            raise ValueError("bins must be disjoint")
        self.intervals = arr

    @classmethod
    def from_edges(cls, edges):
        """Contiguous cover of the line: (-inf, e0], (e0, e1], ..., (eK, inf)."""
        e = np.asarray(edges, dtype=np.float64)
        if e.size < 1 or np.any(np.diff(e) <= 0):
            raise ValueError("edges must be strictly increasing")
        lo = np.concatenate([[-np.inf], e])
        hi = np.concatenate([e, [np.inf]])
        return cls(np.column_stack([lo, hi]))

    @property
    def n_bins(self):
        return self.intervals.shape[0]

    def probs(self, sample, weights=None):
        """Per-bin probabilities of a (weighted) sample.

        Weights are normalized to total mass 1 first; mass falling in no
        bin is dropped from every bin (not renormalized away).
        """
        x = np.asarray(sample, dtype=np.float64).reshape(-1)
        if weights is None:
            w = np.full(x.size, 1.0 / max(x.size, 1))
        else:
            w = np.asarray(weights, dtype=np.float64).reshape(-1)
            if w.size != x.size:
                raise ValueError("weights length mismatch")
            w = w / w.sum()
        out = np.empty(self.n_bins)
        for k, (lo, hi) in enumerate(self.intervals):
            out[k] = w[(x > lo) & (x <= hi)].sum()
        return out


def probit_single_bins():
    """(-inf,0], half-unit bins to 25, then (25,inf)."""
    return Discretization.from_edges(np.arange(0.0, 25.001, 0.5))


def probit_multi_bins():
    """Half-unit bins on (3.5, 15], unit bins on (16, 25], open ends.

    The interior interval (15, 16] is deliberately absent; the bin list
    is reproduced exactly as printed in the experiment it scores.
    """
    ivs = [(-np.inf, 3.5)]
    lo = np.arange(3.5, 15.0, 0.5)
    ivs += [(a, a + 0.5) for a in lo]
    ivs += [(float(a), float(a) + 1.0) for a in range(16, 25)]
    ivs += [(25.0, np.inf)]
    return Discretization(ivs)


def tv_distance(p, q):
    """Total variation between two binned probability vectors."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.size != q.size:
        raise ValueError("probability vectors differ in length")
    return 0.5 * np.abs(p - q).sum()


def lag_autocorrelation(series, lag):
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    if x.size <= lag:
        raise ValueError("series too short for this lag")
    xc = x - x.mean()
    denom = xc @ xc
    if denom == 0.0:
        if lag == 0:
            return 1.0
        raise ValueError("autocorrelation of a constant series is undefined "
                         "beyond lag 0")
    if lag == 0:
        return 1.0
    return float(xc[:-lag] @ xc[lag:] / denom)


def iterations_to_threshold(tv_at, n_max, threshold, checkpoint=10000):
    """Smallest checkpoint m with tv_at(m) <= threshold, else inf.

    tv_at maps a draw budget m (multiple of `checkpoint`) to a TV value.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    m = checkpoint
    while m <= n_max:
        if tv_at(m) <= threshold:
            return m
        m += checkpoint
    return np.inf


def series_iterations_to_threshold(series, ref_probs, disc, threshold,
                                   checkpoint=10000):
    x = np.asarray(series, dtype=np.float64).reshape(-1)
    return iterations_to_threshold(
        lambda m: tv_distance(disc.probs(x[:m]), ref_probs), x.size,
        threshold, checkpoint)


def tv_trace(tv_at, n_max, checkpoint=10000):
    """(checkpoint, tv) rows for plotting convergence curves."""
    rows = []
    m = checkpoint
    while m <= n_max:
        rows.append((m, float(tv_at(m))))
        m += checkpoint
    return rows


# reference oracles ----------------------------------------------------

def probit1_rejection_sample(x, y, prior_sd, n_draws, rng, batch=200000,
                             max_batches=5000):
    """Exact posterior draws for the single-covariate probit by rejection.

    With a binary covariate the likelihood depends on beta only through
    the (x=1, y) counts, so each proposal costs O(1).  Proposals come
    from the prior and accept with likelihood over its grid maximum.
    """
    x = np.asarray(x).reshape(-1)
    y = np.asarray(y).reshape(-1)
    n11 = int(np.sum((x == 1) & (y == 1)))
    n10 = int(np.sum((x == 1) & (y == 0)))

    def loglik(beta):
        b = np.asarray(beta, dtype=np.float64)
        return n11 * log_ndtr(b) + n10 * log_ndtr(-b)

    grid = np.linspace(-10 * prior_sd, 10 * prior_sd, 200001)
    log_max = loglik(grid).max()
    out = np.empty(n_draws)
    have = 0
    for _ in range(max_batches):
        beta = rng.normal(0.0, prior_sd, size=batch)
        logu = np.log(rng.random(batch))
        keep = beta[logu < loglik(beta) - log_max]
        take = min(keep.size, n_draws - have)
        out[have:have + take] = keep[:take]
        have += take
        if have == n_draws:
            return out
    raise RuntimeError("rejection sampler did not reach the requested size")


def reference_mh_run(target, iterations, step_scale, seed, init,
                     burn_in=None, adapt_window=1000):
    """Long adaptive-Metropolis reference chain; returns post-burn-in draws.

    A scalar step cannot serve coordinates whose posterior scales differ
    by orders of magnitude, so during burn-in the proposal covariance
    tracks the empirical covariance of the trajectory (refreshed every
    adapt_window iterations) while a scalar multiplier chases 23%
    acceptance.  Both freeze at the end of burn-in; the retained draws
    come from a fixed kernel.
    """
    if burn_in is None:
        burn_in = min(iterations // 10, 50000)
    rng = np.random.default_rng(seed)
    x = np.array(init, dtype=np.float64).reshape(-1)
    d = x.size
    logp = target.log_g(x)
    out = np.empty((iterations, d))
    chol = step_scale * np.eye(d)
    log_s = np.log(2.38 / np.sqrt(d))
    block = 10000
    for start in range(0, iterations, block):
        stop = min(start + block, iterations)
        z = rng.standard_normal((stop - start, d))
        logu = np.log(rng.random(stop - start))
        for i in range(start, stop):
            prop = x + np.exp(log_s) * (chol @ z[i - start])
            lp = target.log_g(prop)
            accepted = logu[i - start] < lp - logp
            if accepted:
                x, logp = prop, lp
            out[i] = x
            if i < burn_in:
                log_s += (8.0 / max(i + 1, 100)) * (accepted - 0.234)
                if (i + 1) % adapt_window == 0 and i + 1 >= 4 * d:
                    # shape from the later half of the trajectory so early
                    # transient states stop steering the proposal
                    cov = np.cov(out[(i + 1) // 2:i + 1].T) + 1e-12 * np.eye(d)
                    try:
                        chol = np.linalg.cholesky(cov)
                    except np.linalg.LinAlgError:
                        pass
    return out[burn_in:]


def save_diagnostics(path, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["checkpoint", "tv"])
        for m, tv in rows:
            wr.writerow([int(m), f"{tv:.10g}"])


def load_diagnostics(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        return [(int(a), float(b)) for a, b in rd]
