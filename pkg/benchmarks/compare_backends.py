"""Compare the jitted and pure-numpy backends on the hot kernels.

Runs the same workloads under both backends in subprocesses (the backend
is chosen at import time via CHAINPOOL_NO_NUMBA) and reports wall times
plus agreement of the results.  Also measures executor thread scaling
with the jitted backend, where chain kernels release the GIL.

    python3 benchmarks/compare_backends.py [--quick]
"""

import argparse
import json
import os
import pathlib
import subprocess
import sys
import textwrap
import time

WORKER = textwrap.dedent("""
    import json, sys, time
    import numpy as np
    from chainpool.executor import run_parallel_chains
    from chainpool.partition import cluster
    from chainpool.samplers import ChainConfig
    from chainpool.targets import demo_mixture_2d
    from chainpool.weights import MvtDist, trajectory_c_hat_batch, fit_instrumental
    from chainpool import backend_name

    quick = bool(int(sys.argv[1]))
    workers = int(sys.argv[2])
    iters = 2000 if quick else 25000
    n_rep = 200 if quick else 2000

    gm = demo_mixture_2d()
    target = gm.target()
    cfgs = [ChainConfig(kernel="langevin", step_scale=0.3, iterations=iters,
                        burn_in=iters // 10, seed=1000 + i,
                        init=("uniform", -10.0, 10.0)) for i in range(8)]

    # warm-up pass triggers any jit compilation outside the timed region
    warm = [ChainConfig(kernel="langevin", step_scale=0.3, iterations=50,
                        burn_in=10, seed=1, init=("uniform", -10.0, 10.0))]
    run_parallel_chains(target, warm, workers=1)

    t0 = time.perf_counter()
    store = run_parallel_chains(target, cfgs, workers=workers)
    t_chains = time.perf_counter() - t0

    t0 = time.perf_counter()
    part = cluster(store, epsilon2=9.0, alpha=0.01)
    t_cluster = time.perf_counter() - t0

    q = fit_instrumental(store.post_burnin[:4000], cluster_center=part.centers_original[0])
    trajectory_c_hat_batch(target, q, 0, part, 10, 5, 0.7,
                           np.random.default_rng(1), warn=False)
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    c = trajectory_c_hat_batch(target, q, 0, part, n_rep, 5, 0.7, rng, warn=False)
    t_weights = time.perf_counter() - t0

    print(json.dumps({
        "backend": backend_name(),
        "t_chains": t_chains, "t_cluster": t_cluster, "t_weights": t_weights,
        "chain_checksum": float(store.thetas.sum()),
        "n_elements": int(part.n_elements),
        "c_hat_mean": float(c.mean()),
    }))
""")


def run_case(no_numba, quick, workers=1):
    env = dict(os.environ)
    env["CHAINPOOL_NO_NUMBA"] = "1" if no_numba else "0"
    src = str(pathlib.Path(__file__).resolve().parents[1] / "src")
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    out = subprocess.run([sys.executable, "-c", WORKER, str(int(quick)),
                          str(workers)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads (seconds instead of minutes)")
    args = ap.parse_args()

    print("running jitted backend (includes compilation)...")
    jit = run_case(False, args.quick)
    print("running pure-numpy backend...")
    plain = run_case(True, args.quick)

    print(f"\n{'':14s}{jit['backend']:>12s}{plain['backend']:>12s}{'ratio':>9s}")
    for key, label in (("t_chains", "chains"), ("t_cluster", "clustering"),
                       ("t_weights", "weights")):
        r = plain[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{label:14s}{jit[key]:12.3f}{plain[key]:12.3f}{r:9.1f}x")

    # chains follow the identical random stream on both backends, so their
    # draws are bitwise equal; reductions over draws may differ in
    # summation order, so derived scalars get a tight relative tolerance
    chains_same = jit["chain_checksum"] == plain["chain_checksum"]
    part_same = jit["n_elements"] == plain["n_elements"]
    c_rel = abs(jit["c_hat_mean"] - plain["c_hat_mean"]) / abs(plain["c_hat_mean"])
    same = chains_same and part_same and c_rel < 1e-12
    print(f"\nchain draws bitwise equal: {'yes' if chains_same else 'NO'}")
    print(f"same partition: {'yes' if part_same else 'NO'}; "
          f"c_hat relative difference: {c_rel:.2e}")
    print(f"agreement across backends: {'yes' if same else 'NO'}")

    cores = os.cpu_count() or 1
    if cores > 1:
        print(f"\nexecutor scaling (jitted backend, {cores} cores):")
        base = run_case(False, args.quick, workers=1)
        for w in (2, min(4, cores)):
            t = run_case(False, args.quick, workers=w)
            print(f"  workers={w}: {t['t_chains']:.3f}s vs serial "
                  f"{base['t_chains']:.3f}s "
                  f"({base['t_chains'] / t['t_chains']:.2f}x)")
            if t["chain_checksum"] != base["chain_checksum"]:
                print("  WARNING: results changed with worker count")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
