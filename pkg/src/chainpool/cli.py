"""Command-line front end: configs, data simulation, pipeline orchestration.

The pipeline is sample -> partition -> weights -> combine -> diagnose.
``run`` executes every configured stage; ``stage`` executes one stage
against files produced earlier (possibly by another process, so weights
can be estimated from a draw prefix while sampling continues).  Every
stage reads its inputs back from disk, which makes a full ``run`` and a
sequence of ``stage`` calls byte-identical by construction.

Config files are flat ``section.key = value`` text; see CONFIG_SCHEMA
for the accepted keys and the bundled ``configs/*.cfg`` for worked
examples.  Exit codes: 0 success, 1 pipeline failure (failing stage
named on stderr), 2 config or usage error.
"""

import argparse
import pathlib
import sys

import numpy as np

from .combine import (combine, element_means, save_report,
                      weighted_empirical)
from .diagnostics import (probit1_rejection_sample, probit_multi_bins,
                          probit_single_bins, save_diagnostics, tv_distance,
                          tv_trace)
from .executor import (CHAIN_DOMAIN, REFERENCE_DOMAIN, DrawStore, derive_rng,
                       derive_seed, run_parallel_chains)
from .partition import TRANSFORMS, Partition
from .partition import cluster as cluster_draws
from .weights import (CENTER_MODES, METHODS, estimate_weights,
                      fit_instrumental, load_weights, save_weights)
from .samplers import ChainConfig
from .targets import (GaussianMixture, LohModel, ProbitModel, demo_mixture_2d,
                      random_mixture, simulate_probit_multi,
                      simulate_probit_single)


class ConfigError(ValueError):
    """Invalid or missing configuration."""


# key -> (type, default); default None with no entry in OPTIONAL means the
# section's builder decides whether the key is required
CONFIG_SCHEMA = {
    "target.name": (str, None),
    "target.x_file": (str, None),
    "target.y_file": (str, None),
    "target.data_file": (str, None),
    "target.prior_variance": (float, 100.0),
    "target.dim": (int, 10),
    "target.components": (int, 4),
    "target.mixture_seed": (int, 0),
    "target.cov_scale": (float, 1.0),
    "chains.count": (int, None),
    "chains.kernel": (str, None),
    "chains.iterations": (int, None),
    "chains.burn_in": (int, 0),
    "chains.step_scale": (float, 1.0),
    "chains.adapt_window": (int, 1000),
    "chains.init": (None, None),
    "chains.init_low": (None, None),
    "chains.init_high": (None, None),
    "partition.epsilon2": (float, None),
    "partition.alpha": (float, None),
    "partition.normalize": (bool, False),
    "partition.transform": (str, "identity"),
    "partition.subsample": (int, 10000),
    "partition.prefix": (int, 0),
    "weights.method": (str, "ratio"),
    "weights.estimator": (str, "trajectory"),
    "weights.n": (int, None),
    "weights.T": (int, None),
    "weights.sigma": (float, 1.0),
    "weights.drift": (bool, True),
    "weights.nu": (float, 4.0),
    "weights.inflation": (float, 1.0),
    "weights.center": (str, "cluster_center"),
    "weights.pm_iters": (int, 0),
    "combine.transform": (str, "identity"),
    "diagnostics.bins": (str, None),
    "diagnostics.coordinate": (int, 0),
    "diagnostics.reference": (str, None),
    "diagnostics.reference_draws": (int, 200000),
    "diagnostics.threshold": (float, 0.1),
    "diagnostics.checkpoint": (int, 10000),
    "run.seed": (int, 0),
    "run.workers": (int, 1),
    "run.out": (str, None),
}


def _parse_value(text):
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        try:
            return [float(t) for t in text.split(",")]
        except ValueError:
            pass
    return text


def parse_config(text, source="<config>"):
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not val:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        if key in cfg:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        parsed = _parse_value(val)
        want, _ = CONFIG_SCHEMA[key]
        if want is bool:
            if not isinstance(parsed, bool):
                raise ConfigError(f"{source}:{lineno}: {key} wants true/false")
        elif want is int:
            if isinstance(parsed, bool) or not isinstance(parsed, int):
                raise ConfigError(f"{source}:{lineno}: {key} wants an integer")
        elif want is float:
            if isinstance(parsed, bool) or not isinstance(parsed, (int, float)):
                raise ConfigError(f"{source}:{lineno}: {key} wants a number")
            parsed = float(parsed)
        elif want is str:
            if not isinstance(parsed, str):
                raise ConfigError(f"{source}:{lineno}: {key} wants a string")
        cfg[key] = parsed
    return cfg


def load_config(path):
    p = pathlib.Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(p.read_text(), source=str(path))


def cfg_get(cfg, key, required=False):
    if key in cfg:
        return cfg[key]
    _, default = CONFIG_SCHEMA[key]
    if required and default is None:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _require_file(path, key):
    if not pathlib.Path(path).is_file():
        raise ConfigError(f"{key}: file not found: {path}")
    return path


def validate_config(cfg):
    """Range checks for every key the pipeline will consume."""
    checks = [
        ("partition.epsilon2", lambda v: v > 0, "must be positive"),
        ("partition.alpha", lambda v: 0 < v < 1, "must lie in (0,1)"),
        ("partition.subsample", lambda v: v >= 1, "must be >= 1"),
        ("partition.prefix", lambda v: v >= 0, "must be >= 0"),
        ("weights.n", lambda v: v >= 1, "must be >= 1"),
        ("weights.T", lambda v: v >= 1, "must be >= 1"),
        ("weights.sigma", lambda v: v >= 0, "must be >= 0"),
        ("weights.nu", lambda v: v > 2, "must exceed 2"),
        ("weights.inflation", lambda v: v > 0, "must be positive"),
        ("weights.pm_iters", lambda v: v >= 0, "must be >= 0"),
        ("diagnostics.reference_draws", lambda v: v >= 1, "must be >= 1"),
        ("diagnostics.threshold", lambda v: 0 < v <= 1, "must lie in (0,1]"),
        ("diagnostics.checkpoint", lambda v: v >= 1, "must be >= 1"),
        ("diagnostics.coordinate", lambda v: v >= 0, "must be >= 0"),
        ("run.seed", lambda v: v >= 0, "must be >= 0"),
        ("run.workers", lambda v: v >= 1, "must be >= 1"),
    ]
    for key, ok, why in checks:
        if key in cfg and not ok(cfg[key]):
            raise ConfigError(f"{key} {why} (got {cfg[key]!r})")
    choices = [
        ("partition.transform", TRANSFORMS),
        ("weights.method", METHODS),
        ("weights.estimator", ("trajectory", "independent")),
        ("weights.center", CENTER_MODES),
        ("combine.transform", ("identity", "loh_constrained")),
        ("diagnostics.bins", ("probit_single", "probit_multi")),
    ]
    for key, allowed in choices:
        if key in cfg and cfg[key] not in allowed:
            raise ConfigError(f"{key} must be one of {allowed} "
                              f"(got {cfg[key]!r})")


# ---------------------------------------------------------------------------
# Model construction


def build_model(cfg):
    """Returns (model, target, dim).  model is the object run_chain expects
    for the configured kernel (the probit model itself for gibbs_probit)."""
    name = cfg_get(cfg, "target.name", required=True)
    if name == "mixture2d":
        gm = demo_mixture_2d()
        return gm, gm.target(), gm.dim
    if name == "mixture10d":
        gm = random_mixture(cfg_get(cfg, "target.dim"),
                            cfg_get(cfg, "target.components"),
                            cfg_get(cfg, "target.mixture_seed"),
                            cov_scale=cfg_get(cfg, "target.cov_scale"))
        return gm, gm.target(), gm.dim
    if name == "probit":
        x_file = _require_file(cfg_get(cfg, "target.x_file", required=True),
                               "target.x_file")
        y_file = _require_file(cfg_get(cfg, "target.y_file", required=True),
                               "target.y_file")
        m = ProbitModel.from_csv(x_file, y_file,
                                 prior_variance=cfg_get(cfg, "target.prior_variance"))
        return m, m.target(), m.dim
    if name == "loh":
        data = cfg.get("target.data_file")
        if data is not None:
            m = LohModel.from_csv(_require_file(data, "target.data_file"))
        else:
            m = LohModel.bundled()
        return m, m.target(), m.dim
    raise ConfigError(f"unknown target.name {name!r}")


def _init_bound(cfg, key, dim):
    val = cfg_get(cfg, key, required=True)
    if isinstance(val, bool) or isinstance(val, str):
        raise ConfigError(f"{key} wants a number or comma list")
    arr = np.asarray(val, dtype=np.float64).reshape(-1)
    if arr.size not in (1, dim):
        raise ConfigError(f"{key} has {arr.size} entries, target dimension "
                          f"is {dim}")
    return float(arr[0]) if arr.size == 1 else arr


def _resolve_init(cfg, dim):
    init = cfg.get("chains.init", "uniform")
    if init == "uniform":
        lo = _init_bound(cfg, "chains.init_low", dim)
        hi = _init_bound(cfg, "chains.init_high", dim)
        if not np.all(np.asarray(lo) < np.asarray(hi)):
            raise ConfigError("chains.init_low must be < chains.init_high")
        return ("uniform", lo, hi)
    if init == "logit_uniform":
        return "logit_uniform"
    if isinstance(init, list):
        if len(init) != dim:
            raise ConfigError(f"chains.init point has {len(init)} coordinates, "
                              f"target dimension is {dim}")
        return np.asarray(init, dtype=np.float64)
    if isinstance(init, (int, float)) and dim == 1:
        return np.array([float(init)])
    raise ConfigError(f"unrecognized chains.init {init!r}")


def chain_configs(cfg, dim, seed):
    count = cfg_get(cfg, "chains.count", required=True)
    iterations = cfg_get(cfg, "chains.iterations", required=True)
    burn_in = cfg_get(cfg, "chains.burn_in")
    kernel = cfg_get(cfg, "chains.kernel", required=True)
    step = cfg_get(cfg, "chains.step_scale")
    adapt = cfg_get(cfg, "chains.adapt_window")
    if count < 1:
        raise ConfigError("chains.count must be >= 1")
    if not 0 <= burn_in < iterations:
        raise ConfigError("need 0 <= chains.burn_in < chains.iterations")
    init = _resolve_init(cfg, dim)
    try:
        return [ChainConfig(kernel=kernel, step_scale=step,
                            iterations=iterations, burn_in=burn_in,
                            seed=derive_seed(seed, CHAIN_DOMAIN, i),
                            init=init, adapt_window=adapt)
                for i in range(count)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# Stages.  Each reads inputs from disk and writes one output, so `run` and
# `stage` produce identical bytes.


def out_paths(out_dir):
    out = pathlib.Path(out_dir)
    return {"draws": out / "draws",
            "partition": out / "partition.json",
            "weights": out / "weights.json",
            "report": out / "report.json",
            "diagnostics": out / "diagnostics.csv"}


def stage_sample(cfg, model, target, seed, workers, draws_dir):
    cfgs = chain_configs(cfg, target.dim, seed)
    kernel = cfg_get(cfg, "chains.kernel", required=True)
    runnee = model if kernel == "gibbs_probit" else target
    store = run_parallel_chains(runnee, cfgs, workers=workers)
    draws_dir = pathlib.Path(draws_dir)
    if draws_dir.is_dir():
        for stale in draws_dir.glob("chain_*.csv"):
            stale.unlink()
    store.to_csv_dir(draws_dir)
    return store


def _load_draws(draws_dir, dim=None):
    d = pathlib.Path(draws_dir)
    if not d.is_dir():
        raise ConfigError(f"draws directory not found: {draws_dir}")
    store = DrawStore.from_csv_dir(d)
    if store.n_draws == 0:
        raise ValueError("draws directory holds no draws")
    if dim is not None and store.dim != dim:
        raise ValueError(f"draws have dimension {store.dim}, "
                         f"target has {dim}")
    return store


def _clustering_input(cfg, store):
    prefix = cfg_get(cfg, "partition.prefix")
    if prefix > 0:
        return store.post_burnin_prefix(prefix)
    return store


def stage_partition(cfg, draws_dir, partition_path, dim=None):
    store = _load_draws(draws_dir, dim=dim)
    part = cluster_draws(
        _clustering_input(cfg, store),
        cfg_get(cfg, "partition.epsilon2", required=True),
        cfg_get(cfg, "partition.alpha", required=True),
        normalize=cfg_get(cfg, "partition.normalize"),
        transform=cfg_get(cfg, "partition.transform"),
        max_points=cfg_get(cfg, "partition.subsample"))
    part.save(partition_path)
    return part


def stage_weights(cfg, target, draws_dir, partition_path, weights_path,
                  seed, workers):
    store = _load_draws(draws_dir, dim=target.dim)
    part = Partition.load(_require_file(partition_path, "partition file"))
    pts = store.post_burnin
    labels = part.assign_batch(pts)
    center_mode = cfg_get(cfg, "weights.center")
    centers = part.centers_original
    instrumentals = []
    for j in range(part.n_elements):
        instrumentals.append(fit_instrumental(
            pts[labels == j],
            center_mode=center_mode,
            inflation=cfg_get(cfg, "weights.inflation"),
            nu=cfg_get(cfg, "weights.nu"),
            cluster_center=centers[j]))
    pm_iters = cfg_get(cfg, "weights.pm_iters")
    T = cfg_get(cfg, "weights.T", required=True)
    est = estimate_weights(
        target, part, instrumentals,
        n_replicates=cfg_get(cfg, "weights.n", required=True),
        T=T,
        method=cfg_get(cfg, "weights.method"),
        estimator=cfg_get(cfg, "weights.estimator"),
        sigma=cfg_get(cfg, "weights.sigma"),
        drift=cfg_get(cfg, "weights.drift"),
        nu=cfg_get(cfg, "weights.nu"),
        seed=seed, workers=workers,
        pm_iters=pm_iters if pm_iters > 0 else None)
    save_weights(weights_path, est, T)
    return est


def _combine_fn(cfg):
    name = cfg_get(cfg, "combine.transform")
    if name == "identity":
        return lambda pts: pts
    if name == "loh_constrained":
        return LohModel.to_constrained
    raise ConfigError(f"unknown combine.transform {name!r}")


def stage_combine(cfg, draws_dir, partition_path, weights_path, report_path,
                  dim=None):
    store = _load_draws(draws_dir, dim=dim)
    part = Partition.load(_require_file(partition_path, "partition file"))
    wdoc = load_weights(_require_file(weights_path, "weights file"))
    w_hat = np.asarray(wdoc["w_hat"], dtype=np.float64)
    w_se = np.asarray(wdoc["w_hat_se"], dtype=np.float64)
    means, ses, counts = element_means(_combine_fn(cfg), store, part)
    est = combine(means, counts, w_hat,
                              per_element_se=ses, w_hat_se=w_se)
    save_report(report_path, est)
    return est


def _build_bins(cfg):
    name = cfg_get(cfg, "diagnostics.bins", required=True)
    if name == "probit_single":
        return probit_single_bins()
    if name == "probit_multi":
        return probit_multi_bins()
    raise ConfigError(f"unknown diagnostics.bins {name!r}")


def _reference_sample(cfg, model, seed):
    ref = cfg_get(cfg, "diagnostics.reference", required=True)
    if ref == "rejection":
        if not isinstance(model, ProbitModel) or model.dim != 1:
            raise ConfigError("diagnostics.reference = rejection needs the "
                              "single-covariate probit target")
        rng = derive_rng(seed, REFERENCE_DOMAIN, 0)
        return probit1_rejection_sample(
            model.X[:, 0], model.y,
            float(np.sqrt(model.prior_variance[0])),
            cfg_get(cfg, "diagnostics.reference_draws"), rng)
    arr = np.loadtxt(_require_file(ref, "diagnostics.reference"),
                     delimiter=",", skiprows=1, ndmin=2)
    return arr[:, cfg_get(cfg, "diagnostics.coordinate")]


def stage_diagnose(cfg, model, draws_dir, partition_path, weights_path,
                   diagnostics_path, seed, dim=None):
    store = _load_draws(draws_dir, dim=dim)
    part = Partition.load(_require_file(partition_path, "partition file"))
    wdoc = load_weights(_require_file(weights_path, "weights file"))
    w_hat = np.asarray(wdoc["w_hat"], dtype=np.float64)
    bins = _build_bins(cfg)
    coord = cfg_get(cfg, "diagnostics.coordinate")
    ref_probs = bins.probs(_reference_sample(cfg, model, seed))
    checkpoint = cfg_get(cfg, "diagnostics.checkpoint")
    n_max = int(store.iters.max()) + 1 if store.n_draws else 0

    def tv_at(m):
        pts, masses = weighted_empirical(store.prefix(m), part, w_hat)
        return tv_distance(bins.probs(pts[:, coord], weights=masses),
                                    ref_probs)

    rows = tv_trace(tv_at, n_max, checkpoint)
    save_diagnostics(diagnostics_path, rows)
    return rows


# ---------------------------------------------------------------------------
# Commands


def _plan(cfg):
    lines = []
    lines.append(f"  sample     {cfg_get(cfg, 'chains.count', required=True)} "
                 f"chains x {cfg_get(cfg, 'chains.iterations', required=True)} "
                 f"iterations ({cfg_get(cfg, 'chains.kernel', required=True)}) "
                 f"-> draws/")
    lines.append(f"  partition  epsilon2={cfg_get(cfg, 'partition.epsilon2', required=True)} "
                 f"alpha={cfg_get(cfg, 'partition.alpha', required=True)} "
                 f"-> partition.json")
    lines.append(f"  weights    method={cfg_get(cfg, 'weights.method')} "
                 f"estimator={cfg_get(cfg, 'weights.estimator')} "
                 f"n={cfg_get(cfg, 'weights.n', required=True)} "
                 f"T={cfg_get(cfg, 'weights.T', required=True)} -> weights.json")
    lines.append("  combine    -> report.json")
    if cfg.get("diagnostics.bins") is not None:
        lines.append(f"  diagnose   bins={cfg_get(cfg, 'diagnostics.bins')} "
                     f"reference={cfg_get(cfg, 'diagnostics.reference', required=True)} "
                     f"-> diagnostics.csv")
    return "\n".join(lines)


def _run_overrides(cfg, args):
    seed = args.seed if args.seed is not None else cfg_get(cfg, "run.seed")
    workers = args.workers if args.workers is not None else cfg_get(cfg, "run.workers")
    out = args.out if args.out is not None else cfg.get("run.out")
    if out is None:
        raise ConfigError("no output directory: set run.out or pass --out")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return seed, workers, out


def cmd_run(args):
    cfg = load_config(args.config)
    validate_config(cfg)
    seed, workers, out = _run_overrides(cfg, args)
    model, target, dim = build_model(cfg)
    chain_configs(cfg, dim, seed)  # validate before any work
    plan = _plan(cfg)  # touches every required stage key
    diagnose = cfg.get("diagnostics.bins") is not None
    if diagnose:
        _build_bins(cfg)
        cfg_get(cfg, "diagnostics.reference", required=True)
    if args.dry_run:
        print(f"config ok: {args.config}")
        print(f"out: {out}  seed: {seed}  workers: {workers}")
        print(plan)
        return 0
    paths = out_paths(out)
    paths["draws"].mkdir(parents=True, exist_ok=True)

    stage = "sample"
    try:
        stage_sample(cfg, model, target, seed, workers, paths["draws"])
        stage = "partition"
        stage_partition(cfg, paths["draws"], paths["partition"], dim=dim)
        stage = "weights"
        stage_weights(cfg, target, paths["draws"], paths["partition"],
                      paths["weights"], seed, workers)
        stage = "combine"
        stage_combine(cfg, paths["draws"], paths["partition"],
                      paths["weights"], paths["report"], dim=dim)
        if diagnose:
            stage = "diagnose"
            stage_diagnose(cfg, model, paths["draws"], paths["partition"],
                           paths["weights"], paths["diagnostics"], seed,
                           dim=dim)
    except Exception as exc:
        print(f"stage {stage} failed: {exc}", file=sys.stderr)
        return 1
    print(f"run complete: {out}")
    return 0


def cmd_simulate(args):
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.model == "probit1":
        X, y = simulate_probit_single(n=args.n, seed=args.seed)
    elif args.model == "probit8":
        X, y, _ = simulate_probit_multi(n=args.n, seed=args.seed)
    else:
        raise ConfigError(f"unknown model {args.model!r}")
    x_path, y_path = out / "x.csv", out / "y.csv"
    header = ",".join(f"x_{j + 1}" for j in range(X.shape[1]))
    np.savetxt(x_path, X, delimiter=",", fmt="%.17g", header=header, comments="")
    np.savetxt(y_path, y.reshape(-1, 1), delimiter=",", fmt="%d",
               header="y", comments="")
    print(f"wrote {x_path} and {y_path} ({X.shape[0]} rows)")
    return 0


STAGES = ("partition", "weights", "combine", "diagnose")


def cmd_stage(args):
    cfg = load_config(args.config)
    validate_config(cfg)
    seed, workers, out = _run_overrides(cfg, args)
    paths = out_paths(out)
    draws = args.draws or paths["draws"]
    partition_path = args.partition or paths["partition"]
    weights_path = args.weights or paths["weights"]
    model, target, dim = build_model(cfg)
    try:
        if args.stage == "partition":
            stage_partition(cfg, draws, partition_path, dim=dim)
            print(f"wrote {partition_path}")
        elif args.stage == "weights":
            stage_weights(cfg, target, draws, partition_path, weights_path,
                          seed, workers)
            print(f"wrote {weights_path}")
        elif args.stage == "combine":
            stage_combine(cfg, draws, partition_path, weights_path,
                          paths["report"], dim=dim)
            print(f"wrote {paths['report']}")
        else:
            stage_diagnose(cfg, model, draws, partition_path, weights_path,
                           paths["diagnostics"], seed, dim=dim)
            print(f"wrote {paths['diagnostics']}")
    except ConfigError:
        raise
    except Exception as exc:
        print(f"stage {args.stage} failed: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="chainpool",
        description="Combine draws from independent MCMC chains.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the full configured pipeline")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--dry-run", action="store_true")
    run.set_defaults(fn=cmd_run)

    sim = sub.add_parser("simulate", help="write simulated probit data files")
    sim.add_argument("--model", required=True, choices=("probit1", "probit8"))
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(fn=cmd_simulate)

    st = sub.add_parser("stage", help="run one pipeline stage on existing files")
    st.add_argument("stage", choices=STAGES)
    st.add_argument("--config", required=True)
    st.add_argument("--seed", type=int, default=None)
    st.add_argument("--workers", type=int, default=None)
    st.add_argument("--out", default=None)
    st.add_argument("--draws", default=None)
    st.add_argument("--partition", default=None)
    st.add_argument("--weights", default=None)
    st.set_defaults(fn=cmd_stage)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.n is None:
        args.n = 2000 if args.model == "probit1" else 500
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
