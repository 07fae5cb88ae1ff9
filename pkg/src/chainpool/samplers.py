"""MCMC kernels and the short-trajectory generator for weight estimation.

Four chain drivers:

* unadjusted Langevin (Euler-Maruyama, no Metropolis correction),
* random-walk Metropolis with Robbins-Monro scale adaptation,
* Albert-Chib data-augmentation Gibbs for probit regression,
* heavy-tailed (t4-innovation) short trajectories started from an
  instrumental distribution, whose forward path density is tractable.

All randomness is pre-generated in blocks from a per-chain
``numpy.random.Generator``, so the jitted and pure-numpy code paths
consume identical streams and a (target, config, seed) triple determines
the draw sequence exactly.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import NUMBA_ENABLED, maybe_jit
from .numerics import trunc_std_norm_np, trunc_std_norm_s
from .targets import ProbitModel, Target

BLOCK = 1024
GIBBS_BLOCK = 256

KERNELS = ("langevin", "rwm", "gibbs_probit")


@dataclass
class ChainConfig:
    kernel: str
    step_scale: float
    iterations: int
    burn_in: int
    seed: int
    init: object
    adapt_window: int = 1000
    adapt_target: float = 0.234

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")


@dataclass
class ChainSegment:
    """Draws from one chain, burn-in flagged rather than dropped."""

    thetas: np.ndarray
    is_burnin: np.ndarray
    seed: int
    chain_id: int | None = None
    accept_rate: float | None = None
    final_scale: float | None = None

    @property
    def post_burnin(self):
        return self.thetas[~self.is_burnin]


@dataclass
class Trajectory:
    """A short instrumental path with its forward density.

    state_log_density[0] is the log density of the start under the
    instrumental; entry t is the innovation density of state t given
    state t-1 (already including the 1/sigma^p change of variables).
    Their sum is the joint forward log density of the whole path.
    """

    states: np.ndarray
    log_forward_density: float
    state_log_density: np.ndarray
    seed: int | None = None


def draw_init(init, dim, rng):
    """Resolve an init spec: point, ("uniform", lo, hi), "logit_uniform",
    or any object with a .sample(rng) method."""
    if isinstance(init, (list, np.ndarray)):
        arr = np.asarray(init, dtype=np.float64)
        if arr.shape != (dim,):
            raise ValueError(f"init point has shape {arr.shape}, expected ({dim},)")
        return arr.copy()
    if isinstance(init, tuple) and len(init) == 3 and init[0] == "uniform":
        lo = np.broadcast_to(np.asarray(init[1], dtype=np.float64), (dim,))
        hi = np.broadcast_to(np.asarray(init[2], dtype=np.float64), (dim,))
        return rng.uniform(lo, hi)
    if init == "logit_uniform":
        u = rng.random(dim)
        return np.log(u) - np.log1p(-u)
    if hasattr(init, "sample"):
        arr = np.asarray(init.sample(rng), dtype=np.float64).reshape(-1)
        if arr.shape != (dim,):
            raise ValueError("init sampler returned wrong dimension")
        return arr
    raise ValueError(f"unrecognized init spec: {init!r}")


def _scalar_logpdf(target):
    if target.kernel is not None:
        return target.kernel, target.kernel_params
    f = target._log_g

    def wrapped(theta, params):
        return float(f(theta))

    return wrapped, ()


def _scalar_grad(target):
    if target.grad_kernel is not None:
        return target.grad_kernel, target.kernel_params
    if target._grad is None:
        raise ValueError("target has no gradient")
    f = target._grad

    def wrapped(theta, params):
        return np.asarray(f(theta), dtype=np.float64)

    return wrapped, ()


def _use_jit(target):
    return NUMBA_ENABLED and target.kernel is not None


# ---------------------------------------------------------------------------
# block kernels (single source; jitted copies made below)


def _rwm_block_impl(logpdf, params, theta, lp, log_scale, t_start, adapt_until,
                    target_acc, z, log_u, out):
    B, p = z.shape
    scale = np.exp(log_scale)
    n_acc = 0
    prop = np.empty(p)
    for t in range(B):
        it = t_start + t
        for i in range(p):
            prop[i] = theta[i] + scale * z[t, i]
        lpp = logpdf(prop, params)
        delta = lpp - lp
        if delta >= 0.0:
            acc_prob = 1.0
            accept = True
        else:
            acc_prob = np.exp(delta)
            accept = log_u[t] < delta
        if accept:
            for i in range(p):
                theta[i] = prop[i]
            lp = lpp
            n_acc += 1
        for i in range(p):
            out[t, i] = theta[i]
        if it <= adapt_until:
            log_scale += (acc_prob - target_acc) / it
            scale = np.exp(log_scale)
    return lp, log_scale, n_acc


def _langevin_block_impl(grad, params, theta, half_s2, sigma, z, out):
    B, p = z.shape
    for t in range(B):
        g = grad(theta, params)
        for i in range(p):
            theta[i] = theta[i] + half_s2 * g[i] + sigma * z[t, i]
            out[t, i] = theta[i]


def _traj_states_impl(grad, params, use_drift, starts, innov, half_s2, sigma, out):
    n, Tm1, p = innov.shape
    for r in range(n):
        for i in range(p):
            out[r, 0, i] = starts[r, i]
        for t in range(Tm1):
            if use_drift:
                g = grad(out[r, t], params)
                for i in range(p):
                    out[r, t + 1, i] = (out[r, t, i] + half_s2 * g[i]
                                        + sigma * innov[r, t, i])
            else:
                for i in range(p):
                    out[r, t + 1, i] = out[r, t, i] + sigma * innov[r, t, i]


def _gibbs_block_impl(X, sgn, A, L, beta, u, eps, out):
    B, N = u.shape
    p = beta.shape[0]
    z = np.empty(N)
    for t in range(B):
        for i in range(N):
            m = 0.0
            for j in range(p):
                m += X[i, j] * beta[j]
            xi = trunc_std_norm_s(-sgn[i] * m, u[t, i])
            z[i] = m + sgn[i] * xi
        for j in range(p):
            acc = 0.0
            for i in range(N):
                acc += A[j, i] * z[i]
            for k in range(p):
                acc += L[j, k] * eps[t, k]
            beta[j] = acc
            out[t, j] = acc


_rwm_block = maybe_jit(cache=False)(_rwm_block_impl)
_langevin_block = maybe_jit(cache=False)(_langevin_block_impl)
_traj_states = maybe_jit(cache=False)(_traj_states_impl)
_gibbs_block = maybe_jit()(_gibbs_block_impl)


def _gibbs_block_np(X, sgn, A, L, beta, u, eps, out):
    # vectorized over observations; same stream as the scalar loop
    B = u.shape[0]
    for t in range(B):
        m = X @ beta
        xi = trunc_std_norm_np(-sgn * m, u[t])
        z = m + sgn * xi
        beta[:] = A @ z + L @ eps[t]
        out[t] = beta


# ---------------------------------------------------------------------------
# drivers


def langevin_step(target, theta, sigma, rng):
    """One Euler-Maruyama step of the overdamped Langevin dynamics."""
    if not target.has_gradient:
        raise ValueError("langevin requires a target gradient")
    theta = np.asarray(theta, dtype=np.float64)
    if sigma * sigma > 0.5:
        warnings.warn("langevin step_scale^2 > 0.5; discretization bias will be large")
    g = target.grad_log_g(theta)
    return theta + 0.5 * sigma * sigma * g + sigma * rng.standard_normal(theta.size)


def langevin_chain(target, cfg):
    if cfg.kernel != "langevin":
        raise ValueError("cfg.kernel must be 'langevin'")
    if not target.has_gradient:
        raise ValueError("langevin requires a target gradient")
    if cfg.step_scale ** 2 > 0.5:
        warnings.warn("langevin step_scale^2 > 0.5; discretization bias will be large")
    rng = np.random.default_rng(cfg.seed)
    theta = draw_init(cfg.init, target.dim, rng)
    if not np.isfinite(target.log_g(theta)):
        raise ValueError("initial state has zero target density")
    grad, params = _scalar_grad(target)
    block = _langevin_block if _use_jit(target) else _langevin_block_impl
    n, p = cfg.iterations, target.dim
    thetas = np.empty((n, p))
    half_s2 = 0.5 * cfg.step_scale ** 2
    done = 0
    while done < n:
        b = min(BLOCK, n - done)
        z = rng.standard_normal((b, p))
        block(grad, params, theta, half_s2, cfg.step_scale, z, thetas[done:done + b])
        done += b
    is_burnin = np.arange(n) < cfg.burn_in
    return ChainSegment(thetas, is_burnin, cfg.seed)


def rwm_chain(target, cfg):
    if cfg.kernel != "rwm":
        raise ValueError("cfg.kernel must be 'rwm'")
    rng = np.random.default_rng(cfg.seed)
    theta = draw_init(cfg.init, target.dim, rng)
    lp = target.log_g(theta)
    if not np.isfinite(lp):
        raise ValueError("initial state has zero target density")
    logpdf, params = _scalar_logpdf(target)
    block = _rwm_block if _use_jit(target) else _rwm_block_impl
    n, p = cfg.iterations, target.dim
    thetas = np.empty((n, p))
    log_scale = math.log(cfg.step_scale)
    adapt_until = cfg.adapt_window
    n_acc = 0
    done = 0
    while done < n:
        b = min(BLOCK, n - done)
        z = rng.standard_normal((b, p))
        log_u = np.log(rng.random(b))
        lp, log_scale, acc = block(logpdf, params, theta, lp, log_scale,
                                   done + 1, adapt_until, cfg.adapt_target,
                                   z, log_u, thetas[done:done + b])
        n_acc += acc
        done += b
    effective_burnin = max(cfg.burn_in, min(adapt_until, n - 1))
    is_burnin = np.arange(n) < effective_burnin
    return ChainSegment(thetas, is_burnin, cfg.seed,
                        accept_rate=n_acc / n, final_scale=math.exp(log_scale))


def _gibbs_precompute(model):
    X = model.X
    prec = X.T @ X + np.diag(1.0 / model.prior_variance)
    # cholesky doubles as the singularity check
    np.linalg.cholesky(prec)
    V = np.linalg.inv(prec)
    V = 0.5 * (V + V.T)
    A = np.ascontiguousarray(V @ X.T)
    L = np.linalg.cholesky(V)
    return X, V, A, L


def gibbs_probit_chain(model, cfg):
    if cfg.kernel != "gibbs_probit":
        raise ValueError("cfg.kernel must be 'gibbs_probit'")
    if not isinstance(model, ProbitModel):
        raise TypeError("gibbs_probit_chain needs a ProbitModel")
    rng = np.random.default_rng(cfg.seed)
    p = model.dim
    beta = draw_init(cfg.init, p, rng)
    X, V, A, L = _gibbs_precompute(model)
    n = cfg.iterations
    thetas = np.empty((n, p))
    sgn = model._sgn
    block = _gibbs_block if NUMBA_ENABLED else _gibbs_block_np
    done = 0
    while done < n:
        b = min(GIBBS_BLOCK, n - done)
        u = rng.random((b, model.n_obs))
        eps = rng.standard_normal((b, p))
        block(X, sgn, A, L, beta, u, eps, thetas[done:done + b])
        done += b
    is_burnin = np.arange(n) < cfg.burn_in
    return ChainSegment(thetas, is_burnin, cfg.seed)


def run_chain(target_or_model, cfg, chain_id=None):
    """Dispatch on cfg.kernel; the executor entry point."""
    if cfg.kernel == "langevin":
        seg = langevin_chain(target_or_model, cfg)
    elif cfg.kernel == "rwm":
        seg = rwm_chain(target_or_model, cfg)
    else:
        seg = gibbs_probit_chain(target_or_model, cfg)
    seg.chain_id = chain_id
    return seg


# ---------------------------------------------------------------------------
# t4-innovation trajectories


def std_t_log_density_sq(r2, p, nu):
    """Log density of the standard p-variate t_nu at squared radius r2."""
    const = (math.lgamma(0.5 * (nu + p)) - math.lgamma(0.5 * nu)
             - 0.5 * p * math.log(nu * math.pi))
    return const - 0.5 * (nu + p) * np.log1p(r2 / nu)


def t4_trajectory_batch(q_center, target, n, T, sigma, rng, drift=True, nu=4.0):
    """n trajectories of length T; returns (states (n,T,p), state log densities (n,T)).

    Start points come from q_center; subsequent states follow the Langevin
    drift (optional) plus sigma-scaled iid standard t_nu innovations.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    p = target.dim
    starts = np.atleast_2d(q_center.sample(n, rng))
    logq0 = np.asarray(q_center.logpdf_batch(starts), dtype=np.float64)
    states = np.empty((n, T, p))
    state_logq = np.empty((n, T))
    state_logq[:, 0] = logq0
    if T == 1:
        states[:, 0] = starts
        return states, state_logq
    if drift and sigma > 0 and not target.has_gradient:
        raise ValueError("drift requires a target gradient")
    z = rng.standard_normal((n, T - 1, p))
    w = rng.chisquare(nu, size=(n, T - 1))
    innov = z / np.sqrt(w / nu)[:, :, None]
    if sigma == 0.0:
        states[:] = starts[:, None, :]
        state_logq[:, 1:] = 0.0
        return states, state_logq
    use_drift = 1 if drift else 0
    if drift:
        grad, params = _scalar_grad(target)
        jit_ok = _use_jit(target) and target.grad_kernel is not None
    else:
        grad, params = _zero_grad_fn(), ()
        jit_ok = NUMBA_ENABLED
    fn = _traj_states if jit_ok else _traj_states_impl
    fn(grad, params, use_drift, starts, innov, 0.5 * sigma * sigma, sigma, states)
    r2 = (innov * innov).sum(axis=2)
    state_logq[:, 1:] = std_t_log_density_sq(r2, p, nu) - p * math.log(sigma)
    return states, state_logq


def _zero_grad_fn():
    return _zero_grad if NUMBA_ENABLED else _zero_grad_impl


def _zero_grad_impl(theta, params):
    return np.zeros(theta.shape[0])


_zero_grad = maybe_jit(cache=False)(_zero_grad_impl)


def t4_trajectory(q_center, target, T, sigma, rng, drift=True, seed=None):
    """One instrumental trajectory with its forward path log density."""
    states, state_logq = t4_trajectory_batch(q_center, target, 1, T, sigma, rng,
                                             drift=drift)
    return Trajectory(states[0], float(state_logq[0].sum()), state_logq[0], seed)
