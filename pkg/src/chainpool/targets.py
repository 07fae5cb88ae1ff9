"""Target densities: generic interface plus the four built-in families.

A :class:`Target` bundles an unnormalized log density on R^p with an
optional gradient.  Built-in families (Gaussian mixtures, probit
regression, the loss-of-heterozygosity mixture) also attach scalar
kernels usable from jitted chain loops together with vectorized batch
evaluators; user-supplied callables fall back to python loops.

All log densities return a finite float or -inf, never NaN.
"""

import importlib.resources
import math

import numpy as np
from scipy import special as _sp

from ._backend import NUMBA_ENABLED, maybe_jit
from .numerics import LOG_2PI, log_ndtr_s, log_sigmoid_s


class Target:
    """Unnormalized log density evaluator.

    Parameters
    ----------
    dim : int
        Dimension p of the state space.
    log_g : callable
        theta (p,) -> float log density (unnormalized); -inf allowed.
    grad_log_g : callable, optional
        theta (p,) -> (p,) gradient, where available.
    support_description : str
        Human-readable support note.
    """

    def __init__(self, dim, log_g, grad_log_g=None, support_description="R^p",
                 kernel=None, kernel_params=None, grad_kernel=None,
                 batch_log_g=None, batch_grad=None):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        self._log_g = log_g
        self._grad = grad_log_g
        self.support_description = support_description
        # fast-path hooks (None for generic python targets)
        self.kernel = kernel
        self.kernel_params = kernel_params
        self.grad_kernel = grad_kernel
        self._batch_log_g = batch_log_g
        self._batch_grad = batch_grad

    @property
    def has_gradient(self):
        return self._grad is not None or self.grad_kernel is not None

    def _check(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.dim},)")
        return theta

    def log_g(self, theta):
        theta = self._check(theta)
        val = float(self._log_g(theta))
        if math.isnan(val):
            raise FloatingPointError("log_g produced NaN")
        return val

    def grad_log_g(self, theta):
        if not self.has_gradient:
            raise ValueError("target has no gradient")
        theta = self._check(theta)
        return np.asarray(self._grad(theta), dtype=np.float64)

    def log_g_batch(self, thetas):
        thetas = np.ascontiguousarray(thetas, dtype=np.float64)
        if thetas.ndim != 2 or thetas.shape[1] != self.dim:
            raise ValueError(f"thetas has shape {thetas.shape}, expected (n, {self.dim})")
        if self._batch_log_g is not None:
            return self._batch_log_g(thetas)
        return np.array([self._log_g(t) for t in thetas], dtype=np.float64)

    def grad_log_g_batch(self, thetas):
        thetas = np.ascontiguousarray(thetas, dtype=np.float64)
        if self._batch_grad is not None:
            return self._batch_grad(thetas)
        return np.stack([self.grad_log_g(t) for t in thetas])


# ---------------------------------------------------------------------------
# Gaussian mixtures


@maybe_jit
def _mixture_logpdf_kernel(theta, params):
    log_w, means, precs, log_norm = params
    K = log_w.shape[0]
    p = theta.shape[0]
    best = -np.inf
    vals = np.empty(K)
    for k in range(K):
        quad = 0.0
        for i in range(p):
            row = 0.0
            for j in range(p):
                row += precs[k, i, j] * (theta[j] - means[k, j])
            quad += (theta[i] - means[k, i]) * row
        v = log_w[k] + log_norm[k] - 0.5 * quad
        vals[k] = v
        if v > best:
            best = v
    acc = 0.0
    for k in range(K):
        acc += np.exp(vals[k] - best)
    return best + np.log(acc)


@maybe_jit
def _mixture_grad_kernel(theta, params):
    log_w, means, precs, log_norm = params
    K = log_w.shape[0]
    p = theta.shape[0]
    vals = np.empty(K)
    best = -np.inf
    for k in range(K):
        quad = 0.0
        for i in range(p):
            row = 0.0
            for j in range(p):
                row += precs[k, i, j] * (theta[j] - means[k, j])
            quad += (theta[i] - means[k, i]) * row
        v = log_w[k] + log_norm[k] - 0.5 * quad
        vals[k] = v
        if v > best:
            best = v
    denom = 0.0
    for k in range(K):
        denom += np.exp(vals[k] - best)
    out = np.zeros(p)
    for k in range(K):
        r = np.exp(vals[k] - best) / denom
        for i in range(p):
            row = 0.0
            for j in range(p):
                row += precs[k, i, j] * (means[k, j] - theta[j])
            out[i] += r * row
    return out


def _mixture_logpdf_batch(thetas, params):
    log_w, means, precs, log_norm = params
    d = thetas[:, None, :] - means[None, :, :]
    quad = np.einsum("nkp,kpq,nkq->nk", d, precs, d)
    vals = log_w + log_norm - 0.5 * quad
    return _sp.logsumexp(vals, axis=1)


def _mixture_grad_batch(thetas, params):
    log_w, means, precs, log_norm = params
    d = thetas[:, None, :] - means[None, :, :]
    quad = np.einsum("nkp,kpq,nkq->nk", d, precs, d)
    vals = log_w + log_norm - 0.5 * quad
    vals -= vals.max(axis=1, keepdims=True)
    r = np.exp(vals)
    r /= r.sum(axis=1, keepdims=True)
    return -np.einsum("nk,kpq,nkq->np", r, precs, d)


def _mixture_logpdf_py(theta, params):
    return float(_mixture_logpdf_batch(theta[None, :], params)[0])


def _mixture_grad_py(theta, params):
    return _mixture_grad_batch(theta[None, :], params)[0]


class GaussianMixture:
    """Finite mixture of multivariate normals with full covariances."""

    def __init__(self, weights, means, covariances):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        covs = np.asarray(covariances, dtype=np.float64)
        if covs.ndim == 2:
            covs = covs[None, :, :]
        self.covariances = covs
        K, p = self.means.shape
        if self.weights.shape != (K,) or self.covariances.shape != (K, p, p):
            raise ValueError("inconsistent mixture component shapes")
        if abs(self.weights.sum() - 1.0) > 1e-12 or np.any(self.weights < 0):
            raise ValueError("weights must lie on the simplex (tol 1e-12)")
        # cholesky doubles as the positive-definiteness check
        self._chols = np.stack([np.linalg.cholesky(c) for c in covs])
        self._precs = np.stack([np.linalg.inv(c) for c in covs])
        logdets = 2.0 * np.log(np.diagonal(self._chols, axis1=1, axis2=2)).sum(axis=1)
        self._log_norm = -0.5 * (p * LOG_2PI + logdets)
        with np.errstate(divide="ignore"):
            self._log_w = np.log(self.weights)
        self._params = (np.ascontiguousarray(self._log_w),
                        np.ascontiguousarray(self.means),
                        np.ascontiguousarray(self._precs),
                        np.ascontiguousarray(self._log_norm))

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.means.shape[0]

    @property
    def mean(self):
        return self.weights @ self.means

    def logpdf(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.dim},)")
        return _mixture_logpdf_py(theta, self._params)

    def logpdf_batch(self, thetas):
        return _mixture_logpdf_batch(np.atleast_2d(np.asarray(thetas, dtype=np.float64)),
                                     self._params)

    def grad_logpdf(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({self.dim},)")
        return _mixture_grad_py(theta, self._params)

    def sample(self, n, rng):
        """n iid draws, component labels marginalized out (rows shuffled)."""
        counts = rng.multinomial(n, self.weights)
        parts = []
        for k, ck in enumerate(counts):
            if ck == 0:
                continue
            z = rng.standard_normal((ck, self.dim))
            parts.append(self.means[k] + z @ self._chols[k].T)
        draws = np.concatenate(parts, axis=0)
        return draws[rng.permutation(n)]

    def target(self):
        kern = _mixture_logpdf_kernel if NUMBA_ENABLED else _mixture_logpdf_py
        gkern = _mixture_grad_kernel if NUMBA_ENABLED else _mixture_grad_py
        params = self._params
        return Target(
            self.dim,
            log_g=lambda th: _mixture_logpdf_py(th, params),
            grad_log_g=lambda th: _mixture_grad_py(th, params),
            support_description="R^p",
            kernel=kern, kernel_params=params, grad_kernel=gkern,
            batch_log_g=lambda ths: _mixture_logpdf_batch(ths, params),
            batch_grad=lambda ths: _mixture_grad_batch(ths, params),
        )


def mixture_log_density(m, theta):
    return m.logpdf(theta)


def mixture_grad_log_density(m, theta):
    return m.grad_logpdf(theta)


def demo_mixture_2d():
    """The built-in four-component bivariate demo target."""
    return GaussianMixture(
        weights=[0.02, 0.20, 0.20, 0.58],
        means=[[3.0, 3.0], [7.0, -3.0], [2.0, 7.0], [-5.0, 0.0]],
        covariances=[
            [[1.0, 0.2], [0.2, 1.0]],
            [[2.0, -0.5], [-0.5, 0.5]],
            [[1.3, 0.3], [0.3, 0.4]],
            [[1.0, 1.0], [1.0, 2.5]],
        ],
    )


def random_mixture(p, K, seed, cov_scale=1.0):
    """Random K-component mixture on (-10,10)^p with correlation-shaped covariances.

    Covariances are A = L^T L with iid standard-normal L, rescaled to unit
    diagonal, then multiplied by cov_scale.  Deterministic given seed.
    """
    if p < 1 or K < 1:
        raise ValueError("p and K must be >= 1")
    rng = np.random.default_rng(seed)
    means = rng.uniform(-10.0, 10.0, size=(K, p))
    covs = np.empty((K, p, p))
    for k in range(K):
        L = rng.standard_normal((p, p))
        A = L.T @ L
        d = 1.0 / np.sqrt(np.diag(A))
        covs[k] = cov_scale * (A * d[:, None] * d[None, :])
    weights = rng.dirichlet(np.ones(K))
    # tidy the simplex sum to the 1e-12 invariant
    weights = weights / weights.sum()
    return GaussianMixture(weights, means, covs)


# ---------------------------------------------------------------------------
# Probit regression


@maybe_jit
def _probit_logpost_kernel(beta, params):
    X, sgn, inv_var, prior_log_norm = params
    N, p = X.shape
    acc = prior_log_norm
    for j in range(p):
        acc -= 0.5 * beta[j] * beta[j] * inv_var[j]
    for i in range(N):
        m = 0.0
        for j in range(p):
            m += X[i, j] * beta[j]
        acc += log_ndtr_s(sgn[i] * m)
    return acc


def _probit_logpost_batch(betas, params, chunk=4_000_000):
    X, sgn, inv_var, prior_log_norm = params
    n = betas.shape[0]
    out = np.empty(n)
    rows = max(1, chunk // X.shape[0])
    for s in range(0, n, rows):
        e = min(n, s + rows)
        M = betas[s:e] @ X.T
        out[s:e] = _sp.log_ndtr(sgn * M).sum(axis=1)
    out += prior_log_norm - 0.5 * (betas * betas * inv_var).sum(axis=1)
    return out


def _probit_logpost_py(beta, params):
    return float(_probit_logpost_batch(beta[None, :], params)[0])


class ProbitModel:
    """Binary probit regression with independent normal priors on beta."""

    def __init__(self, X, y, prior_variance=100.0):
        self.X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        self.y = np.asarray(y)
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y length must match rows of X")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("y entries must be 0 or 1")
        pv = np.asarray(prior_variance, dtype=np.float64)
        if pv.ndim == 0:
            pv = np.full(self.X.shape[1], float(pv))
        if pv.shape != (self.X.shape[1],) or np.any(pv <= 0):
            raise ValueError("prior_variance must be positive (scalar or length-p)")
        self.prior_variance = pv
        self._sgn = np.ascontiguousarray(2.0 * self.y.astype(np.float64) - 1.0)
        prior_log_norm = -0.5 * float(np.sum(np.log(2.0 * np.pi * pv)))
        self._params = (self.X, self._sgn, np.ascontiguousarray(1.0 / pv), prior_log_norm)

    @property
    def n_obs(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def log_posterior(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        if beta.shape != (self.dim,):
            raise ValueError(f"beta has shape {beta.shape}, expected ({self.dim},)")
        return _probit_logpost_py(beta, self._params)

    def log_posterior_batch(self, betas):
        return _probit_logpost_batch(np.atleast_2d(np.asarray(betas, dtype=np.float64)),
                                     self._params)

    def target(self):
        kern = _probit_logpost_kernel if NUMBA_ENABLED else _probit_logpost_py
        params = self._params
        return Target(
            self.dim,
            log_g=lambda b: _probit_logpost_py(b, params),
            support_description="R^p",
            kernel=kern, kernel_params=params,
            batch_log_g=lambda bs: _probit_logpost_batch(bs, params),
        )

    @classmethod
    def from_csv(cls, x_path, y_path, prior_variance=100.0):
        X = np.loadtxt(x_path, delimiter=",", skiprows=1, ndmin=2)
        y = np.loadtxt(y_path, delimiter=",", skiprows=1).astype(np.int64)
        return cls(X, y, prior_variance)


def probit_log_posterior(m, beta):
    return m.log_posterior(beta)


def simulate_probit_single(n=2000, beta=5.0 / math.sqrt(2.0), seed=0):
    """Single Bernoulli(1/2) covariate, success probability Phi(x*beta)."""
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n).astype(np.float64)
    y = (x * beta + rng.standard_normal(n) > 0.0).astype(np.int64)
    return x[:, None], y


def simulate_probit_multi(n=500, seed=0):
    """Eight-covariate design (intercept, binary, uniform, normal, exponential,
    shifted normal, Poisson, wide normal) with a fixed sparse coefficient vector."""
    rng = np.random.default_rng(seed)
    beta = np.array([0.25, 5.0, 1.0, -1.5, -0.1, 0.0, 0.0, 0.0])
    X = np.column_stack([
        np.ones(n),
        rng.integers(0, 2, size=n).astype(np.float64),
        rng.uniform(0.0, 1.0, size=n),
        rng.standard_normal(n),
        rng.exponential(1.0, size=n),
        rng.normal(5.0, 1.0, size=n),
        rng.poisson(10.0, size=n).astype(np.float64),
        rng.normal(20.0, 5.0, size=n),
    ])
    y = (X @ beta + rng.standard_normal(n) > 0.0).astype(np.int64)
    return X, y, beta


# ---------------------------------------------------------------------------
# Loss-of-heterozygosity mixture model


@maybe_jit
def _loh_logpost_kernel(theta, params):
    x, n, log_choose, bound = params
    for j in range(4):
        if not (-bound <= theta[j] <= bound):
            return -np.inf
    t_eta, t_p1, t_p2, gamma = theta[0], theta[1], theta[2], theta[3]
    log_eta = log_sigmoid_s(t_eta)
    log_1m_eta = log_sigmoid_s(-t_eta)
    log_p1 = log_sigmoid_s(t_p1)
    log_1m_p1 = log_sigmoid_s(-t_p1)
    om2 = 0.5 / (1.0 + math.exp(-gamma))
    # 1 - sigmoid(t) computed as sigmoid(-t) keeps relative precision at the
    # box corners where pi2 is within 1e-13 of 0 or 1
    a = (1.0 / (1.0 + math.exp(-t_p2))) / om2
    b = (1.0 / (1.0 + math.exp(t_p2))) / om2
    lden = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    total = 0.0
    for i in range(x.shape[0]):
        lbin = log_choose[i] + x[i] * log_p1 + (n[i] - x[i]) * log_1m_p1
        lbb = (log_choose[i] + math.lgamma(x[i] + a) + math.lgamma(n[i] - x[i] + b)
               - math.lgamma(n[i] + a + b) - lden)
        u = log_eta + lbin
        v = log_1m_eta + lbb
        hi = u if u > v else v
        total += hi + math.log(math.exp(u - hi) + math.exp(v - hi))
    return total


def _loh_logpost_batch(thetas, params, chunk=100_000):
    # chunked: the row-by-locus intermediates would otherwise reach
    # gigabytes for the million-row batches the weight estimator sends
    x, n, log_choose, bound = params
    out = np.full(thetas.shape[0], -np.inf)
    ok = np.all(np.abs(thetas) <= bound, axis=1)
    if not ok.any():
        return out
    idx = np.flatnonzero(ok)
    for s in range(0, idx.size, chunk):
        th = thetas[idx[s:s + chunk]]
        log_eta = -np.logaddexp(0.0, -th[:, 0])
        log_1m_eta = -np.logaddexp(0.0, th[:, 0])
        log_p1 = -np.logaddexp(0.0, -th[:, 1])
        log_1m_p1 = -np.logaddexp(0.0, th[:, 1])
        om2 = 0.5 * _sp.expit(th[:, 3])
        a = (_sp.expit(th[:, 2]) / om2)[:, None]
        b = (_sp.expit(-th[:, 2]) / om2)[:, None]
        lden = _sp.gammaln(a) + _sp.gammaln(b) - _sp.gammaln(a + b)
        lbin = log_choose + x * log_p1[:, None] + (n - x) * log_1m_p1[:, None]
        lbb = (log_choose + _sp.gammaln(x + a) + _sp.gammaln(n - x + b)
               - _sp.gammaln(n + a + b) - lden)
        terms = np.logaddexp(log_eta[:, None] + lbin, log_1m_eta[:, None] + lbb)
        out[idx[s:s + chunk]] = terms.sum(axis=1)
    return out


def _loh_logpost_py(theta, params):
    return float(_loh_logpost_batch(theta[None, :], params)[0])


class LohModel:
    """Two-component binomial / beta-binomial mixture for loss counts.

    The chain state is the unconstrained vector (logit eta, logit pi1,
    logit pi2, gamma) with a flat prior on the open box (-30,30)^4.
    """

    DIM = 4

    def __init__(self, x, n, bound=30.0):
        x = np.asarray(x, dtype=np.float64)
        n = np.asarray(n, dtype=np.float64)
        if x.shape != n.shape or x.ndim != 1:
            raise ValueError("x and n must be equal-length vectors")
        if np.any(x < 0) or np.any(x > n):
            raise ValueError("need 0 <= x_i <= n_i")
        if not (np.all(x == np.floor(x)) and np.all(n == np.floor(n))):
            raise ValueError("counts must be integers")
        self.x = x
        self.n = n
        self.bound = float(bound)
        log_choose = _sp.gammaln(n + 1.0) - _sp.gammaln(x + 1.0) - _sp.gammaln(n - x + 1.0)
        self._params = (np.ascontiguousarray(x), np.ascontiguousarray(n),
                        np.ascontiguousarray(log_choose), self.bound)

    @property
    def dim(self):
        return self.DIM

    @staticmethod
    def to_constrained(theta):
        """(logit eta, logit pi1, logit pi2, gamma) -> (eta, pi1, pi2, gamma)."""
        theta = np.asarray(theta, dtype=np.float64)
        out = np.empty_like(theta)
        out[..., 0] = _sp.expit(theta[..., 0])
        out[..., 1] = _sp.expit(theta[..., 1])
        out[..., 2] = _sp.expit(theta[..., 2])
        out[..., 3] = theta[..., 3]
        return out

    def log_posterior(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (4,):
            raise ValueError(f"theta has shape {theta.shape}, expected (4,)")
        if not np.isfinite(theta).all():
            raise ValueError("non-finite input")
        return _loh_logpost_py(theta, self._params)

    def log_posterior_batch(self, thetas):
        return _loh_logpost_batch(np.atleast_2d(np.asarray(thetas, dtype=np.float64)),
                                  self._params)

    def target(self):
        kern = _loh_logpost_kernel if NUMBA_ENABLED else _loh_logpost_py
        params = self._params
        return Target(
            4,
            log_g=lambda th: _loh_logpost_py(th, params),
            support_description="open box (-30,30)^4",
            kernel=kern, kernel_params=params,
            batch_log_g=lambda ths: _loh_logpost_batch(ths, params),
        )

    @classmethod
    def from_csv(cls, path):
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def bundled(cls):
        ref = importlib.resources.files("chainpool") / "data" / "loh.csv"
        with importlib.resources.as_file(ref) as path:
            return cls.from_csv(path)


def loh_log_posterior(m, theta):
    return m.log_posterior(theta)
