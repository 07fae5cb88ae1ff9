"""Per-element mass estimation and weight construction.

Each partition element gets a fitted heavy-tailed instrumental; unbiased
importance-sampling replicates of the element's unnormalized mass feed
either the ratio estimator (column sums over grand sum) or a grouped
pseudo-marginal chain on the element index.  All heavy arithmetic is
done in log space with shifted exponentials.
"""

import json
import pathlib
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .executor import REPLICATE_DOMAIN, derive_rng, parallel_map
from .samplers import t4_trajectory_batch

CENTER_MODES = ("cluster_center", "empirical_mode", "empirical_mean")
METHODS = ("ratio", "pseudo_marginal")


class MvtDist:
    """Multivariate t location-scale family; nu=inf gives the normal limit.

    The effective scale matrix is inflation * S, so sample covariance is
    inflation * nu/(nu-2) * S for finite nu.
    """

    def __init__(self, m, S, nu=4.0, inflation=1.0):
        self.m = np.asarray(m, dtype=np.float64).reshape(-1)
        self.S = np.asarray(S, dtype=np.float64)
        p = self.m.size
        if self.S.shape != (p, p):
            raise ValueError("scale matrix shape mismatch")
        if not np.allclose(self.S, self.S.T, atol=1e-10):
            raise ValueError("scale matrix must be symmetric")
        if not (nu > 2.0):
            raise ValueError("nu must exceed 2 (finite variance) or be inf")
        if inflation <= 0:
            raise ValueError("inflation must be positive")
        self.nu = float(nu)
        self.inflation = float(inflation)
        sigma = self.inflation * 0.5 * (self.S + self.S.T)
        self._chol = np.linalg.cholesky(sigma)
        self._log_det = 2.0 * np.log(np.diag(self._chol)).sum()
        self.dim = p

    def logpdf_batch(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        d = x - self.m
        u = solve_triangular(self._chol, d.T, lower=True).T
        r2 = np.einsum("np,np->n", u, u)
        p = self.dim
        if np.isinf(self.nu):
            return -0.5 * (r2 + p * np.log(2.0 * np.pi) + self._log_det)
        nu = self.nu
        return (gammaln(0.5 * (nu + p)) - gammaln(0.5 * nu)
                - 0.5 * p * np.log(nu * np.pi) - 0.5 * self._log_det
                - 0.5 * (nu + p) * np.log1p(r2 / nu))

    def logpdf(self, x):
        return float(self.logpdf_batch(np.asarray(x).reshape(1, -1))[0])

    def sample(self, n, rng):
        # fixed draw order: normals first, then chi-square mixing
        z = rng.standard_normal((n, self.dim))
        x = self.m + z @ self._chol.T
        if np.isinf(self.nu):
            return x
        w = rng.chisquare(self.nu, size=n)
        return self.m + (x - self.m) / np.sqrt(w / self.nu)[:, None]


@dataclass
class WeightEstimate:
    c_hats: np.ndarray          # n x J replicate mass estimates
    w_hat: np.ndarray           # simplex weights, length J
    method: str
    mcse: np.ndarray = field(default=None)

    def __post_init__(self):
        self.c_hats = np.atleast_2d(np.asarray(self.c_hats, dtype=np.float64))
        self.w_hat = np.asarray(self.w_hat, dtype=np.float64).reshape(-1)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if np.any(self.c_hats < 0):
            raise ValueError("mass replicates must be nonnegative")
        if np.any(self.w_hat < 0) or abs(self.w_hat.sum() - 1.0) > 1e-12:
            raise ValueError("w_hat must be a simplex vector")
        if self.mcse is None:
            self.mcse = np.zeros_like(self.w_hat)
        else:
            self.mcse = np.asarray(self.mcse, dtype=np.float64).reshape(-1)

    @property
    def n_elements(self):
        return self.w_hat.size


def fit_instrumental(element_draws, center_mode="cluster_center", inflation=1.0,
                     nu=4.0, cluster_center=None, log_g_values=None):
    """Fit a t_nu instrumental to one element's pooled draws.

    Location follows center_mode; scale is the empirical covariance with
    a tiny ridge (1e-8 * mean diagonal), multiplied by `inflation`.
    """
    x = np.atleast_2d(np.asarray(element_draws, dtype=np.float64))
    n, p = x.shape
    if n < p + 2:
        raise ValueError(
            f"element has {n} draws but needs at least {p + 2}: "
            "needs more exploration or a coarser partition")
    if center_mode not in CENTER_MODES:
        raise ValueError(f"unknown center_mode {center_mode!r}")
    if center_mode == "cluster_center":
        if cluster_center is None:
            raise ValueError("cluster_center required for this center_mode")
        m = np.asarray(cluster_center, dtype=np.float64)
    elif center_mode == "empirical_mode":
        if log_g_values is None:
            raise ValueError("log_g_values required for empirical_mode")
        m = x[int(np.argmax(log_g_values))]
    else:
        m = x.mean(axis=0)
    S = np.cov(x, rowvar=False).reshape(p, p)
    tr = np.trace(S)
    ridge = 1e-8 * (tr / p if tr > 0 else 1.0)
    S = S + ridge * np.eye(p)
    return MvtDist(m, S, nu=nu, inflation=inflation)


def _shifted_exp_row_means(log_w, keep):
    """Row means of exp(log_w)*keep, computed per row via a shifted sum."""
    lw = np.where(keep, log_w, -np.inf)
    M = lw.max(axis=1)
    out = np.zeros(lw.shape[0])
    ok = np.isfinite(M)
    if np.any(ok):
        shifted = np.exp(lw[ok] - M[ok, None])
        out[ok] = np.exp(M[ok]) * shifted.sum(axis=1) / lw.shape[1]
    return out


def _concentration_check(log_w, keep, context):
    lw = log_w[keep]
    if lw.size < 2:
        return
    srt = np.sort(lw)[::-1]
    k = max(1, int(np.ceil(0.01 * srt.size)))
    M = srt[0]
    total = np.exp(srt - M).sum()
    top = np.exp(srt[:k] - M).sum()
    if top > 0.5 * total:
        warnings.warn(
            f"{context}: top 1% of importance weights carry "
            f"{100 * top / total:.0f}% of the mass (max log weight {M:.2f}); "
            "the instrumental may be too light-tailed for this element",
            RuntimeWarning, stacklevel=3)


def is_c_hat_batch(target, q, element, partition, n, T, rng, warn=True):
    """n independent T-draw importance estimates of element mass."""
    if T < 1 or n < 1:
        raise ValueError("n and T must be >= 1")
    x = q.sample(n * T, rng)
    lg = target.log_g_batch(x)
    lq = np.asarray(q.logpdf_batch(x))
    keep = partition.assign_batch(x) == element
    log_w = (lg - lq).reshape(n, T)
    keep = keep.reshape(n, T)
    if warn:
        _concentration_check(log_w, keep, f"element {element}")
    return _shifted_exp_row_means(log_w, keep)


def is_c_hat(target, q, element, partition, T, rng):
    """Single unbiased importance-sampling estimate of element mass."""
    return float(is_c_hat_batch(target, q, element, partition, 1, T, rng,
                                warn=False)[0])


def trajectory_c_hat_batch(target, q_center, element, partition, n, T, sigma,
                           rng, drift=True, nu=4.0, warn=True):
    """n trajectory-based mass estimates, one per T-state path.

    Per-state instrumental densities: the start state uses q_center, and
    each later state uses its one-step innovation density conditional on
    the realized previous state, so every state contributes an unbiased
    mass estimate and the path average stays unbiased.
    """
    states, state_logq = t4_trajectory_batch(q_center, target, n, T, sigma,
                                             rng, drift=drift, nu=nu)
    flat = states.reshape(n * T, -1)
    lg = target.log_g_batch(flat).reshape(n, T)
    keep = (partition.assign_batch(flat) == element).reshape(n, T)
    logq = state_logq.copy()
    if sigma == 0.0 and T > 1:
        # frozen path: every state is the start point, so the start
        # density is the only instrumental in play
        logq[:, 1:] = logq[:, :1]
    log_w = lg - logq
    if warn:
        _concentration_check(log_w, keep, f"element {element}")
    return _shifted_exp_row_means(log_w, keep)


def trajectory_c_hat(target, q_center, element, partition, T, sigma, rng,
                     drift=True, nu=4.0):
    return float(trajectory_c_hat_batch(target, q_center, element, partition,
                                        1, T, sigma, rng, drift=drift, nu=nu,
                                        warn=False)[0])


def ratio_weights(c_hats):
    """Column sums over grand sum; consistent though not unbiased."""
    c = np.atleast_2d(np.asarray(c_hats, dtype=np.float64))
    if np.any(c < 0):
        raise ValueError("mass replicates must be nonnegative")
    col = c.sum(axis=0)
    total = col.sum()
    if total <= 0:
        raise ValueError("all mass replicates are zero; nothing to weight")
    return col / total


def ratio_weight_se(c_hats):
    """Delta-method standard errors for ratio_weights.

    With row vectors c_i iid, w_j = mean(c_j)/mean(s), s = sum_k c_k;
    Var(w_j) ~ (V_jj/m_s^2 + m_j^2 V_ss/m_s^4 - 2 m_j V_js/m_s^3)/n.
    """
    c = np.atleast_2d(np.asarray(c_hats, dtype=np.float64))
    n, J = c.shape
    if n < 2:
        return np.zeros(J)
    m_s = c.sum(axis=1).mean()
    if m_s <= 0:
        return np.zeros(J)
    # w is scale-free but the raw masses can sit near 1e-150 for long
    # likelihoods, where m_s**4 underflows; rescale before the delta method
    c = c / m_s
    s = c.sum(axis=1)
    m_c = c.mean(axis=0)
    m_s = 1.0
    var = np.empty(J)
    for j in range(J):
        cov = np.cov(c[:, j], s, ddof=1)
        var[j] = (cov[0, 0] / m_s ** 2
                  + m_c[j] ** 2 * cov[1, 1] / m_s ** 4
                  - 2.0 * m_c[j] * cov[0, 1] / m_s ** 3) / n
    return np.sqrt(np.maximum(var, 0.0))


def pseudo_marginal_weights(c_hat_sampler, n_elements, iters, rng,
                            max_retries=100, return_visits=False):
    """Occupancy of a grouped pseudo-marginal chain on the element index.

    Uniform proposals over elements; acceptance min(1, fresh/retained);
    the retained mass estimate is replaced whenever a move is accepted.
    """
    J = int(n_elements)
    if J < 1 or iters < 1:
        raise ValueError("need n_elements >= 1 and iters >= 1")
    if J == 1:
        w = np.array([1.0])
        return (w, np.zeros(iters, dtype=np.int64)) if return_visits else w
    j = int(rng.integers(J))
    retained = float(c_hat_sampler(j, rng))
    visits = np.empty(iters, dtype=np.int64)
    for it in range(iters):
        k = int(rng.integers(J))
        fresh = float(c_hat_sampler(k, rng))
        if retained == 0.0 and fresh == 0.0:
            for _ in range(max_retries):
                fresh = float(c_hat_sampler(k, rng))
                if fresh > 0.0:
                    break
            else:
                raise RuntimeError(
                    "pseudo-marginal chain stalled: proposal mass estimates "
                    f"for element {k} stayed zero after {max_retries} retries")
        u = rng.random()
        if retained == 0.0 or u < fresh / retained:
            j, retained = k, fresh
        visits[it] = j
    counts = np.bincount(visits, minlength=J)
    w = counts / iters
    return (w, visits) if return_visits else w


def occupancy_se(visits, n_elements, n_batches=20):
    """Batch-means SE of occupancy frequencies from a visit series."""
    visits = np.asarray(visits)
    if visits.size < n_batches:
        return np.zeros(n_elements)
    batches = np.array_split(visits, n_batches)
    freqs = np.stack([np.bincount(b, minlength=n_elements) / b.size
                      for b in batches])
    return freqs.std(axis=0, ddof=1) / np.sqrt(n_batches)


def estimate_weights(target, partition, instrumentals, n_replicates, T,
                     method="ratio", estimator="trajectory", sigma=1.0,
                     drift=True, nu=4.0, seed=0, workers=1, pm_iters=None):
    """Full weight-estimation pass over all partition elements.

    instrumentals: list of MvtDist, one per element.  Replicates for
    element j come from a dedicated RNG stream derived from (seed, j),
    so results do not depend on worker count.
    """
    J = partition.n_elements
    if len(instrumentals) != J:
        raise ValueError("need one instrumental per element")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")

    def replicates_for(j):
        rng = derive_rng(seed, REPLICATE_DOMAIN, j)
        if estimator == "trajectory":
            return trajectory_c_hat_batch(target, instrumentals[j], j,
                                          partition, n_replicates, T, sigma,
                                          rng, drift=drift, nu=nu)
        if estimator == "independent":
            return is_c_hat_batch(target, instrumentals[j], j, partition,
                                  n_replicates, T, rng)
        raise ValueError(f"unknown estimator {estimator!r}")

    cols = parallel_map(replicates_for, range(J), workers=workers)
    c_hats = np.column_stack(cols)

    if method == "ratio":
        w = ratio_weights(c_hats)
        se = ratio_weight_se(c_hats)
        return WeightEstimate(c_hats, w, "ratio", se)

    iters = pm_iters if pm_iters is not None else max(1000, 10 * n_replicates)
    pm_rng = derive_rng(seed, REPLICATE_DOMAIN, J)

    def one_fresh(j, rng):
        if estimator == "trajectory":
            return trajectory_c_hat_batch(target, instrumentals[j], j,
                                          partition, 1, T, sigma, rng,
                                          drift=drift, nu=nu, warn=False)[0]
        return is_c_hat_batch(target, instrumentals[j], j, partition, 1, T,
                              rng, warn=False)[0]

    w, visits = pseudo_marginal_weights(one_fresh, J, iters, pm_rng,
                                        return_visits=True)
    se = occupancy_se(visits, J)
    return WeightEstimate(c_hats, w, "pseudo_marginal", se)


def save_weights(path, estimate, T):
    doc = {"method": estimate.method,
           "c_hat_summary": {
               "n": int(estimate.c_hats.shape[0]),
               "T": int(T),
               "mean": estimate.c_hats.mean(axis=0).tolist(),
               "se": (estimate.c_hats.std(axis=0, ddof=1)
                      / np.sqrt(max(estimate.c_hats.shape[0], 1))).tolist()
               if estimate.c_hats.shape[0] > 1 else
               [0.0] * estimate.n_elements},
           "w_hat": estimate.w_hat.tolist(),
           "w_hat_se": estimate.mcse.tolist()}
    pathlib.Path(path).write_text(json.dumps(doc, indent=1))


def load_weights(path):
    return json.loads(pathlib.Path(path).read_text())
