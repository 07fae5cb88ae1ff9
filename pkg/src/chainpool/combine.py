"""Within-element averages and the final weighted combination.

The combined estimate is sum_j w_j * mean_j with a fixed left-to-right
summation order, so the empirical-proportion identity (weights = n_j/n
reproduces the plain pooled mean) holds to floating tolerance.
"""

import json
import pathlib
import warnings
from dataclasses import dataclass

import numpy as np

NEGLIGIBLE_WEIGHT = 0.001


@dataclass
class CombinedEstimate:
    per_element_means: np.ndarray   # J x d
    per_element_se: np.ndarray      # J x d
    weights: np.ndarray             # length J (possibly renormalized)
    counts: np.ndarray              # length J
    combined: np.ndarray            # length d
    combined_se: np.ndarray         # length d


def _batch_means_se(values, n_batches=20):
    """Batch-means MCSE of the mean of a (possibly dependent) series."""
    n = values.shape[0]
    if n < 2 * n_batches:
        # too short for batching: fall back to the iid formula
        return values.std(axis=0, ddof=1) / np.sqrt(max(n, 2))
    batches = np.array_split(values, n_batches)
    bm = np.stack([b.mean(axis=0) for b in batches])
    return bm.std(axis=0, ddof=1) / np.sqrt(n_batches)


def element_means(f, draws, partition):
    """Per-element pooled means of f with nonzero-count bookkeeping.

    Returns (means J x d, se J x d, counts length J).  Empty elements get
    NaN means and zero counts; callers decide whether that is fatal.
    Draws enter in (chain, iteration) order so batch-means SEs see the
    serial dependence within each chain.
    """
    pts = draws.post_burnin if hasattr(draws, "post_burnin") else np.atleast_2d(draws)
    J = partition.n_elements
    if pts.shape[0] == 0:
        try:
            d = np.atleast_2d(f(np.zeros((0, partition.dim)))).shape[1]
        except Exception:
            d = 1
        return (np.full((J, d), np.nan), np.zeros((J, d)),
                np.zeros(J, dtype=np.int64))
    labels = partition.assign_batch(pts)
    fx = np.atleast_2d(np.asarray(f(pts), dtype=np.float64))
    if fx.shape[0] != pts.shape[0]:
        fx = fx.T
    d = fx.shape[1]
    means = np.full((J, d), np.nan)
    ses = np.zeros((J, d))
    counts = np.zeros(J, dtype=np.int64)
    for j in range(J):
        sel = labels == j
        counts[j] = np.count_nonzero(sel)
        if counts[j] > 0:
            vals = fx[sel]
            means[j] = vals.mean(axis=0)
            ses[j] = _batch_means_se(vals) if counts[j] > 1 else 0.0
    return means, ses, counts


def combine(per_element_means, counts, w_hat, per_element_se=None,
            w_hat_se=None):
    """Weighted combination mu = sum_j w_j mu_j with error propagation.

    SE formula (delta method, elements treated as independent):
        SE(mu)^2 = sum_j w_j^2 SE(mu_j)^2 + sum_j SE(w_j)^2 (mu_j - mu)^2
    first term: within-element mean noise; second: weight noise acting
    on the spread of element means about the combination.
    """
    mu = np.atleast_2d(np.asarray(per_element_means, dtype=np.float64))
    counts = np.asarray(counts, dtype=np.int64).reshape(-1)
    w = np.asarray(w_hat, dtype=np.float64).reshape(-1)
    J, d = mu.shape
    if counts.size != J or w.size != J:
        raise ValueError("length mismatch between means, counts, and weights")
    se_mu = (np.zeros((J, d)) if per_element_se is None
             else np.atleast_2d(np.asarray(per_element_se, dtype=np.float64)))
    se_w = (np.zeros(J) if w_hat_se is None
            else np.asarray(w_hat_se, dtype=np.float64).reshape(-1))

    empty = counts == 0
    if np.any(empty & (w > NEGLIGIBLE_WEIGHT)):
        bad = np.flatnonzero(empty & (w > NEGLIGIBLE_WEIGHT))
        raise ValueError(
            f"unexplored element has non-negligible weight: element(s) "
            f"{bad.tolist()} carry weight {w[bad].round(4).tolist()} but "
            "hold no draws")
    if np.any(empty & (w > 0)):
        dropped = np.flatnonzero(empty & (w > 0))
        warnings.warn(
            f"dropping empty element(s) {dropped.tolist()} with negligible "
            f"total weight {w[empty].sum():.2e}; renormalizing",
            RuntimeWarning, stacklevel=2)
    keep = ~empty
    w_used = np.where(keep, w, 0.0)
    total = w_used.sum()
    if total <= 0:
        raise ValueError("no usable elements after dropping empty ones")
    w_used = w_used / total

    combined = np.zeros(d)
    for j in range(J):          # fixed order keeps the identity exact
        combined += w_used[j] * np.where(keep[j], mu[j], 0.0)
    var = np.zeros(d)
    for j in range(J):
        if keep[j]:
            var += w_used[j] ** 2 * se_mu[j] ** 2
            var += se_w[j] ** 2 * (mu[j] - combined) ** 2
    return CombinedEstimate(mu, se_mu, w_used, counts, combined, np.sqrt(var))


def weighted_empirical(draws, partition, w_hat):
    """Per-draw masses w_j / n_j over pooled post-burn-in draws.

    Returns (points, masses); masses sum to 1 after any negligible-weight
    drops are renormalized away.
    """
    pts = draws.post_burnin if hasattr(draws, "post_burnin") else np.atleast_2d(draws)
    w = np.asarray(w_hat, dtype=np.float64).reshape(-1)
    labels = partition.assign_batch(pts)
    counts = np.bincount(labels, minlength=partition.n_elements)
    empty = counts == 0
    if np.any(empty & (w > NEGLIGIBLE_WEIGHT)):
        bad = np.flatnonzero(empty & (w > NEGLIGIBLE_WEIGHT))
        raise ValueError(
            f"unexplored element has non-negligible weight: element(s) "
            f"{bad.tolist()}")
    w_used = np.where(empty, 0.0, w)
    total = w_used.sum()
    if total <= 0:
        raise ValueError("no usable elements")
    if np.any(empty & (w > 0)):
        warnings.warn("dropping empty element(s) with negligible weight; "
                      "renormalizing", RuntimeWarning, stacklevel=2)
    w_used = w_used / total
    nonzero = counts > 0
    per_draw = np.zeros(partition.n_elements)
    per_draw[nonzero] = w_used[nonzero] / counts[nonzero]
    return pts, per_draw[labels]


def resample(points, masses, n, rng):
    """Draw n points iid from the weighted empirical measure."""
    idx = rng.choice(points.shape[0], size=n, p=masses / masses.sum())
    return points[idx]


def save_report(path, estimate):
    doc = {"w_hat": estimate.weights.tolist(),
           "per_element": [
               {"n": int(estimate.counts[j]),
                "mean": estimate.per_element_means[j].tolist(),
                "se": estimate.per_element_se[j].tolist()}
               for j in range(estimate.weights.size)],
           "combined": {"mean": estimate.combined.tolist(),
                        "se": estimate.combined_se.tolist()}}
    pathlib.Path(path).write_text(json.dumps(doc, indent=1))


def load_report(path):
    return json.loads(pathlib.Path(path).read_text())
