"""Adaptive Voronoi partition built from pooled early draws.

Clustering greedily picks the densest unclustered draw as a new center
and removes every unclustered draw within eps of it, stopping once at
least (1-alpha) of the draws are clustered.  Density is the eps-ball
neighbor count over the full (subsampled) draw set, which is parameter
free given eps and cheap via a KD-tree.  Assignment is nearest center,
optionally after a componentwise logistic map and per-dimension
rescaling to unit standard deviation.
"""

import json
import pathlib

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import expit, logit

TRANSFORMS = ("identity", "logistic")


def _apply_transform(thetas, transform):
    if transform == "identity":
        return np.asarray(thetas, dtype=np.float64)
    if transform == "logistic":
        return expit(np.asarray(thetas, dtype=np.float64))
    raise ValueError(f"unknown transform {transform!r}")


class Partition:
    """Voronoi partition over clustering coordinates.

    Centers live in the clustering space (after transform and
    normalization); `centers_original` maps them back for reporting.
    Immutable after construction, safe for concurrent assign calls.
    """

    def __init__(self, centers, epsilon2, alpha, normalization=None,
                 transform="identity"):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if self.centers.shape[0] < 1:
            raise ValueError("need at least one center")
        if epsilon2 <= 0:
            raise ValueError("epsilon2 must be positive")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {transform!r}")
        self.epsilon2 = float(epsilon2)
        self.alpha = float(alpha)
        self.transform = transform
        p = self.centers.shape[1]
        self.normalization = (np.ones(p) if normalization is None
                              else np.asarray(normalization, dtype=np.float64))
        if self.normalization.shape != (p,):
            raise ValueError("normalization length must match dimension")
        if np.any(self.normalization <= 0):
            raise ValueError("normalization scales must be positive")
        d2 = ((self.centers[:, None, :] - self.centers[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        if d2.min() == 0.0:
            raise ValueError("centers must be pairwise distinct")

    @property
    def n_elements(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    def to_clustering_coords(self, thetas):
        return _apply_transform(thetas, self.transform) / self.normalization

    @property
    def centers_original(self):
        raw = self.centers * self.normalization
        if self.transform == "logistic":
            return logit(raw)
        return raw

    def assign(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError("dimension mismatch")
        if not np.all(np.isfinite(theta)):
            raise ValueError("cannot assign a non-finite point")
        z = self.to_clustering_coords(theta)
        d2 = ((self.centers - z) ** 2).sum(axis=1)
        return int(np.argmin(d2))  # argmin takes the lowest index on ties

    def assign_batch(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        if thetas.shape[1] != self.dim:
            raise ValueError("dimension mismatch")
        if not np.all(np.isfinite(thetas)):
            raise ValueError("cannot assign non-finite points")
        z = self.to_clustering_coords(thetas)
        out = np.empty(z.shape[0], dtype=np.int64)
        step = 8192
        for s in range(0, z.shape[0], step):
            blk = z[s:s + step]
            d2 = ((blk[:, None, :] - self.centers[None, :, :]) ** 2).sum(-1)
            out[s:s + step] = np.argmin(d2, axis=1)
        return out

    def save(self, path):
        doc = {"centers": self.centers.tolist(),
               "epsilon2": self.epsilon2,
               "alpha": self.alpha,
               "normalization": self.normalization.tolist(),
               "transform": self.transform}
        pathlib.Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path):
        doc = json.loads(pathlib.Path(path).read_text())
        return cls(doc["centers"], doc["epsilon2"], doc["alpha"],
                   doc["normalization"], doc["transform"])


def _pooled(draws):
    if hasattr(draws, "post_burnin"):
        return draws.post_burnin
    return np.atleast_2d(np.asarray(draws, dtype=np.float64))


def cluster(draws, epsilon2, alpha, normalize=False, transform="identity",
            max_points=10000):
    """Build a Partition from pooled draws; deterministic given inputs."""
    pts = _pooled(draws)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot cluster an empty draw set")
    if epsilon2 <= 0:
        raise ValueError("epsilon2 must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n > max_points:
        # uniform thinning keeps the subsample deterministic
        idx = np.linspace(0, n - 1, max_points).round().astype(np.int64)
        pts = pts[idx]
        n = pts.shape[0]

    t = _apply_transform(pts, transform)
    if normalize:
        sd = t.std(axis=0)
        sd[sd == 0.0] = 1.0
        norm = sd
    else:
        norm = np.ones(t.shape[1])
    z = np.ascontiguousarray(t / norm)

    eps = float(np.sqrt(epsilon2))
    tree = cKDTree(z)
    density = tree.query_ball_point(z, eps, return_length=True)

    unclustered = np.ones(n, dtype=bool)
    n_clustered = 0
    need = (1.0 - alpha) * n
    centers = []
    while n_clustered < need:
        cand = np.flatnonzero(unclustered)
        c = cand[np.argmax(density[cand])]  # first occurrence wins ties
        centers.append(z[c].copy())
        ball = tree.query_ball_point(z[c], eps)
        hit = np.asarray(ball, dtype=np.int64)
        hit = hit[unclustered[hit]]
        unclustered[hit] = False
        n_clustered += hit.size

    part = Partition(np.array(centers), epsilon2, alpha, norm, transform)
    # every clustered draw sat within eps of its center at removal time;
    # restate that as a checkable property of the finished partition
    dmin2 = np.full(n, np.inf)
    for ctr in part.centers:
        dmin2 = np.minimum(dmin2, ((z - ctr) ** 2).sum(axis=1))
    covered = np.count_nonzero(dmin2 <= epsilon2 * (1 + 1e-12))
    assert covered >= need - 1e-9, "clustering failed its coverage guarantee"
    return part


def element_counts(partition, draws):
    """Post-burn-in draw counts per element, pooled over chains."""
    pts = _pooled(draws)
    if pts.shape[0] == 0:
        return np.zeros(partition.n_elements, dtype=np.int64)
    labels = partition.assign_batch(pts)
    return np.bincount(labels, minlength=partition.n_elements).astype(np.int64)
