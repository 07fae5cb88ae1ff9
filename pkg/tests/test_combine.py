import numpy as np
import pytest

from chainpool.combine import (
    combine, element_means, load_report, resample, save_report,
    weighted_empirical,
)
from chainpool.partition import Partition
from chainpool.targets import demo_mixture_2d

# cell-restricted posterior means of the 4-mode demo target, by 1600^2
# midpoint-rule quadrature over [-16, 18]^2
CELL_MEANS = np.array([[2.971368, 2.916602],
                       [7.005324, -3.002415],
                       [1.984810, 6.990021],
                       [-5.004385, -0.007363]])
CELL_MASSES = np.array([0.020090, 0.199748, 0.201053, 0.579104])


def mode_partition():
    return Partition(demo_mixture_2d().means, 9.0, 0.01)


def pooled_sample(n=50000, seed=0):
    return demo_mixture_2d().sample(n, np.random.default_rng(seed))


class TestElementMeans:
    def test_single_element_is_pooled_mean(self):
        pts = pooled_sample(2000)
        part = Partition([[0.0, 0.0]], 1.0, 0.05)
        means, ses, counts = element_means(lambda x: x, pts, part)
        assert counts.tolist() == [2000]
        assert np.allclose(means[0], pts.mean(axis=0), atol=1e-12)
        assert np.all(ses[0] > 0)

    def test_indicator_function(self):
        pts = pooled_sample(5000)
        part = mode_partition()
        labels = part.assign_batch(pts)
        means, _, counts = element_means(
            lambda x: (part.assign_batch(x) == 2).astype(float), pts, part)
        for j in range(4):
            if counts[j] > 0:
                assert means[j, 0] == (1.0 if j == 2 else 0.0)
        assert counts.tolist() == np.bincount(labels, minlength=4).tolist()

    def test_cell_means_match_quadrature(self):
        pts = pooled_sample(200000)
        means, ses, counts = element_means(lambda x: x, pts, mode_partition())
        assert np.all(np.abs(means - CELL_MEANS) < 0.05)
        # and each sits within 0.1 per coordinate of its mode
        assert np.all(np.abs(means - demo_mixture_2d().means) < 0.1)

    def test_empty_element_flagged(self):
        pts = np.zeros((10, 2))
        part = Partition([[0.0, 0.0], [50.0, 0.0]], 1.0, 0.05)
        means, ses, counts = element_means(lambda x: x, pts, part)
        assert counts.tolist() == [10, 0]
        assert np.all(np.isnan(means[1]))

    def test_empty_store(self):
        part = mode_partition()
        means, ses, counts = element_means(lambda x: x, np.empty((0, 2)), part)
        assert counts.sum() == 0
        assert means.shape == (4, 2)


class TestCombine:
    def test_empirical_proportions_identity(self):
        pts = pooled_sample()
        part = mode_partition()
        means, ses, counts = element_means(lambda x: x, pts, part)
        w = counts / counts.sum()
        est = combine(means, counts, w)
        assert np.all(np.abs(est.combined - pts.mean(axis=0)) < 1e-12)

    def test_grouped_weight_arithmetic(self):
        # seven elements mapping onto four components: one-hot means turn
        # the combination into per-component weight sums
        w7 = np.array([0.378, 0.201, 0.201, 0.105, 0.020, 0.093, 0.002])
        group = [3, 1, 2, 3, 0, 3, 3]
        means = np.eye(4)[group]
        est = combine(means, np.ones(7, dtype=int), w7)
        assert np.allclose(est.combined, [0.020, 0.201, 0.201, 0.578],
                           atol=1e-12)

    def test_single_element(self):
        est = combine(np.array([[1.5, -2.0]]), [10], [1.0])
        assert np.array_equal(est.combined, [1.5, -2.0])

    def test_linearity(self):
        pts = pooled_sample(8000)
        part = mode_partition()
        f = lambda x: x
        g = lambda x: np.column_stack([x[:, 0] ** 2, np.sin(x[:, 1])])
        mf, _, counts = element_means(f, pts, part)
        mg, _, _ = element_means(g, pts, part)
        w = CELL_MASSES
        lhs = combine(2.0 * mf + 3.0 * mg, counts, w).combined
        rhs = (2.0 * combine(mf, counts, w).combined
               + 3.0 * combine(mg, counts, w).combined)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_label_permutation(self):
        rng = np.random.default_rng(1)
        means = rng.normal(size=(5, 3))
        counts = rng.integers(1, 100, size=5)
        w = rng.dirichlet(np.ones(5))
        perm = rng.permutation(5)
        a = combine(means, counts, w).combined
        b = combine(means[perm], counts[perm], w[perm]).combined
        assert np.allclose(a, b, atol=1e-12)

    def test_unexplored_element_error(self):
        means = np.array([[1.0], [np.nan]])
        with pytest.raises(ValueError, match="unexplored element"):
            combine(means, [10, 0], [0.9, 0.1])

    def test_negligible_empty_dropped_with_warning(self):
        means = np.array([[2.0], [np.nan]])
        with pytest.warns(RuntimeWarning, match="dropping empty"):
            est = combine(means, [10, 0], [0.9995, 0.0005])
        assert np.allclose(est.combined, [2.0])
        assert np.allclose(est.weights, [1.0, 0.0])

    def test_se_propagation_formula(self):
        # hand-computed delta-method variance on a two-element case
        est = combine(np.array([[0.0], [1.0]]), [5, 5], [0.5, 0.5],
                      per_element_se=np.array([[0.1], [0.2]]),
                      w_hat_se=np.array([0.05, 0.05]))
        want = np.sqrt(0.25 * 0.01 + 0.25 * 0.04
                       + 0.0025 * 0.25 + 0.0025 * 0.25)
        assert np.isclose(est.combined_se[0], want, rtol=1e-12)

    def test_zero_se_inputs_give_zero_se(self):
        est = combine(np.array([[1.0], [3.0]]), [4, 4], [0.25, 0.75])
        assert np.array_equal(est.combined_se, [0.0])


class TestWeightedEmpirical:
    def test_single_element_uniform(self):
        pts = pooled_sample(1000)
        part = Partition([[0.0, 0.0]], 1.0, 0.05)
        out, masses = weighted_empirical(pts, part, [1.0])
        assert np.allclose(masses, 1.0 / 1000)
        assert masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_expectation_matches_combine(self):
        pts = pooled_sample(20000)
        part = mode_partition()
        means, _, counts = element_means(lambda x: x, pts, part)
        w = CELL_MASSES / CELL_MASSES.sum()
        est = combine(means, counts, w)
        out, masses = weighted_empirical(pts, part, w)
        assert np.allclose(masses @ out, est.combined, atol=1e-12)

    def test_resample_occupancy(self):
        pts = pooled_sample(100000, seed=3)
        part = mode_partition()
        w = CELL_MASSES / CELL_MASSES.sum()
        out, masses = weighted_empirical(pts, part, w)
        res = resample(out, masses, 100000, np.random.default_rng(4))
        occ = np.bincount(part.assign_batch(res), minlength=4) / 100000
        assert np.all(np.abs(occ - [0.02, 0.20, 0.20, 0.58]) < 0.01)

    def test_unexplored_error(self):
        pts = np.zeros((10, 2))
        part = Partition([[0.0, 0.0], [50.0, 0.0]], 1.0, 0.05)
        with pytest.raises(ValueError, match="unexplored"):
            weighted_empirical(pts, part, [0.5, 0.5])


def test_report_round_trip(tmp_path):
    pts = pooled_sample(5000)
    part = mode_partition()
    means, ses, counts = element_means(lambda x: x, pts, part)
    est = combine(means, counts, counts / counts.sum(), per_element_se=ses)
    path = tmp_path / "report.json"
    save_report(path, est)
    doc = load_report(path)
    assert np.allclose(doc["w_hat"], est.weights)
    assert np.allclose(doc["combined"]["mean"], est.combined)
    assert doc["per_element"][0]["n"] == int(counts[0])
    assert len(doc["per_element"]) == 4
