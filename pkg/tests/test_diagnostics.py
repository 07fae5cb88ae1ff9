import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import log_ndtr

from chainpool.diagnostics import (
    Discretization, iterations_to_threshold, lag_autocorrelation,
    load_diagnostics, probit1_rejection_sample, probit_multi_bins,
    probit_single_bins, reference_mh_run, save_diagnostics,
    series_iterations_to_threshold, tv_distance, tv_trace,
)
from chainpool.targets import GaussianMixture


class TestDiscretization:
    def test_from_edges_covers_line(self):
        d = Discretization.from_edges([0.0, 1.0, 2.0])
        assert d.n_bins == 4
        p = d.probs(np.array([-5.0, 0.5, 1.5, 99.0]))
        assert p.sum() == pytest.approx(1.0)
        assert np.allclose(p, 0.25)

    def test_half_open_convention(self):
        d = Discretization.from_edges([0.0])
        # (lo, hi]: zero belongs to the left bin
        assert d.probs([0.0]).tolist() == [1.0, 0.0]
        assert d.probs([1e-12]).tolist() == [0.0, 1.0]

    def test_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            Discretization.from_edges([1.0, 1.0])
        with pytest.raises(ValueError, match="disjoint"):
            Discretization([(0.0, 2.0), (1.0, 3.0)])
        with pytest.raises(ValueError, match="lo < hi"):
            Discretization([(2.0, 1.0)])

    def test_single_covariate_bins(self):
        d = probit_single_bins()
        assert d.n_bins == 52
        assert d.intervals[0].tolist() == [-np.inf, 0.0]
        assert d.intervals[1].tolist() == [0.0, 0.5]
        assert d.intervals[-1].tolist() == [25.0, np.inf]
        assert d.probs([12.3]).sum() == pytest.approx(1.0)

    def test_multi_covariate_bins_with_gap(self):
        d = probit_multi_bins()
        assert d.n_bins == 2 + 23 + 9
        ivs = {tuple(r) for r in d.intervals}
        assert (3.5, 4.0) in ivs
        assert (14.5, 15.0) in ivs
        assert (16.0, 17.0) in ivs
        assert (15.0, 16.0) not in ivs
        # a draw inside the uncovered interval belongs to no bin
        assert d.probs([15.5]).sum() == 0.0

    def test_weighted_probs(self):
        d = Discretization.from_edges([0.0])
        p = d.probs([-1.0, 1.0, 2.0], weights=[2.0, 1.0, 1.0])
        assert np.allclose(p, [0.5, 0.5])


class TestTvDistance:
    def test_identical(self):
        p = np.array([0.2, 0.3, 0.5])
        assert tv_distance(p, p) == 0.0

    def test_disjoint(self):
        assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.dirichlet(np.ones(6))
            q = rng.dirichlet(np.ones(6))
            assert tv_distance(p, q) == tv_distance(q, p)
            assert 0.0 <= tv_distance(p, q) <= 1.0

    def test_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p, q, r = rng.dirichlet(np.ones(8), size=3)
            assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-15

    def test_refinement_never_decreases(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0.0, 1.0, size=5000)
        b = rng.normal(0.4, 1.3, size=5000)
        fine = Discretization.from_edges(np.linspace(-4, 4, 33))
        coarse = Discretization.from_edges(np.linspace(-4, 4, 33)[::2])
        tv_fine = tv_distance(fine.probs(a), fine.probs(b))
        tv_coarse = tv_distance(coarse.probs(a), coarse.probs(b))
        assert tv_fine >= tv_coarse - 1e-15

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance([1.0], [0.5, 0.5])


class TestLagAutocorrelation:
    def test_constant_series(self):
        assert lag_autocorrelation(np.ones(10), 0) == 1.0
        with pytest.raises(ValueError, match="constant"):
            lag_autocorrelation(np.ones(10), 1)

    def test_iid_near_zero(self):
        x = np.random.default_rng(3).standard_normal(100000)
        assert abs(lag_autocorrelation(x, 1)) < 3.0 / np.sqrt(x.size)

    def test_alternating(self):
        x = np.tile([1.0, -1.0], 500)
        assert lag_autocorrelation(x, 1) < -0.99

    def test_ar1(self):
        rng = np.random.default_rng(4)
        n, phi = 200000, 0.9
        x = np.empty(n)
        x[0] = 0.0
        eps = rng.standard_normal(n)
        for t in range(1, n):
            x[t] = phi * x[t - 1] + eps[t]
        assert abs(lag_autocorrelation(x, 1) - phi) < 0.01

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            lag_autocorrelation([1.0, 2.0], 5)


class TestIterationsToThreshold:
    def test_self_reference_first_checkpoint(self):
        x = np.random.default_rng(5).standard_normal(50000)
        d = Discretization.from_edges(np.linspace(-3, 3, 13))
        ref = d.probs(x)
        assert series_iterations_to_threshold(x, ref, d, 1.0) == 10000

    def test_known_crossing(self):
        tv_at = lambda m: 0.5 / (m / 10000)
        assert iterations_to_threshold(tv_at, 100000, 0.1) == 50000

    def test_never_crossing(self):
        assert iterations_to_threshold(lambda m: 0.9, 50000, 0.1) == np.inf

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            iterations_to_threshold(lambda m: 0.0, 1000, 0.0)

    def test_trace_rows(self):
        rows = tv_trace(lambda m: 1.0 / m, 30000)
        assert [r[0] for r in rows] == [10000, 20000, 30000]
        assert rows[1][1] == 1.0 / 20000


class TestRejectionOracle:
    def test_matches_quadrature(self):
        rng = np.random.default_rng(6)
        x = rng.integers(0, 2, size=400).astype(float)
        beta_true = 1.2
        y = (x * beta_true + rng.standard_normal(400) > 0).astype(float)
        draws = probit1_rejection_sample(x, y, 10.0, 40000,
                                         np.random.default_rng(7))
        n11 = np.sum((x == 1) & (y == 1))
        n10 = np.sum((x == 1) & (y == 0))

        def post_unnorm(b):
            return np.exp(n11 * log_ndtr(b) + n10 * log_ndtr(-b)
                          + stats.norm(0, 10).logpdf(b))

        # locate the mode on a grid first so quad subdivides near the
        # narrow posterior spike
        grid = np.linspace(-50, 50, 200001)
        bhat = grid[np.argmax(post_unnorm(grid))]
        anchors = [bhat - 1.0, bhat, bhat + 1.0]
        Z, _ = integrate.quad(post_unnorm, -50, 50, limit=200, points=anchors)
        m1, _ = integrate.quad(lambda b: b * post_unnorm(b), -50, 50,
                               limit=200, points=anchors)
        m2, _ = integrate.quad(lambda b: b * b * post_unnorm(b), -50, 50,
                               limit=200, points=anchors)
        mean, var = m1 / Z, m2 / Z - (m1 / Z) ** 2
        se = np.sqrt(var / draws.size)
        assert abs(draws.mean() - mean) < 4 * se
        assert abs(draws.var() / var - 1.0) < 0.05

    def test_deterministic(self):
        x = np.array([1.0, 1.0, 0.0, 1.0])
        y = np.array([1.0, 0.0, 1.0, 1.0])
        a = probit1_rejection_sample(x, y, 10.0, 500, np.random.default_rng(8))
        b = probit1_rejection_sample(x, y, 10.0, 500, np.random.default_rng(8))
        assert np.array_equal(a, b)


def test_reference_mh_run_moments():
    gm = GaussianMixture([1.0], [[1.0, -2.0]], [np.eye(2)])
    draws = reference_mh_run(gm.target(), 40000, 1.0, seed=9,
                             init=np.zeros(2))
    assert draws.shape[0] >= 30000
    assert np.allclose(draws.mean(axis=0), [1.0, -2.0], atol=0.1)


def test_diagnostics_csv_round_trip(tmp_path):
    rows = [(10000, 0.41), (20000, 0.18), (30000, 0.072)]
    path = tmp_path / "diag.csv"
    save_diagnostics(path, rows)
    assert load_diagnostics(path) == rows
