import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmmbounds.inference import (
    ball_argmin_segments,
    bootstrap_draws,
    bootstrap_test,
    confidence_regions,
    empirical_quantile,
    enlarged_argmin,
    naive_bootstrap_test,
    resample_counts,
    resample_indices,
    test_statistic,
)
from gmmbounds.model import Box, Dataset, LinearMissingX, MeanBound
from gmmbounds.setestimate import ThetaGrid
from gmmbounds.support import DirectionSet, EvaluationMatrix, SupportCurve, build_matrix

from conftest import random_linear_dataset


def test_enlarged_argmin_examples():
    psi = np.array([-1.0, -0.99, 0.5])
    assert enlarged_argmin(psi, 0.02) == (0, 1)
    assert enlarged_argmin(psi, 0.0) == (0,)
    assert enlarged_argmin(SupportCurve(psi, -1.0, (0,)), 1.5) == (0, 1, 2)
    with pytest.raises(ValueError):
        enlarged_argmin(psi, -0.1)


def test_quantile_convention():
    assert empirical_quantile([2, -1, 0, 1, -2], 0.2) == -2.0
    assert empirical_quantile([2, -1, 0, 1, -2], 0.21) == -1.0
    assert empirical_quantile(np.arange(200.0), 0.05) == 9.0


@given(draws=st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=300), alpha=st.floats(0.001, 0.999))
def test_quantile_is_a_draw_with_enough_mass_below(draws, alpha):
    c = empirical_quantile(draws, alpha)
    assert c in draws
    assert sum(d <= c for d in draws) >= math.ceil(alpha * len(draws) - 1e-9)


def test_ball_segments_interior_and_exterior():
    cols, lo, hi, origin = ball_argmin_segments(np.array([0.5, -0.01, 2.0]), 0.02)
    assert origin
    np.testing.assert_array_equal(cols, [0, 1, 2])
    # threshold is q + eps = -0.01 + 0.02
    np.testing.assert_allclose(hi, [0.01 / 0.5, 1.0, 0.005], atol=1e-10)
    cols, lo, hi, origin = ball_argmin_segments(np.array([-1.0, -0.99, 0.5]), 0.02)
    assert not origin
    np.testing.assert_array_equal(cols, [0, 1])
    np.testing.assert_allclose(lo, [0.98, 0.98 / 0.99], atol=1e-10)


def test_degenerate_draws_reject():
    G = np.tile(np.array([[-0.05, 0.2]]), (100, 1))
    mat = EvaluationMatrix(G, np.zeros(1), np.array([[1.0], [-1.0]]))
    t, draws, cols, origin = bootstrap_draws(mat, 0.01, resample_counts(100, 50, 0))
    assert t == pytest.approx(-0.5)
    np.testing.assert_array_equal(draws, 0.0)
    assert t < empirical_quantile(draws, 0.05)


def test_repeated_row_gives_zero_draws():
    ds = Dataset(np.ones(30, int), np.zeros((30, 0)), np.full((30, 1), 0.4))
    res = bootstrap_test(ds, MeanBound((0.0, 1.0)), 0.9, B=40)
    np.testing.assert_array_equal(res.boot_draws, 0.0)
    assert res.critical_value == 0.0 and res.reject


def test_statistic_without_missing_data():
    rng = np.random.default_rng(1)
    ds = random_linear_dataset(rng, 80, p=1.1)
    model = LinearMissingX()
    th = np.array([0.1, 0.3])
    m = model.phi_rows(ds.z1, ds.z2, th).mean(axis=0)
    assert test_statistic(ds, model, th) == pytest.approx(-math.sqrt(80) * np.linalg.norm(m), abs=1e-8)


def test_statistic_outside_manski_interval():
    rng = np.random.default_rng(2)
    n = 2000
    ds = Dataset((rng.uniform(size=n) < 0.9).astype(int), np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)))
    lo, hi = MeanBound((0.0, 1.0)).manski_interval(ds)
    assert test_statistic(ds, MeanBound((0.0, 1.0)), hi + 0.03) == pytest.approx(-math.sqrt(n) * 0.03, abs=1e-10)
    assert test_statistic(ds, MeanBound((0.0, 1.0)), (lo + hi) / 2) == 0.0


def test_result_invariants(design_data):
    res = bootstrap_test(design_data, LinearMissingX(), [0.5, 1.05], B=120, seed=4)
    assert res.reject == (res.t_stat < res.critical_value)
    assert len(res.enlarged_argmin) > 0 and res.boot_draws.shape == (120,)
    assert res.critical_value in res.boot_draws
    s = res.summary()
    for key in ("t_stat", "critical_value", "reject", "alpha", "B", "epsilon", "seed"):
        assert key in s
    with pytest.raises(ValueError):
        bootstrap_test(design_data, LinearMissingX(), [0.5, 1.0], B=0)
    with pytest.raises(ValueError):
        bootstrap_test(design_data, LinearMissingX(), [0.5, 1.0], alpha=1.0)


def test_determinism(design_data):
    a = bootstrap_test(design_data, LinearMissingX(), [0.5, 1.05], B=60, seed=9)
    b = bootstrap_test(design_data, LinearMissingX(), [0.5, 1.05], B=60, seed=9)
    np.testing.assert_array_equal(a.boot_draws, b.boot_draws)
    assert a.critical_value == b.critical_value


def test_counts_match_indices():
    C = resample_counts(17, 6, (3, 1))
    idx = resample_indices(17, 6, (3, 1))
    for b in range(6):
        np.testing.assert_array_equal(C[b], np.bincount(idx[b], minlength=17))
    assert C.sum(axis=1).tolist() == [17] * 6


def test_row_resampling_equals_raw_resampling():
    rng = np.random.default_rng(6)
    ds = random_linear_dataset(rng, 60)
    model = LinearMissingX()
    dirs = DirectionSet(2, 48)
    for th in ([0.0, 1.0], [0.4, 0.9]):
        a = bootstrap_test(ds, model, th, dirs, B=25, epsilon=0.05, seed=2)
        b = bootstrap_test(ds, model, th, dirs, B=25, epsilon=0.05, seed=2, raw_resample=True)
        np.testing.assert_allclose(a.boot_draws, b.boot_draws, atol=1e-10)


@given(seed=st.integers(0, 2**31))
def test_restricted_draws_dominate_naive(seed):
    rng = np.random.default_rng(seed)
    ds = random_linear_dataset(rng, 50)
    model = LinearMissingX()
    th = rng.uniform((0, 0), (1, 2))
    dirs = DirectionSet(2, 36)
    counts = resample_counts(ds.n, 30, seed)
    nv = naive_bootstrap_test(ds, model, th, dirs, B=30, counts=counts)
    exact = bootstrap_test(ds, model, th, dirs, B=30, epsilon=0.0, counts=counts)
    assert np.all(exact.boot_draws >= nv.boot_draws - 1e-10)
    # with eps > 0 the restricted set holds points up to eps above the minimum
    eps = 0.05
    fs = bootstrap_test(ds, model, th, dirs, B=30, epsilon=eps, counts=counts)
    assert np.all(fs.boot_draws >= nv.boot_draws - math.sqrt(ds.n) * eps - 1e-10)


def test_centered_bootstrap_mean_near_zero():
    rng = np.random.default_rng(8)
    n = 400
    ds = Dataset(np.ones(n, int), np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)))
    mat = build_matrix(ds, MeanBound((0.0, 1.0)), 0.9, np.array([[1.0]]))
    B = 2000
    C = resample_counts(n, B, 0)
    D = math.sqrt(n) * (C @ mat.values / n - mat.column_means())
    assert abs(D.mean()) <= 4 * D.std() / math.sqrt(B)


def test_confidence_regions_nest_and_shared_draws(design_data):
    grid = ThetaGrid.from_box(Box((0.3, 0.6), (0.8, 1.4)), 9)
    dirs = DirectionSet(2, 180)
    regs = confidence_regions(design_data, LinearMissingX(), grid, dirs, (0.9, 0.1, 0.05), B=80)
    sets = {r.alpha: set(r.accepted.tolist()) for r in regs}
    assert sets[0.9] <= sets[0.1] <= sets[0.05]
    single = bootstrap_test(design_data, LinearMissingX(), grid.points[40], dirs, 0.1, 80)
    assert regs[1].critical_values[40] == single.critical_value
    assert regs[1].t_stats[40] == single.t_stat


def test_confidence_region_contains_estimated_interior(design_data):
    grid = ThetaGrid.from_box(Box((0.3, 0.6), (0.8, 1.4)), 9)
    regs = confidence_regions(design_data, LinearMissingX(), grid, DirectionSet(2, 180), (0.05,), B=60)
    zero = np.flatnonzero(regs[0].t_stats == 0.0)
    assert set(zero.tolist()) <= set(regs[0].accepted.tolist())


@pytest.mark.slow
def test_boundary_size_in_scalar_model():
    """theta at the upper Manski bound: rejection rate within binomial slack of alpha."""
    n, R, B, p = 500, 200, 200, 0.8
    theta = p * 0.5 + (1 - p)  # E f_max = 0 in the population
    model = MeanBound((0.0, 1.0))
    rej = 0
    for r in range(R):
        rng = np.random.default_rng([7, r])
        s = (rng.uniform(size=n) < p).astype(int)
        ds = Dataset(s, np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)))
        rej += bootstrap_test(ds, model, theta, alpha=0.05, B=B, seed=r).reject
    assert rej / R <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / R)
