import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmmbounds.model import Box, Dataset, LinearMissingX, MeanBound
from gmmbounds.setestimate import ThetaGrid, directed_distance, estimate_set, eta_rule, hausdorff
from gmmbounds.support import DirectionSet

point_sets = st.lists(
    st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(-5, 5, allow_nan=False)), min_size=1, max_size=12
)


def test_eta_rule_values():
    assert eta_rule(1000, 0.1) == pytest.approx(0.02184, abs=5e-6)
    assert eta_rule(math.e**2, 1.0) == pytest.approx(2 / math.e, rel=1e-15)
    # 0.1 * ln(1e6) / 1e3, evaluated in extended precision
    assert eta_rule(10**6, 0.1) == pytest.approx(0.0013815510557964274, rel=1e-15)
    with pytest.raises(ValueError):
        eta_rule(1, 0.1)
    with pytest.raises(ValueError):
        eta_rule(100, 0.0)


def test_grid_order_and_index():
    g = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), (3, 5))
    pts = g.points
    assert pts.shape == (15, 2)
    np.testing.assert_array_equal(pts[:5, 0], 0.0)
    np.testing.assert_allclose(pts[:5, 1], [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(g.steps, [0.5, 0.5])
    assert g.index_of([0.5, 1.5]) == 8
    np.testing.assert_allclose(pts[g.index_of([0.5, 1.5])], [0.5, 1.5])


def test_hausdorff_examples():
    assert hausdorff([0.0], [0.0, 1.0]) == 1.0
    a = np.array([[0.3, 0.1], [1.0, 2.0]])
    assert hausdorff(a, a) == 0.0
    assert hausdorff([[0, 0], [1, 0]], [[0, 1]]) == pytest.approx(math.sqrt(2), rel=1e-15)
    with pytest.raises(ValueError, match="undefined Hausdorff distance"):
        hausdorff(np.zeros((0, 2)), a)


@given(a=point_sets, b=point_sets, c=point_sets)
def test_hausdorff_metric_properties(a, b, c):
    ab, ba = hausdorff(a, b), hausdorff(b, a)
    assert ab == ba
    assert hausdorff(a, c) <= ab + hausdorff(b, c) + 1e-9
    # brute force over all pairs
    A, B = np.array(a), np.array(b)
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    assert ab == pytest.approx(max(D.min(axis=1).max(), D.min(axis=0).max()), abs=1e-12)


def test_directed_distance_scaled_chebyshev():
    A = np.array([[0.0, 0.0]])
    B = np.array([[0.02, 0.04]])
    assert directed_distance(A, B, scale=np.array([0.01, 0.02]), p=np.inf) == pytest.approx(2.0)


def test_large_eta_includes_everything(design_data):
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 11)
    est = estimate_set(design_data, LinearMissingX(), grid, eta=1.0)
    eta = float(np.max(np.abs(est.q_values)))
    assert estimate_set(design_data, LinearMissingX(), grid, eta=eta).members.size == len(grid)


def test_separated_criterion_recovers_true_set():
    # mean-bound model: interval [0.3, 0.5] exactly, grid step 0.05
    z = np.array([[0.4]] * 6 + [[0.0]] * 2)
    s = np.array([1] * 6 + [0] * 2)
    ds = Dataset(s, np.zeros((8, 0)), z)
    lo, hi = MeanBound((0.0, 1.0)).manski_interval(ds)
    assert (lo, hi) == pytest.approx((0.3, 0.55))
    grid = ThetaGrid((np.round(np.linspace(0, 1, 21), 12),))
    est = estimate_set(ds, MeanBound((0.0, 1.0)), grid, eta=1e-9)
    np.testing.assert_allclose(est.member_points[:, 0], [0.3, 0.35, 0.4, 0.45, 0.5, 0.55], atol=1e-12)


def test_manski_recovery_moderate_n():
    rng = np.random.default_rng(11)
    n = 4000
    s = (rng.uniform(size=n) < 0.9).astype(int)
    ds = Dataset(s, np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)))
    lo, hi = MeanBound((0.0, 1.0)).manski_interval(ds)
    grid = ThetaGrid((np.linspace(0, 1, 201),))
    pts = estimate_set(ds, MeanBound((0.0, 1.0)), grid).member_points[:, 0]
    # eta widens the set; compare against the interval widened by eta
    eta = eta_rule(n)
    assert abs(pts.min() - (lo - eta)) <= 0.005 + 1e-12
    assert abs(pts.max() - (hi + eta)) <= 0.005 + 1e-12


@given(e1=st.floats(1e-4, 0.2), e2=st.floats(1e-4, 0.2))
def test_members_monotone_in_eta(design_data, e1, e2):
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 15)
    est = _cached(design_data, grid)
    lo, hi = sorted((e1, e2))
    assert set(est.with_eta(lo).members) <= set(est.with_eta(hi).members)


_CACHE = {}


def _cached(ds, grid):
    key = id(ds)
    if key not in _CACHE:
        _CACHE[key] = estimate_set(ds, LinearMissingX(), grid, eta=1.0)
    return _CACHE[key]


def test_screening_keeps_membership(design_data):
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 41)
    model = LinearMissingX()
    full = estimate_set(design_data, model, grid)
    fast = estimate_set(design_data, model, grid, screen=True)
    np.testing.assert_array_equal(full.members, fast.members)
    assert not fast.exact.all()
    np.testing.assert_array_equal(full.q_values[fast.exact], fast.q_values[fast.exact])
    assert np.all(fast.q_values >= full.q_values - 1e-15)
    with pytest.raises(ValueError):
        fast.with_eta(fast.eta * 2)


def test_threads_do_not_change_results(design_data):
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 51)
    a = estimate_set(design_data, LinearMissingX(), grid, threads=1)
    b = estimate_set(design_data, LinearMissingX(), grid, threads=3)
    np.testing.assert_array_equal(a.q_values, b.q_values)


def test_set_csv(tmp_path, design_data):
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 5)
    est = estimate_set(design_data, LinearMissingX(), grid, DirectionSet(2, 72))
    est.to_csv(tmp_path / "set.csv", "config_sha256=abc")
    lines = (tmp_path / "set.csv").read_text().splitlines()
    assert lines[0] == "# config_sha256=abc"
    assert lines[1] == "theta_1,theta_2,q_value,member"
    assert len(lines) == 2 + 25
