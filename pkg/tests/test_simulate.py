import json
import math

import numpy as np
import pytest

from gmmbounds.model import Box, LinearMissingX
from gmmbounds.setestimate import ThetaGrid
from gmmbounds.simulate import (
    DgpSpec,
    boundary_point,
    population_criterion,
    population_support,
    run_study,
    simulate_dataset,
    write_study,
)
from gmmbounds.support import DirectionSet, MatrixSupport


def test_spec_validation():
    with pytest.raises(ValueError):
        DgpSpec(p_select=1.0)
    with pytest.raises(ValueError):
        DgpSpec(n=0)
    assert DgpSpec().replace(n=5).n == 5


def test_selected_fraction():
    ds = simulate_dataset(DgpSpec(n=100_000, seed=1))
    assert abs(ds.p_hat - 0.9) <= 0.005


def test_zero_theta_gives_centered_y():
    n = 20_000
    ds = simulate_dataset(DgpSpec(theta_true=(0.0, 0.0), n=n, seed=2))
    assert abs(ds.z1.mean()) <= 3 * math.sqrt(1 / 3) / math.sqrt(n)


def test_observed_x_moments():
    n = 20_000
    ds = simulate_dataset(DgpSpec(n=n, seed=3))
    x = ds.z2[ds.s == 1, 0]
    assert abs(x.mean() - 0.5) <= 3 * (1 / math.sqrt(12)) / math.sqrt(0.9 * n)
    assert np.all(ds.z2[ds.s == 0] == 0.0)


def test_same_seed_same_data():
    a = simulate_dataset(DgpSpec(n=50, seed=4))
    b = simulate_dataset(DgpSpec(n=50, seed=4))
    np.testing.assert_array_equal(a.z1, b.z1)
    np.testing.assert_array_equal(a.s, b.s)


def test_population_support_against_large_sample():
    spec = DgpSpec()
    pop = population_support(spec)
    big = simulate_dataset(spec.replace(n=400_000, seed=5))
    U = DirectionSet(2, 16).directions
    th = np.array([[0.5, 1.0], [0.3, 1.4]])
    sample = LinearMissingX().fast_support(big).psi(th, U)
    np.testing.assert_allclose(pop.psi(th, U), sample, atol=0.01)


def test_population_criterion_and_boundary():
    spec = DgpSpec()
    assert population_criterion(spec, [0.5, 1.0])[0] == 0.0
    assert population_criterion(spec, [0.2, 0.2])[0] < -0.05
    bp = boundary_point(spec)
    assert bp[0] == 0.5 and 1.0 < bp[1] < 1.2
    assert population_criterion(spec, bp)[0] > -1e-9
    assert population_criterion(spec, bp + [0, 1e-3])[0] < 0


def test_smoke_study_writes_everything(tmp_path):
    spec = DgpSpec(n=200)
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 21)
    rep = run_study(spec, grid, DirectionSet(2, 72), B=1, R=1, test_points={"interior": (0.5, 1.0)})
    paths = write_study(rep, tmp_path, "abc")
    for name in ("sets.csv", "hausdorff.csv", "rejections.csv", "report.json"):
        assert name in paths
        text = (tmp_path / name).read_text()
        assert "abc" in text.splitlines()[0] or name == "report.json"
    report = json.loads((tmp_path / "report.json").read_text())
    assert list(report)[0] == "config_sha256" and report["config_sha256"] == "abc"
    assert (tmp_path / "runtime.json").exists()
    rows = (tmp_path / "sets.csv").read_text().splitlines()
    assert rows[1] == "theta_1,theta_2,reference,frequency,r0"
    assert len(rows) == 2 + len(grid)


def test_study_invariants_and_determinism():
    spec = DgpSpec(n=300)
    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), 31)
    kw = dict(directions=DirectionSet(2, 120), B=30, R=4, master_seed=3, test_points={"interior": (0.5, 1.0)})
    a = run_study(spec, grid, **kw)
    b = run_study(spec, grid, threads=2, **kw)
    np.testing.assert_array_equal(a.member_flags, b.member_flags)
    np.testing.assert_array_equal(a.hausdorff, b.hausdorff)
    assert a.rejections == b.rejections
    assert np.all(a.hausdorff >= 0)
    assert all(0 <= v <= a.R for v in a.rejections.values())
    assert np.all(a.set_sizes > 0)
    with pytest.raises(ValueError):
        run_study(spec, grid, R=0)
