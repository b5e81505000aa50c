"""Brute-force checks for the worst-case reduction and the scalar criterion.

These are deliberately naive: they enumerate instead of using the pointwise
maximum, so they can serve as independent references in tests and in the
``verify`` command.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Dataset, MeanBound

MAX_MAPS = 10**6


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Joint law on a finite grid; its row sums fix the z1 marginal."""

    z1_points: np.ndarray
    z2_points: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, float)
        if mass.shape != (len(self.z1_points), len(self.z2_points)):
            raise ValueError("mass must be (len(z1_points), len(z2_points))")
        if np.any(mass < 0):
            raise ValueError("mass must be nonnegative")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise ValueError("mass must sum to 1")
        object.__setattr__(self, "mass", mass)

    @property
    def z1_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def expect(self, cost: np.ndarray) -> float:
        return float((self.mass * cost).sum())


def max_over_couplings(z1_marginal, cost) -> float:
    """Best expected cost over all laws with the given z1 marginal.

    Enumerates the k**m deterministic maps z1 -> z2; the objective is
    linear in the conditional masses, so the optimum sits at such a map.
    """
    w = np.asarray(z1_marginal, float).ravel()
    c = np.atleast_2d(np.asarray(cost, float))
    m, k = c.shape
    if w.size != m:
        raise ValueError("marginal and cost rows differ in length")
    if k**m > MAX_MAPS:
        raise ValueError(
            f"{k}**{m} maps exceed the enumeration guard; use the pointwise formula "
            "sum(marginal * cost.max(axis=1)) instead"
        )
    best = -np.inf
    for choice in itertools.product(range(k), repeat=m):
        v = sum(w[i] * c[i, j] for i, j in enumerate(choice))
        if v > best:
            best = v
    return float(best)


def pointwise_max_formula(z1_marginal, cost) -> float:
    w = np.asarray(z1_marginal, float).ravel()
    return float(w @ np.atleast_2d(np.asarray(cost, float)).max(axis=1))


def criterion_from_bounds(mean_f_min: float, mean_f_max: float) -> float:
    """min{0, E f_max, -E f_min} for a single moment."""
    return min(0.0, mean_f_max, -mean_f_min)


def criterion_bruteforce_1d(dataset: Dataset, model, theta) -> float:
    """Scalar-moment criterion from the per-row worst cases f_min and f_max."""
    if model.d_phi != 1:
        raise ValueError("the closed form needs a single moment")
    if isinstance(model, MeanBound):
        f_min, f_max = model.f_bounds(dataset, theta)
    else:
        f_min, f_max = _f_bounds_generic(dataset, model, theta)
    return criterion_from_bounds(float(f_min.mean()), float(f_max.mean()))


def _f_bounds_generic(dataset, model, theta):
    obs = dataset.s == 1
    f_min = np.empty(dataset.n)
    f_max = np.empty(dataset.n)
    for i in range(dataset.n):
        if obs[i]:
            v = float(model.phi(dataset.z1[i], dataset.z2[i], theta)[0])
            f_min[i] = f_max[i] = v
        else:
            f_max[i] = model.inner_max(np.array([1.0]), dataset.z1[i], theta)[0]
            f_min[i] = -model.inner_max(np.array([-1.0]), dataset.z1[i], theta)[0]
    return f_min, f_max


@dataclass
class Check:
    name: str
    instances: int
    max_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return bool(self.max_error <= self.tolerance)


def _random_linear_dataset(rng, n, p):
    s = (rng.uniform(size=n) < p).astype(np.int8)
    x = rng.uniform(0, 1, n)
    y = rng.uniform(-0.5, 0.5) + rng.uniform(0, 2) * x + rng.uniform(-1, 1, n)
    return Dataset(s, y[:, None], x[:, None])


def run_oracle_suite(seed: int = 0, instances: int = 50) -> list[Check]:
    """Random-instance equivalences between fast paths and brute-force references."""
    from .model import LinearMissingX
    from .multiperiod import PanelDataset3, PanelMean, psi_hat_3_many
    from .support import DirectionSet, build_matrix, criterion

    rng = np.random.default_rng(seed)
    checks = []

    err = 0.0
    for _ in range(instances):
        m, k = rng.integers(1, 5), rng.integers(1, 7)
        w = rng.dirichlet(np.ones(m))
        c = rng.normal(size=(m, k))
        err = max(err, abs(max_over_couplings(w, c) - pointwise_max_formula(w, c)))
    checks.append(Check("coupling enumeration = pointwise maximum", instances, err, 1e-12))

    err = 0.0
    d1 = DirectionSet(1)
    for _ in range(instances):
        n = int(rng.integers(5, 60))
        model = MeanBound((0.0, 1.0))
        ds = Dataset((rng.uniform(size=n) < 0.7).astype(int), np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)))
        th = rng.uniform(-0.5, 1.5)
        err = max(err, abs(criterion(ds, model, th, d1) - criterion_bruteforce_1d(ds, model, th)))
    checks.append(Check("scalar criterion = closed form", instances, err, 1e-12))

    err = 0.0
    model = LinearMissingX()
    U = DirectionSet(2, m=64).directions
    for _ in range(instances):
        ds = _random_linear_dataset(rng, int(rng.integers(5, 80)), 0.8)
        th = rng.uniform((0, 0), (1, 2))
        fast = model.fast_support(ds).psi(th[None, :], U)[0]
        slow = build_matrix(ds, model, th, U).column_means()
        err = max(err, float(np.abs(fast - slow).max()))
    checks.append(Check("sufficient-statistic path = row path", instances, err, 1e-10))

    err = 0.0
    dirs = DirectionSet(2)
    for _ in range(max(1, instances // 5)):
        ds = _random_linear_dataset(rng, int(rng.integers(5, 80)), 1.1)
        th = rng.uniform((0, 0), (1, 2))
        mean_phi = model.phi_rows(ds.z1, ds.z2, th).mean(axis=0)
        err = max(err, abs(criterion(ds, model, th, dirs) + np.linalg.norm(mean_phi)))
    checks.append(Check("no missing data: criterion = -|mean phi|", max(1, instances // 5), err, 1e-8))

    err = 0.0
    pm = PanelMean((0.0, 1.0))
    for _ in range(instances):
        n = int(rng.integers(3, 40))
        z3 = rng.uniform(0, 1, (n, 1))
        panel = PanelDataset3(np.ones(n), np.ones(n), np.zeros((n, 0)), rng.uniform(0, 1, (n, 1)), z3)
        flat = Dataset(np.ones(n, int), np.zeros((n, 0)), z3)
        th = np.array([rng.uniform()])
        a = psi_hat_3_many(panel, pm, th, d1.directions)
        b = build_matrix(flat, MeanBound((0.0, 1.0)), th, d1.directions).column_means()
        err = max(err, float(np.abs(a - b).max()), abs(sum(panel.group_weights()) - 1.0))
    checks.append(Check("panel without attrition = cross-section", instances, err, 1e-12))
    return checks
