"""Three-period panels with monotone attrition.

Units observed in period 3 are fully observed; units that left after
period 2 contribute a worst case over ``z3``; units that left after period 1
contribute a worst case over ``(z2, z3)`` jointly. The three group means are
weighted by the empirical shares of the groups.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import Box, FiniteSet, SupportSpec, inner_max_generic, product_support
from .support import DirectionSet, EvaluationMatrix, _as_directions, criterion_values


@dataclass(frozen=True)
class PanelObservation3:
    s2: int
    s3: int
    z1: tuple
    z2: tuple
    z3: tuple

    def __post_init__(self):
        if self.s2 not in (0, 1) or self.s3 not in (0, 1):
            raise ValueError("selection indicators must be 0 or 1")
        if self.s3 > self.s2:
            raise ValueError("monotone attrition violated: s3 = 1 with s2 = 0")


@dataclass(frozen=True, eq=False)
class PanelDataset3:
    s2: np.ndarray
    s3: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray

    is_panel = True

    def __post_init__(self):
        s2 = np.asarray(self.s2).astype(np.int8)
        s3 = np.asarray(self.s3).astype(np.int8)
        n = s2.size
        if n < 1 or s3.size != n:
            raise ValueError("panel needs at least one observation and matching indicators")
        for name, s in (("s2", s2), ("s3", s3)):
            if not np.all((s == 0) | (s == 1)):
                raise ValueError(f"{name} must be 0 or 1")
        bad = np.flatnonzero(s3 > s2)
        if bad.size:
            rows = ", ".join(str(i + 1) for i in bad[:10])
            raise ValueError(f"monotone attrition violated (s3 = 1 with s2 = 0) at rows {rows}")
        z1 = np.asarray(self.z1, float).reshape(n, -1)
        z2 = np.asarray(self.z2, float).reshape(n, -1).copy()
        z3 = np.asarray(self.z3, float).reshape(n, -1).copy()
        z2[s2 == 0] = 0.0
        z3[s3 == 0] = 0.0
        for name, arr in (("s2", s2), ("s3", s3), ("z1", z1), ("z2", z2), ("z3", z3)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_observations(cls, obs: Sequence[PanelObservation3]) -> "PanelDataset3":
        n = len(obs)
        return cls(
            np.array([o.s2 for o in obs]),
            np.array([o.s3 for o in obs]),
            np.array([o.z1 for o in obs], float).reshape(n, -1),
            np.array([o.z2 for o in obs], float).reshape(n, -1),
            np.array([o.z3 for o in obs], float).reshape(n, -1),
        )

    @property
    def n(self) -> int:
        return int(self.s2.size)

    @property
    def p3(self) -> float:
        return float(self.s3.mean())

    @property
    def p2(self) -> float:
        return float(self.s2.mean())

    @property
    def p2_given_0(self) -> float | None:
        """Share still present in period 2 among those absent in period 3."""
        gone = self.s3 == 0
        if not gone.any():
            return None
        return float(self.s2[gone].mean())

    def group_weights(self) -> tuple[float, float, float]:
        """p3, (1 - p3) p2|0 and (1 - p3)(1 - p2|0).

        The last weight is taken as the remainder so that the three add up
        to exactly 1 in floating point.
        """
        p3 = self.p3
        p20 = self.p2_given_0
        if p20 is None:
            return p3, 0.0, 0.0
        head = p3 + (1 - p3) * p20
        return p3, (1 - p3) * p20, 1.0 - head

    def take(self, idx) -> "PanelDataset3":
        idx = np.asarray(idx)
        return PanelDataset3(self.s2[idx], self.s3[idx], self.z1[idx], self.z2[idx], self.z3[idx])


class PanelModel3:
    """Moment model for three periods; generic oracles over z3 and (z2, z3)."""

    name = "panel"
    d_phi: int
    d_theta: int
    theta_space: Box
    z2_support: SupportSpec
    z3_support: SupportSpec
    resolution: int = 101

    def phi(self, z1, z2, z3, theta) -> np.ndarray:
        raise NotImplementedError

    def inner_max_z3(self, u, z1, z2, theta):
        def f(_, z3, th):
            return self.phi(z1, z2, z3, th)

        return inner_max_generic(f, u, None, theta, self.z3_support, self.resolution)

    def inner_max_z23(self, u, z1, theta):
        d2 = self.z2_support.dim
        joint = product_support(self.z2_support, self.z3_support, self.resolution)

        def f(_, z23, th):
            z23 = np.asarray(z23)
            return self.phi(z1, z23[:d2], z23[d2:], th)

        return inner_max_generic(f, u, None, theta, joint, self.resolution)

    def phi_rows(self, z1, z2, z3, theta) -> np.ndarray:
        return np.array([self.phi(a, b, c, theta) for a, b, c in zip(z1, z2, z3)], float).reshape(
            len(z1), self.d_phi
        )

    def inner_max_z3_rows(self, U, z1, z2, theta) -> np.ndarray:
        return np.array(
            [[self.inner_max_z3(u, a, b, theta)[0] for u in U] for a, b in zip(z1, z2)]
        ).reshape(len(z1), len(U))

    def inner_max_z23_rows(self, U, z1, theta) -> np.ndarray:
        return np.array([[self.inner_max_z23(u, a, theta)[0] for u in U] for a in z1]).reshape(
            len(z1), len(U)
        )


@dataclass
class FunctionPanelModel(PanelModel3):
    phi_fn: Callable
    d_phi: int
    d_theta: int
    z2_support: SupportSpec
    z3_support: SupportSpec
    theta_space: Box
    resolution: int = 101

    def phi(self, z1, z2, z3, theta):
        return np.atleast_1d(np.asarray(self.phi_fn(z1, z2, z3, theta), float))


class PanelMean(PanelModel3):
    """Mean of the period-3 outcome: phi = z3 - theta with z3 in [lo, hi]."""

    name = "panel_mean"
    d_phi = 1
    d_theta = 1

    def __init__(self, z3_support=(0.0, 1.0), z2_support: SupportSpec | None = None):
        self.z3_support = Box((z3_support[0],), (z3_support[1],))
        self.z2_support = z2_support or Box((0.0,), (1.0,))
        self.theta_space = Box((z3_support[0],), (z3_support[1],))

    def phi(self, z1, z2, z3, theta):
        return np.array([float(np.ravel(z3)[0]) - float(np.ravel(theta)[0])])

    def _worst(self, U, theta):
        t = float(np.ravel(theta)[0])
        lo, hi = self.z3_support.lower[0], self.z3_support.upper[0]
        u = np.asarray(U, float)[:, 0]
        return np.maximum(u * (hi - t), u * (lo - t))

    def phi_rows(self, z1, z2, z3, theta):
        return z3[:, :1] - float(np.ravel(theta)[0])

    def inner_max_z3_rows(self, U, z1, z2, theta):
        return np.broadcast_to(self._worst(U, theta), (len(z1), len(U))).copy()

    def inner_max_z23_rows(self, U, z1, theta):
        return np.broadcast_to(self._worst(U, theta), (len(z1), len(U))).copy()

    def interval(self, dataset: PanelDataset3) -> tuple[float, float]:
        """Closed-form worst-case bounds on E[z3]."""
        lo, hi = self.z3_support.lower[0], self.z3_support.upper[0]
        base = float((dataset.z3[:, 0] * dataset.s3).mean())
        gone = 1 - dataset.p3
        return base + gone * lo, base + gone * hi


def _group_masks(ds: PanelDataset3):
    full = ds.s3 == 1
    mid = (ds.s2 == 1) & (ds.s3 == 0)
    none = ds.s2 == 0
    return full, mid, none


def build_matrix_3(dataset: PanelDataset3, model: PanelModel3, theta, directions) -> EvaluationMatrix:
    """Per-row contributions; column means equal :func:`psi_hat_3`."""
    U, dset = _as_directions(directions)
    theta = np.atleast_1d(np.asarray(theta, float))
    full, mid, none = _group_masks(dataset)
    G = np.empty((dataset.n, len(U)))
    if full.any():
        G[full] = model.phi_rows(dataset.z1[full], dataset.z2[full], dataset.z3[full], theta) @ U.T
    if mid.any():
        G[mid] = model.inner_max_z3_rows(U, dataset.z1[mid], dataset.z2[mid], theta)
    if none.any():
        G[none] = model.inner_max_z23_rows(U, dataset.z1[none], theta)
    return EvaluationMatrix(G, theta, U, dset)


def psi_hat_3(dataset: PanelDataset3, model: PanelModel3, theta, u) -> float:
    """Weighted group means of the per-row contributions at direction ``u``."""
    return float(psi_hat_3_many(dataset, model, theta, np.atleast_2d(np.asarray(u, float)))[0])


def psi_hat_3_many(dataset, model, theta, U) -> np.ndarray:
    G = build_matrix_3(dataset, model, theta, U).values
    masks = _group_masks(dataset)
    out = np.zeros(G.shape[1])
    for w, mask in zip(dataset.group_weights(), masks):
        if w > 0:
            out += w * G[mask].mean(axis=0)
    return out


class PanelSupport:
    """psi_hat evaluator for panels, usable by the support and inference code."""

    def __init__(self, dataset: PanelDataset3, model: PanelModel3):
        self.dataset = dataset
        self.model = model

    def psi(self, thetas, U) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, float))
        U = np.asarray(U, float)
        return np.stack(
            [psi_hat_3_many(self.dataset, self.model, th, U if U.ndim == 2 else U[t]) for t, th in enumerate(thetas)]
        )


def criterion_3(dataset: PanelDataset3, model: PanelModel3, theta, directions: DirectionSet | None = None,
                refine: bool = True) -> float:
    directions = directions or DirectionSet(model.d_phi)
    theta = np.atleast_1d(np.asarray(theta, float))
    return float(criterion_values(PanelSupport(dataset, model), theta[None, :], directions, refine)[0])
