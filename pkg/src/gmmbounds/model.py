"""Moment models with missing data and inner-maximization oracles.

A model supplies the moment function ``phi(z1, z2, theta)`` and an oracle for
``max_{z2 in Z2} u'phi(z1, z2, theta)``, the worst case for a row whose
``z2`` block is missing.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class Observation:
    """One observed vector W = (s, z1, s*z2)."""

    s: int
    z1: tuple
    z2: tuple

    def __post_init__(self):
        if self.s not in (0, 1):
            raise ValueError(f"selection indicator must be 0 or 1, got {self.s!r}")
        z1 = tuple(float(v) for v in self.z1)
        z2 = tuple(float(v) for v in self.z2)
        if not all(np.isfinite(z1)):
            raise ValueError("z1 must be finite")
        if self.s == 0:
            z2 = tuple(0.0 for _ in z2)
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-stacked sample.

    ``z2`` rows with ``s == 0`` are zeroed on construction, so the dataset
    only ever holds ``s * z2``.
    """

    s: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("dataset needs at least one observation")
        if not np.all((s == 0) | (s == 1)):
            raise ValueError("selection indicator must be 0 or 1")
        n = s.size
        z1 = np.asarray(self.z1, dtype=float).reshape(n, -1)
        z2 = np.asarray(self.z2, dtype=float).reshape(n, -1).copy()
        if not np.all(np.isfinite(z1)):
            raise ValueError("z1 must be finite")
        z2[s == 0] = 0.0
        if not np.all(np.isfinite(z2)):
            raise ValueError("z2 must be finite where observed")
        for name, arr in (("s", s.astype(np.int8)), ("z1", z1), ("z2", z2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_observations(cls, observations: Sequence[Observation]) -> "Dataset":
        if not observations:
            raise ValueError("dataset needs at least one observation")
        d1, d2 = len(observations[0].z1), len(observations[0].z2)
        for ob in observations:
            if len(ob.z1) != d1 or len(ob.z2) != d2:
                raise ValueError("observations do not share dimensions")
        return cls(
            s=np.array([ob.s for ob in observations]),
            z1=np.array([ob.z1 for ob in observations], dtype=float).reshape(len(observations), d1),
            z2=np.array([ob.z2 for ob in observations], dtype=float).reshape(len(observations), d2),
        )

    @property
    def n(self) -> int:
        return int(self.s.size)

    @property
    def p_hat(self) -> float:
        return float(self.s.sum()) / self.n

    @property
    def observations(self) -> list[Observation]:
        return [Observation(int(s), tuple(a), tuple(b)) for s, a, b in zip(self.s, self.z1, self.z2)]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.s[idx], self.z1[idx], self.z2[idx])


# ---------------------------------------------------------------------------
# supports


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower, upper]``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ValueError("box bounds differ in dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box needs lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, z, tol: float = 0.0) -> bool:
        z = np.atleast_1d(z)
        return bool(np.all(z >= np.array(self.lower) - tol) and np.all(z <= np.array(self.upper) + tol))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))


@dataclass(frozen=True)
class FiniteSet:
    """Finite support, stored in lexicographic order."""

    points: tuple

    def __post_init__(self):
        pts = [tuple(float(v) for v in np.atleast_1d(p)) for p in self.points]
        if not pts:
            raise ValueError("finite support must be nonempty")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("finite support points differ in dimension")
        object.__setattr__(self, "points", tuple(sorted(set(pts))))

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def contains(self, z, tol: float = 1e-12) -> bool:
        z = np.atleast_1d(z)
        return any(np.all(np.abs(np.array(p) - z) <= tol) for p in self.points)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        pts = np.array(self.points)
        return pts[rng.integers(len(pts), size=size)]


SupportSpec = Box | FiniteSet


def product_support(a: SupportSpec, b: SupportSpec, resolution: int | None = None) -> SupportSpec:
    """Cartesian product of two supports (finite x box is discretized)."""
    if isinstance(a, Box) and isinstance(b, Box):
        return Box(a.lower + b.lower, a.upper + b.upper)
    pa = _as_points(a, resolution)
    pb = _as_points(b, resolution)
    return FiniteSet(tuple(p + q for p in pa for q in pb))


def _as_points(sup: SupportSpec, resolution: int | None) -> list[tuple]:
    if isinstance(sup, FiniteSet):
        return list(sup.points)
    if resolution is None:
        raise ValueError("resolution needed to discretize a box support")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(sup.lower, sup.upper)]
    return [tuple(p) for p in itertools.product(*axes)]


# ---------------------------------------------------------------------------
# oracles


def eval_phi_linear_missing_x(y: float, x: float, theta) -> np.ndarray:
    """Moments of the regression y = t0 + t1 x + e: (e, x e)."""
    r = y - theta[0] - theta[1] * x
    return np.array([r, x * r])


def _quadratic_max(u1, u2, r0, t1, lo, hi):
    """Vectorized max of g(x) = (u1 + u2 x)(r0 - t1 x) over x in [lo, hi].

    g(x) = a x^2 + b x + c with a = -u2 t1, b = u2 r0 - u1 t1, c = u1 r0.
    Candidates are checked in increasing x with strict improvement, so ties
    go to the smaller argmax.
    """
    u1, u2, r0, t1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (u1, u2, r0, t1)))
    a = -u2 * t1
    b = u2 * r0 - u1 * t1
    concave = a < 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xv = np.where(concave, -b / np.where(concave, 2 * a, 1.0), lo)
    vertex_ok = concave & (xv >= lo) & (xv <= hi)
    g_lo = (u1 + u2 * lo) * (r0 - t1 * lo)
    g_v = np.where(vertex_ok, (u1 + u2 * xv) * (r0 - t1 * xv), -np.inf)
    g_hi = (u1 + u2 * hi) * (r0 - t1 * hi)
    val = g_lo
    arg = np.full(val.shape, float(lo))
    better = g_v > val
    val = np.where(better, g_v, val)
    arg = np.where(better, xv, arg)
    better = g_hi > val
    val = np.where(better, g_hi, val)
    arg = np.where(better, float(hi), arg)
    return val, arg


def inner_max_quadratic(u, y: float, theta, interval) -> tuple[float, float]:
    """Exact ``max_{x in [lo, hi]} u'phi(y, x, theta)`` for the linear model."""
    lo, hi = float(interval[0]), float(interval[1])
    if lo > hi:
        raise ValueError("interval needs lo <= hi")
    r0 = y - theta[0]
    val, arg = _quadratic_max(u[0], u[1], r0, theta[1], lo, hi)
    return float(val), float(arg)


def inner_max_generic(
    phi: Callable,
    u,
    z1,
    theta,
    support: SupportSpec,
    resolution: int = 101,
) -> tuple[float, np.ndarray]:
    """Maximize ``u'phi(z1, z2, theta)`` over ``z2`` in ``support``.

    Finite supports are enumerated exactly. Boxes are searched on a tensor
    grid with ``resolution`` points per axis, then polished by one
    coordinate pass at three successive halvings of the grid step. Ties go
    to the lexicographically smallest point.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))

    def value(z2):
        out = np.atleast_1d(np.asarray(phi(z1, z2, theta), dtype=float))
        if out.shape != u.shape:
            raise ValueError(
                f"dimension mismatch: phi returned {out.shape[0]} moments for a "
                f"direction of length {u.shape[0]}"
            )
        return float(u @ out)

    if isinstance(support, FiniteSet):
        best_z, best_v = None, -np.inf
        for p in support.points:
            v = value(np.array(p))
            if v > best_v:
                best_z, best_v = np.array(p), v
        return best_v, best_z

    if resolution < 2:
        raise ValueError("resolution must be at least 2 for box supports")
    lo, hi = np.array(support.lower), np.array(support.upper)
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    best_z, best_v = None, -np.inf
    for p in itertools.product(*axes):
        z = np.array(p)
        v = value(z)
        if v > best_v:
            best_z, best_v = z, v
    step = (hi - lo) / (resolution - 1)
    for k in (2, 4, 8):
        h = step / k
        for axis in range(len(lo)):
            if h[axis] == 0:
                continue
            for sign in (-1.0, 1.0):
                z = best_z.copy()
                z[axis] = np.clip(z[axis] + sign * h[axis], lo[axis], hi[axis])
                v = value(z)
                if v > best_v:
                    best_z, best_v = z, v
    return best_v, best_z


# ---------------------------------------------------------------------------
# models


class MomentModel:
    """Base class: a moment function plus its missing-data oracle.

    Subclasses set ``d_phi``, ``d_theta``, ``d_z1``, ``theta_space`` and
    ``z2_support`` and implement :meth:`phi`. Vectorized hooks
    (:meth:`phi_rows`, :meth:`inner_max_rows`) default to Python loops.
    """

    name = "custom"
    d_phi: int
    d_theta: int
    d_z1: int
    theta_space: Box
    z2_support: SupportSpec
    resolution: int = 101

    z1_columns: tuple = ()
    z2_columns: tuple = ()

    def phi(self, z1, z2, theta) -> np.ndarray:
        raise NotImplementedError

    def inner_max(self, u, z1, theta) -> tuple[float, np.ndarray]:
        return inner_max_generic(self.phi, u, z1, theta, self.z2_support, self.resolution)

    @property
    def d_z2(self) -> int:
        return self.z2_support.dim

    def phi_rows(self, z1: np.ndarray, z2: np.ndarray, theta) -> np.ndarray:
        return np.array([self.phi(a, b, theta) for a, b in zip(z1, z2)], dtype=float).reshape(
            len(z1), self.d_phi
        )

    def inner_max_rows(self, U: np.ndarray, z1: np.ndarray, theta) -> np.ndarray:
        out = np.empty((len(z1), len(U)))
        for i, a in enumerate(z1):
            for j, u in enumerate(U):
                out[i, j] = self.inner_max(u, a, theta)[0]
        return out

    def argmax_rows(self, u: np.ndarray, z1: np.ndarray, theta) -> np.ndarray:
        return np.array([self.inner_max(u, a, theta)[1] for a in z1]).reshape(len(z1), self.d_z2)

    def describe(self) -> dict:
        return {"name": self.name}


class LinearMissingX(MomentModel):
    """Regression y = t0 + t1 x + e with x missing; z1 = y, z2 = x."""

    name = "linear_missing_x"
    d_phi = 2
    d_theta = 2
    d_z1 = 1
    z1_columns = ("y",)
    z2_columns = ("x",)

    def __init__(self, x_support=(0.0, 1.0), theta_space: Box | None = None):
        self.z2_support = Box((x_support[0],), (x_support[1],))
        self.theta_space = theta_space or Box((0.0, 0.0), (1.0, 2.0))

    @property
    def interval(self) -> tuple[float, float]:
        return self.z2_support.lower[0], self.z2_support.upper[0]

    def phi(self, z1, z2, theta):
        return eval_phi_linear_missing_x(float(np.ravel(z1)[0]), float(np.ravel(z2)[0]), theta)

    def inner_max(self, u, z1, theta):
        val, arg = inner_max_quadratic(u, float(np.ravel(z1)[0]), theta, self.interval)
        return val, np.array([arg])

    def phi_rows(self, z1, z2, theta):
        y, x = z1[:, 0], z2[:, 0]
        r = y - theta[0] - theta[1] * x
        return np.column_stack([r, x * r])

    def inner_max_rows(self, U, z1, theta):
        lo, hi = self.interval
        r0 = z1[:, :1] - theta[0]
        val, _ = _quadratic_max(U[None, :, 0], U[None, :, 1], r0, theta[1], lo, hi)
        return val

    def argmax_rows(self, u, z1, theta):
        lo, hi = self.interval
        _, arg = _quadratic_max(u[0], u[1], z1[:, 0] - theta[0], theta[1], lo, hi)
        return arg.reshape(-1, 1)

    def fast_support(self, dataset: Dataset) -> "LinearMissingXSupport":
        obs = dataset.s == 1
        return LinearMissingXSupport(
            n=dataset.n,
            y_obs=dataset.z1[obs, 0],
            x_obs=dataset.z2[obs, 0],
            y_miss=dataset.z1[~obs, 0],
            interval=self.interval,
        )

    def describe(self):
        return {
            "name": self.name,
            "x_support": list(self.interval),
            "theta_lower": list(self.theta_space.lower),
            "theta_upper": list(self.theta_space.upper),
        }


class LinearMissingXSupport:
    """Sample support function of the linear model via sufficient statistics.

    Observed rows enter through five sums. Missing rows enter through prefix
    sums of sorted ``y``: for fixed (theta, u) the per-row maximum is
    piecewise polynomial in ``r0 = y - t0`` with at most three pieces
    (left endpoint, interior vertex, right endpoint), so the sum over rows
    costs two binary searches. Optional weights allow quadrature grids in
    place of samples.
    """

    def __init__(self, n, y_obs, x_obs, y_miss, interval, weights_miss=None, obs_sums=None):
        self.n = float(n)
        self.lo, self.hi = float(interval[0]), float(interval[1])
        if obs_sums is None:
            y_obs, x_obs = np.asarray(y_obs, float), np.asarray(x_obs, float)
            obs_sums = (
                float(len(y_obs)),
                float(y_obs.sum()),
                float(x_obs.sum()),
                float((x_obs * y_obs).sum()),
                float((x_obs * x_obs).sum()),
            )
        self.n1, self.sy, self.sx, self.sxy, self.sxx = obs_sums
        y_miss = np.asarray(y_miss, float)
        order = np.argsort(y_miss, kind="stable")
        self.ys = y_miss[order]
        w = np.ones_like(self.ys) if weights_miss is None else np.asarray(weights_miss, float)[order]
        self.c0 = np.concatenate([[0.0], np.cumsum(w)])
        self.c1 = np.concatenate([[0.0], np.cumsum(w * self.ys)])
        self.c2 = np.concatenate([[0.0], np.cumsum(w * self.ys**2)])

    def _segment(self, k_from, k_to):
        return (
            self.c0[k_to] - self.c0[k_from],
            self.c1[k_to] - self.c1[k_from],
            self.c2[k_to] - self.c2[k_from],
        )

    def psi(self, thetas: np.ndarray, U: np.ndarray) -> np.ndarray:
        """psi_hat at each theta (T, 2) for directions U of shape (k, 2) or (T, k, 2)."""
        thetas = np.atleast_2d(np.asarray(thetas, float))
        U = np.asarray(U, float)
        if U.ndim == 2:
            U = np.broadcast_to(U, (thetas.shape[0],) + U.shape)
        t0 = thetas[:, 0:1]
        t1 = thetas[:, 1:2]
        u1, u2 = U[..., 0], U[..., 1]

        sum_r = self.sy - self.n1 * t0 - t1 * self.sx
        sum_xr = self.sxy - t0 * self.sx - t1 * self.sxx
        total = u1 * sum_r + u2 * sum_xr
        if self.ys.size:
            total = total + self._missing_sum(t0, t1, u1, u2)
        return total / self.n

    def _missing_sum(self, t0, t1, u1, u2):
        lo, hi = self.lo, self.hi
        shape = np.broadcast(t0, u1).shape
        t0 = np.broadcast_to(t0, shape)
        t1 = np.broadcast_to(t1, shape)
        # g_x(r0) = A(x) r0 + C(x)
        a_lo, c_lo = u1 + u2 * lo, -t1 * lo * (u1 + u2 * lo)
        a_hi, c_hi = u1 + u2 * hi, -t1 * hi * (u1 + u2 * hi)
        concave = (u2 * t1) > 0
        slope = u2 * (hi - lo)
        gap = c_hi - c_lo
        with np.errstate(divide="ignore", invalid="ignore"):
            # concave: vertex x*(r0) = r0 / (2 t1) - u1 / (2 u2)
            alpha = 1.0 / np.where(concave, 2 * t1, 1.0)
            beta = -u1 / np.where(concave, 2 * u2, 1.0)
            r_lo = (lo - beta) / alpha
            r_hi = (hi - beta) / alpha
            # otherwise: hi beats lo iff slope * r0 + gap >= 0
            r_star = np.where(slope != 0, -gap / np.where(slope != 0, slope, 1.0), -np.inf)
        left_is_lo = np.where(concave, alpha > 0, slope > 0)
        const_hi = gap >= 0
        left_is_lo = np.where(~concave & (slope == 0), const_hi, left_is_lo)
        r1 = np.where(concave, np.minimum(r_lo, r_hi), r_star)
        r2 = np.where(concave, np.maximum(r_lo, r_hi), r_star)

        k1 = np.searchsorted(self.ys, (r1 + t0).ravel(), side="left").reshape(shape)
        k2 = np.searchsorted(self.ys, (r2 + t0).ravel(), side="left").reshape(shape)
        k2 = np.maximum(k1, k2)
        end = self.ys.size

        def affine(a, c, ka, kb):
            w, s1, _ = self._segment(ka, kb)
            return a * (s1 - w * t0) + c * w

        a_left = np.where(left_is_lo, a_lo, a_hi)
        c_left = np.where(left_is_lo, c_lo, c_hi)
        a_right = np.where(left_is_lo, a_hi, a_lo)
        c_right = np.where(left_is_lo, c_hi, c_lo)
        out = affine(a_left, c_left, 0, k1) + affine(a_right, c_right, k2, end)

        # vertex value: (u2 / (4 t1)) r0^2 + (u1 / 2) r0 + u1^2 t1 / (4 u2)
        w, s1, s2 = self._segment(k1, k2)
        with np.errstate(divide="ignore", invalid="ignore"):
            q2 = np.where(concave, u2 / np.where(concave, 4 * t1, 1.0), 0.0)
            q0 = np.where(concave, u1**2 * t1 / np.where(concave, 4 * u2, 1.0), 0.0)
        sr = s1 - w * t0
        srr = s2 - 2 * t0 * s1 + w * t0**2
        mid = q2 * srr + 0.5 * u1 * sr + q0 * w
        return out + np.where(concave, mid, 0.0)


class MeanBound(MomentModel):
    """Mean of a bounded outcome: phi = z2 - theta, z2 in [lo, hi]."""

    name = "mean_bound"
    d_phi = 1
    d_theta = 1
    d_z1 = 0
    z2_columns = ("z2",)

    def __init__(self, z2_support=(0.0, 1.0), theta_space: Box | None = None):
        self.z2_support = Box((z2_support[0],), (z2_support[1],))
        self.theta_space = theta_space or Box((z2_support[0],), (z2_support[1],))

    def phi(self, z1, z2, theta):
        return np.array([float(np.ravel(z2)[0]) - float(np.ravel(theta)[0])])

    def inner_max(self, u, z1, theta):
        u = float(np.ravel(u)[0])
        t = float(np.ravel(theta)[0])
        lo, hi = self.z2_support.lower[0], self.z2_support.upper[0]
        # u(hi - t) > u(lo - t) iff u > 0; ties go to lo
        z = hi if u > 0 else lo
        return u * (z - t), np.array([z])

    def phi_rows(self, z1, z2, theta):
        return z2[:, :1] - float(np.ravel(theta)[0])

    def inner_max_rows(self, U, z1, theta):
        t = float(np.ravel(theta)[0])
        lo, hi = self.z2_support.lower[0], self.z2_support.upper[0]
        u = U[:, 0]
        return np.broadcast_to(np.maximum(u * (hi - t), u * (lo - t)), (len(z1), len(U))).copy()

    def f_bounds(self, dataset: Dataset, theta) -> tuple[np.ndarray, np.ndarray]:
        """Per-row f_min and f_max (worst cases for missing rows)."""
        t = float(np.ravel(theta)[0])
        lo, hi = self.z2_support.lower[0], self.z2_support.upper[0]
        obs = dataset.s == 1
        z = dataset.z2[:, 0]
        f_min = np.where(obs, z - t, lo - t)
        f_max = np.where(obs, z - t, hi - t)
        return f_min, f_max

    def manski_interval(self, dataset: Dataset) -> tuple[float, float]:
        lo, hi = self.z2_support.lower[0], self.z2_support.upper[0]
        p = dataset.p_hat
        m1 = float(dataset.z2[dataset.s == 1, 0].mean()) if p > 0 else 0.0
        return p * m1 + (1 - p) * lo, p * m1 + (1 - p) * hi

    def describe(self):
        return {
            "name": self.name,
            "z2_support": [self.z2_support.lower[0], self.z2_support.upper[0]],
            "theta_lower": list(self.theta_space.lower),
            "theta_upper": list(self.theta_space.upper),
        }


class CustomFinite(MomentModel):
    """Moment function tabulated on finite grids of (theta, z1, z2).

    The table's theta values must form a full cartesian product; they become
    both the parameter space and the estimation grid.
    """

    name = "custom_finite"

    def __init__(self, table: dict, d_theta: int, d_z1: int, d_z2: int, d_phi: int, source: str = ""):
        self.table = table
        self.d_theta, self.d_z1, self.d_phi = d_theta, d_z1, d_phi
        self.source = source
        thetas = sorted({k[0] for k in table})
        z2s = sorted({k[2] for k in table})
        self.z2_support = FiniteSet(tuple(z2s))
        self.theta_axes = [sorted({t[i] for t in thetas}) for i in range(d_theta)]
        self.theta_space = Box(
            tuple(a[0] for a in self.theta_axes), tuple(a[-1] for a in self.theta_axes)
        )
        z1s = sorted({k[1] for k in table})
        expected = len(thetas) * len(z1s) * len(z2s)
        if len(thetas) != int(np.prod([len(a) for a in self.theta_axes])) or len(table) != expected:
            raise ValueError(
                "custom_finite table must cover every (theta, z1, z2) combination on a product grid"
            )
        self.z1_columns = tuple(f"z1_{i + 1}" for i in range(d_z1))
        self.z2_columns = tuple(f"z2_{i + 1}" for i in range(d_z2))

    @staticmethod
    def _key(v) -> tuple:
        return tuple(round(float(x), 12) for x in np.atleast_1d(v))

    def phi(self, z1, z2, theta):
        key = (self._key(theta), self._key(z1), self._key(z2))
        try:
            return np.array(self.table[key])
        except KeyError:
            raise ValueError(f"(theta, z1, z2) = {key} is not in the custom_finite table") from None

    @classmethod
    def from_csv(cls, path: str) -> "CustomFinite":
        with open(path, newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            cols = reader.fieldnames or []
            tcols = [c for c in cols if c.startswith("theta_")]
            z1cols = [c for c in cols if c.startswith("z1_")]
            z2cols = [c for c in cols if c.startswith("z2_")]
            pcols = [c for c in cols if c.startswith("phi_")]
            if not tcols or not z2cols or not pcols:
                raise ValueError("custom_finite table needs theta_*, z2_* and phi_* columns")
            table = {}
            for row in reader:
                key = (
                    cls._key([float(row[c]) for c in tcols]),
                    cls._key([float(row[c]) for c in z1cols]),
                    cls._key([float(row[c]) for c in z2cols]),
                )
                table[key] = tuple(float(row[c]) for c in pcols)
        return cls(table, len(tcols), len(z1cols), len(z2cols), len(pcols), source=str(path))

    def describe(self):
        return {"name": self.name, "table": self.source, "size": len(self.table)}


@dataclass
class FunctionModel(MomentModel):
    """Moment model built from a plain callable, for ad hoc use and tests."""

    phi_fn: Callable
    d_phi: int
    d_theta: int
    d_z1: int
    z2_support: SupportSpec
    theta_space: Box
    resolution: int = 101
    name: str = field(default="function")

    def phi(self, z1, z2, theta):
        return np.atleast_1d(np.asarray(self.phi_fn(z1, z2, theta), dtype=float))


MODELS = {
    "linear_missing_x": LinearMissingX,
    "mean_bound": MeanBound,
    "custom_finite": CustomFinite,
}


def get_model(name: str, **params) -> MomentModel:
    if name not in MODELS:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    if name == "custom_finite":
        if "table" not in params:
            raise ValueError("custom_finite needs a 'table' CSV path")
        return CustomFinite.from_csv(params["table"])
    kwargs = dict(params)
    if "theta_lower" in kwargs or "theta_upper" in kwargs:
        kwargs["theta_space"] = Box(kwargs.pop("theta_lower"), kwargs.pop("theta_upper"))
    return MODELS[name](**kwargs)
