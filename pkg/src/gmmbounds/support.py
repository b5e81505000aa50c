"""Sample support function of the moment-prediction set and its minimum.

For a direction ``u`` the row contribution is ``u'phi(z1, z2, theta)`` when
``z2`` is observed and ``max_{z2} u'phi(z1, z2, theta)`` when it is missing;
their mean is ``psi_hat(u)``. The criterion is the minimum of ``psi_hat`` over
the unit ball, which by positive homogeneity equals ``min(0, min over the
sphere)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .model import Dataset, MomentModel

TIE_TOL = 1e-12
ANGLE_TOL = 1e-6
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
BALL_KINDS = ("euclidean", "l1", "linf")


def ball_norm(U: np.ndarray, ball_kind: str) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if ball_kind == "euclidean":
        return np.sqrt((U * U).sum(axis=-1))
    if ball_kind == "l1":
        return np.abs(U).sum(axis=-1)
    if ball_kind == "linf":
        return np.abs(U).max(axis=-1)
    raise ValueError(f"unknown ball kind {ball_kind!r}; choose from {BALL_KINDS}")


def angle_directions(angles: np.ndarray, ball_kind: str = "euclidean") -> np.ndarray:
    """Unit vectors (in the chosen norm) at the given planar angles."""
    angles = np.asarray(angles, dtype=float)
    U = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return U / ball_norm(U, ball_kind)[..., None]


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Deterministic directions on the unit sphere of the chosen norm."""

    d_phi: int
    m: int = 720
    ball_kind: str = "euclidean"
    directions: np.ndarray = field(init=False, repr=False)
    angles: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        if self.ball_kind not in BALL_KINDS:
            raise ValueError(f"unknown ball kind {self.ball_kind!r}; choose from {BALL_KINDS}")
        angles = None
        if self.d_phi == 1:
            U = np.array([[-1.0], [1.0]])
            object.__setattr__(self, "m", 2)
        elif self.d_phi == 2:
            if self.m < 3:
                raise ValueError("need at least 3 directions in the plane")
            angles = 2.0 * np.pi * np.arange(self.m) / self.m
            U = angle_directions(angles, self.ball_kind)
        else:
            # unscrambled Halton points pushed through the normal quantile
            pts = qmc.Halton(d=self.d_phi, scramble=False).random(self.m + 1)[1:]
            G = _normal.ppf(pts)
            U = G / ball_norm(G, self.ball_kind)[:, None]
        U.setflags(write=False)
        object.__setattr__(self, "directions", U)
        object.__setattr__(self, "angles", angles)

    def __len__(self):
        return self.m

    def direction_at(self, angle: float) -> np.ndarray:
        return angle_directions(np.array([angle]), self.ball_kind)[0]

    def describe(self) -> dict:
        return {"d_phi": self.d_phi, "m": self.m, "ball_kind": self.ball_kind}


def _as_directions(directions) -> tuple[np.ndarray, DirectionSet | None]:
    if isinstance(directions, DirectionSet):
        return directions.directions, directions
    U = np.atleast_2d(np.asarray(directions, dtype=float))
    return U, None


@dataclass(frozen=True, eq=False)
class EvaluationMatrix:
    """Per-row contributions ``g_i(u_j, theta)``; column means are psi_hat."""

    values: np.ndarray
    theta: np.ndarray
    directions: np.ndarray
    direction_set: DirectionSet | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column_means(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def to_csv(self, path, header_comment: str | None = None) -> None:
        m, d = self.directions.shape
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(["row"] + list(range(m)))
            if self.direction_set is not None and self.direction_set.angles is not None:
                w.writerow(["angle"] + [repr(float(a)) for a in self.direction_set.angles])
            for k in range(d):
                w.writerow([f"u_{k + 1}"] + [repr(float(v)) for v in self.directions[:, k]])
            for i, row in enumerate(self.values):
                w.writerow([i] + [repr(float(v)) for v in row])


@dataclass(frozen=True)
class SupportCurve:
    psi_hat: np.ndarray
    min_value: float
    argmin_indices: tuple


def build_matrix(dataset: Dataset, model: MomentModel, theta, directions) -> EvaluationMatrix:
    """Evaluate every row at every direction."""
    if getattr(dataset, "is_panel", False):
        from .multiperiod import build_matrix_3

        return build_matrix_3(dataset, model, theta, directions)
    U, dset = _as_directions(directions)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if U.shape[1] != model.d_phi:
        raise ValueError(f"directions have dimension {U.shape[1]}, model has {model.d_phi} moments")
    obs = dataset.s == 1
    G = np.empty((dataset.n, U.shape[0]))
    if obs.any():
        Phi = model.phi_rows(dataset.z1[obs], dataset.z2[obs], theta)
        G[obs] = Phi @ U.T
    if (~obs).any():
        z1m = dataset.z1[~obs]
        try:
            G[~obs] = model.inner_max_rows(U, z1m, theta)
        except Exception as exc:
            rows = np.flatnonzero(~obs)
            for a, i in enumerate(rows):
                for j, u in enumerate(U):
                    try:
                        model.inner_max(u, z1m[a], theta)
                    except Exception as inner:
                        raise RuntimeError(
                            f"inner maximization failed at row {i}, direction {j}: {inner}"
                        ) from inner
            raise RuntimeError(f"inner maximization failed: {exc}") from exc
    return EvaluationMatrix(G, theta, U, dset)


def psi_hat(matrix: EvaluationMatrix) -> SupportCurve:
    if matrix.values.size == 0:
        raise ValueError("empty evaluation matrix")
    vals = matrix.column_means()
    lo = float(vals.min())
    idx = tuple(int(j) for j in np.flatnonzero(vals <= lo + TIE_TOL))
    return SupportCurve(vals, lo, idx)


# ---------------------------------------------------------------------------
# evaluators: psi_hat at arbitrary (theta, u) pairs


class MatrixSupport:
    """Generic evaluator via :func:`build_matrix`; one theta at a time."""

    def __init__(self, dataset: Dataset, model: MomentModel):
        self.dataset = dataset
        self.model = model

    def psi(self, thetas, U) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, float))
        U = np.asarray(U, float)
        out = np.empty((thetas.shape[0], U.shape[-2]))
        for t, theta in enumerate(thetas):
            Ut = U if U.ndim == 2 else U[t]
            out[t] = build_matrix(self.dataset, self.model, theta, Ut).column_means()
        return out

    def subgradient(self, theta, u) -> np.ndarray:
        """Mean of phi at the per-row maximizers, a subgradient of psi_hat at u."""
        ds, model = self.dataset, self.model
        theta = np.atleast_1d(np.asarray(theta, float))
        z2 = ds.z2.copy()
        miss = ds.s == 0
        if miss.any():
            z2[miss] = model.argmax_rows(np.asarray(u, float), ds.z1[miss], theta)
        return model.phi_rows(ds.z1, z2, theta).mean(axis=0)


def support_evaluator(dataset, model):
    """Fastest available evaluator for the (dataset, model) pair."""
    if getattr(dataset, "is_panel", False):
        from .multiperiod import PanelSupport

        return PanelSupport(dataset, model)
    fast = getattr(model, "fast_support", None)
    if fast is not None:
        return fast(dataset)
    return MatrixSupport(dataset, model)


# ---------------------------------------------------------------------------
# minimization over directions


def _golden_batch(center: np.ndarray, delta: float, ball_kind: str, evaluate):
    """Golden-section search on angle brackets [c - delta, c + delta], one per row.

    ``evaluate`` maps directions of shape (T, 1, 2) to values (T, 1).
    Returns the best value seen and its angle per row.
    """
    a = center - delta
    b = center + delta
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)

    def f(ang):
        return evaluate(angle_directions(ang, ball_kind)[:, None, :])[:, 0]

    fc, fd = f(c), f(d)
    best_v = np.where(fc <= fd, fc, fd)
    best_a = np.where(fc <= fd, c, d)
    n_iter = max(0, math.ceil(math.log(ANGLE_TOL / (2 * delta)) / math.log(GOLDEN)))
    for _ in range(n_iter):
        left = fc <= fd
        # left: keep [a, d]; new c. right: keep [c, b]; new d.
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_d_left = c
        new_c_right = d
        c_new = np.where(left, b - GOLDEN * (b - a), new_c_right)
        d_new = np.where(left, new_d_left, a + GOLDEN * (b - a))
        probe = np.where(left, c_new, d_new)
        fp = f(probe)
        fc_new = np.where(left, fp, fd)
        fd_new = np.where(left, fc, fp)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
        improve = fp < best_v
        best_v = np.where(improve, fp, best_v)
        best_a = np.where(improve, probe, best_a)
    return best_v, best_a


def refine_minimum(curve: SupportCurve, directions: DirectionSet, evaluate) -> tuple[float, np.ndarray]:
    """Golden-section polish of the planar minimum around the best grid direction.

    ``evaluate`` maps an array of directions (k, 2) to psi_hat values (k,).
    Never returns a value above the grid minimum.
    """
    if directions.d_phi != 2:
        raise ValueError("angular refinement needs two moments")
    j = curve.argmin_indices[0]
    delta = 2.0 * np.pi / directions.m
    best_v, best_a = _golden_batch(
        np.array([directions.angles[j]]),
        delta,
        directions.ball_kind,
        lambda U: np.asarray(evaluate(U[:, 0, :]), float)[:, None],
    )
    if best_v[0] < curve.min_value:
        return float(best_v[0]), directions.direction_at(best_a[0])
    return curve.min_value, directions.directions[j].copy()


def _polish_subgradient(evaluator, theta, u0, v0, ball_kind, iters=50):
    """Projected subgradient descent on the sphere, keeping the incumbent."""
    best_u, best_v = u0.copy(), v0
    u = u0.copy()
    for k in range(1, iters + 1):
        g = evaluator.subgradient(theta, u)
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        u = u - (1.0 / k) * g / gn
        nu = ball_norm(u, ball_kind)
        if nu == 0:
            break
        u = u / nu
        v = float(evaluator.psi(theta[None, :], u[None, :])[0, 0])
        if v < best_v:
            best_u, best_v = u.copy(), v
    return best_v, best_u


def sphere_minimum(evaluator, thetas, directions: DirectionSet, refine: bool = True):
    """Minimum of psi_hat over the sphere at each theta.

    Returns ``(values, best_directions, grid_values)`` with shapes (T,),
    (T, d_phi) and (T, m).
    """
    thetas = np.atleast_2d(np.asarray(thetas, float))
    grid = evaluator.psi(thetas, directions.directions)
    j = grid.argmin(axis=1)
    vals = grid[np.arange(len(thetas)), j]
    best_u = directions.directions[j].copy()
    if refine and directions.d_phi == 2:
        delta = 2.0 * np.pi / directions.m
        rv, ra = _golden_batch(
            directions.angles[j],
            delta,
            directions.ball_kind,
            lambda U: evaluator.psi(thetas, U),
        )
        better = rv < vals
        vals = np.where(better, rv, vals)
        best_u[better] = angle_directions(ra[better], directions.ball_kind)
    elif refine and directions.d_phi >= 3 and hasattr(evaluator, "subgradient"):
        for t, theta in enumerate(thetas):
            vals[t], best_u[t] = _polish_subgradient(
                evaluator, theta, best_u[t], vals[t], directions.ball_kind
            )
    return vals, best_u, grid


def criterion_values(evaluator, thetas, directions: DirectionSet, refine: bool = True) -> np.ndarray:
    vals, _, _ = sphere_minimum(evaluator, thetas, directions, refine)
    return np.minimum(0.0, vals)


def criterion(dataset, model, theta, directions: DirectionSet | None = None, refine: bool = True) -> float:
    """Sample criterion: min of psi_hat over the unit ball (always <= 0)."""
    if directions is None:
        directions = DirectionSet(model.d_phi)
    ev = support_evaluator(dataset, model)
    theta = np.atleast_1d(np.asarray(theta, float))
    return float(criterion_values(ev, theta[None, :], directions, refine)[0])
