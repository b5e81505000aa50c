"""Bootstrap inference on the minimum of the sample support function.

The statistic is ``sqrt(n) * min over the unit ball of psi_hat``. Its
critical value comes from the bootstrap for directionally differentiable
functionals: centered bootstrap perturbations of ``psi_hat`` are minimized
over the epsilon-enlarged argmin set of the original ``psi_hat``.

The ball is discretized as the union of the segments ``{t u_j : t in [0, 1]}``
through the grid directions. Since ``psi_hat(t u) = t psi_hat(u)``, the
enlarged argmin set meets each segment in an interval of ``t``, and the
origin belongs to it exactly when the criterion is within ``epsilon`` of 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .setestimate import ThetaGrid, eta_rule
from .support import (
    TIE_TOL,
    DirectionSet,
    EvaluationMatrix,
    SupportCurve,
    build_matrix,
    criterion,
    psi_hat,
    refine_minimum,
)


@dataclass(frozen=True, eq=False)
class TestResult:
    theta0: np.ndarray
    t_stat: float
    enlarged_argmin: tuple
    origin_in_argmin: bool
    boot_draws: np.ndarray
    critical_value: float
    alpha: float
    reject: bool
    seed: int
    epsilon: float
    B: int

    __test__ = False  # not a pytest class

    def summary(self) -> dict:
        return {
            "theta0": [float(t) for t in self.theta0],
            "t_stat": float(self.t_stat),
            "critical_value": float(self.critical_value),
            "reject": bool(self.reject),
            "alpha": float(self.alpha),
            "B": int(self.B),
            "epsilon": float(self.epsilon),
            "seed": self.seed if isinstance(self.seed, int) else list(self.seed),
            "argmin_size": len(self.enlarged_argmin),
            "origin_in_argmin": bool(self.origin_in_argmin),
        }


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    grid: ThetaGrid
    alpha: float
    accepted: np.ndarray
    t_stats: np.ndarray
    critical_values: np.ndarray
    argmin_sizes: np.ndarray = field(repr=False)

    @property
    def rejects(self) -> np.ndarray:
        return self.t_stats < self.critical_values

    @property
    def accepted_points(self) -> np.ndarray:
        return self.grid.points[self.accepted]


def test_statistic(dataset, model, theta0, directions: DirectionSet | None = None) -> float:
    """sqrt(n) times the sample criterion; never positive."""
    return math.sqrt(dataset.n) * criterion(dataset, model, theta0, directions)


test_statistic.__test__ = False


def enlarged_argmin(curve: SupportCurve | np.ndarray, epsilon: float) -> tuple:
    """Directions whose psi_hat is within ``epsilon`` of the smallest value."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    vals = curve.psi_hat if isinstance(curve, SupportCurve) else np.asarray(curve, float)
    lo = vals.min()
    return tuple(int(j) for j in np.flatnonzero(vals <= lo + epsilon + TIE_TOL))


def ball_argmin_segments(psi: np.ndarray, epsilon: float):
    """Intersect the enlarged argmin set of the ball with each segment [0, u_j].

    Returns ``(cols, t_lo, t_hi, origin)``: the columns whose segment meets
    the set away from the origin, the feasible scale interval on each, and
    whether the origin itself is in the set.
    """
    psi = np.asarray(psi, float)
    q = min(0.0, float(psi.min()))
    thr = q + epsilon + TIE_TOL
    origin = thr >= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = thr / psi
    if origin:
        # t psi_j <= thr holds for t <= thr / psi_j when psi_j > 0
        t_lo = np.zeros_like(psi)
        t_hi = np.where(psi > thr, ratio, 1.0)
        ok = t_hi > 0
    else:
        # thr < 0: need psi_j < 0 and t >= thr / psi_j
        ok = (psi < 0) & (psi <= thr)
        t_lo = np.where(ok, ratio, 1.0)
        t_hi = np.ones_like(psi)
    cols = np.flatnonzero(ok)
    return cols, t_lo[cols], t_hi[cols], origin


def empirical_quantile(draws, alpha: float) -> float:
    """Order statistic ``ceil(alpha * B)`` (1-based) of the draws."""
    draws = np.sort(np.asarray(draws, float))
    B = draws.size
    if B == 0:
        raise ValueError("no bootstrap draws")
    k = max(1, math.ceil(round(alpha * B, 9)))
    return float(draws[min(k, B) - 1])


def _stream(seed, b: int) -> np.random.Generator:
    key = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.default_rng(key + [b])


def resample_counts(n: int, B: int, seed) -> np.ndarray:
    """Multiplicity of each row in B resamples; draw b uses stream (*seed, b)."""
    if B < 1:
        raise ValueError("B must be at least 1")
    C = np.empty((B, n))
    for b in range(B):
        idx = _stream(seed, b).integers(0, n, size=n)
        C[b] = np.bincount(idx, minlength=n)
    return C


def resample_indices(n: int, B: int, seed) -> np.ndarray:
    return np.stack([_stream(seed, b).integers(0, n, size=n) for b in range(B)])


def _matrix_and_curve(dataset, model, theta0, directions, refine=True):
    """Evaluation matrix on the grid directions, plus the refined direction when d_phi = 2."""
    def builder(th, U):
        return build_matrix(dataset, model, th, U)

    mat = builder(theta0, directions)
    curve = psi_hat(mat)
    if refine and directions.d_phi == 2:
        _, u_star = refine_minimum(curve, directions, lambda U: builder(theta0, U).column_means())
        extra = builder(theta0, u_star[None, :]).values
        U = np.vstack([mat.directions, u_star[None, :]])
        mat = EvaluationMatrix(np.hstack([mat.values, extra]), mat.theta, U, directions)
        curve = psi_hat(mat)
    return mat, curve


def _centered_means(G, psi, counts):
    """Resampled column means minus the original ones.

    Constant columns are exactly zero, so degenerate samples give draws of
    exactly 0 rather than rounding noise.
    """
    Gc = G - psi
    Gc[:, np.ptp(G, axis=0) == 0] = 0.0
    return counts @ Gc / G.shape[0]


def _draws(G, psi, cols, t_lo, t_hi, origin, counts):
    n = G.shape[0]
    B = counts.shape[0]
    if cols.size == 0:
        return np.zeros(B)
    D = math.sqrt(n) * _centered_means(G[:, cols], psi[cols], counts)
    # min over t in [t_lo, t_hi] of t * D
    per_col = np.where(D < 0, t_hi * D, t_lo * D)
    T = per_col.min(axis=1)
    if origin:
        T = np.minimum(T, 0.0)
    return T


def bootstrap_draws(mat: EvaluationMatrix, epsilon: float, counts: np.ndarray):
    """Bootstrap statistics for a fixed matrix; returns (t_stat, draws, cols, origin)."""
    G = mat.values
    n = G.shape[0]
    psi = G.mean(axis=0)
    q = min(0.0, float(psi.min()))
    cols, t_lo, t_hi, origin = ball_argmin_segments(psi, epsilon)
    return math.sqrt(n) * q, _draws(G, psi, cols, t_lo, t_hi, origin, counts), cols, origin


def bootstrap_test(
    dataset,
    model,
    theta0,
    directions: DirectionSet | None = None,
    alpha: float = 0.05,
    B: int = 1000,
    epsilon: float | None = None,
    seed: int = 0,
    counts: np.ndarray | None = None,
    raw_resample: bool = False,
) -> TestResult:
    """Test H0: theta = theta0 with bootstrap critical values.

    Rows of the evaluation matrix are resampled instead of raw observations;
    each row depends on one observation only, so the two agree.
    ``raw_resample=True`` re-evaluates the matrix on each resampled dataset.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    directions = directions or DirectionSet(model.d_phi)
    theta0 = np.atleast_1d(np.asarray(theta0, float))
    n = dataset.n
    epsilon = eta_rule(n) if epsilon is None else float(epsilon)
    mat, _ = _matrix_and_curve(dataset, model, theta0, directions)
    if counts is None:
        counts = resample_counts(n, B, seed)
    if raw_resample:
        t_stat, draws, cols, origin = _raw_bootstrap(dataset, model, theta0, mat, epsilon, B, seed)
    else:
        t_stat, draws, cols, origin = bootstrap_draws(mat, epsilon, counts)
    crit = empirical_quantile(draws, alpha)
    return TestResult(
        theta0, t_stat, tuple(int(c) for c in cols), origin, draws, crit, alpha,
        bool(t_stat < crit), seed, epsilon, len(draws),
    )


def _raw_bootstrap(dataset, model, theta0, mat, epsilon, B, seed):
    n = dataset.n
    psi = mat.column_means()
    q = min(0.0, float(psi.min()))
    cols, t_lo, t_hi, origin = ball_argmin_segments(psi, epsilon)
    draws = np.empty(B)
    U = mat.directions[cols]
    for b, idx in enumerate(resample_indices(n, B, seed)):
        if cols.size == 0:
            draws[b] = 0.0
            continue
        star = build_matrix(dataset.take(idx), model, theta0, U).column_means()
        D = math.sqrt(n) * (star - psi[cols])
        draws[b] = np.where(D < 0, t_hi * D, t_lo * D).min()
        if origin:
            draws[b] = min(draws[b], 0.0)
    return math.sqrt(n) * q, draws, cols, origin


def naive_bootstrap_test(
    dataset,
    model,
    theta0,
    directions: DirectionSet | None = None,
    alpha: float = 0.05,
    B: int = 1000,
    seed: int = 0,
    counts: np.ndarray | None = None,
) -> TestResult:
    """Standard nonparametric bootstrap of the statistic itself (diagnostic baseline)."""
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    directions = directions or DirectionSet(model.d_phi)
    theta0 = np.atleast_1d(np.asarray(theta0, float))
    n = dataset.n
    mat, _ = _matrix_and_curve(dataset, model, theta0, directions)
    if counts is None:
        counts = resample_counts(n, B, seed)
    G = mat.values
    psi = G.mean(axis=0)
    q = min(0.0, float(psi.min()))
    star = psi + _centered_means(G, psi, counts)
    draws = math.sqrt(n) * (np.minimum(0.0, star.min(axis=1)) - q)
    t_stat = math.sqrt(n) * q
    crit = empirical_quantile(draws, alpha)
    return TestResult(
        theta0, t_stat, tuple(range(G.shape[1])), True, draws, crit, alpha,
        bool(t_stat < crit), seed, 0.0, B,
    )


def confidence_regions(
    dataset,
    model,
    grid: ThetaGrid,
    directions: DirectionSet | None = None,
    alphas=(0.05,),
    B: int = 1000,
    epsilon: float | None = None,
    seed: int = 0,
    share_indices: bool = True,
    threads: int = 1,
) -> list[ConfidenceRegion]:
    """Invert the bootstrap test over a grid, one region per level.

    With ``share_indices`` every grid point reuses the same B resamples;
    otherwise grid point j draws from stream (seed + j, b).
    """
    directions = directions or DirectionSet(model.d_phi)
    n = dataset.n
    epsilon = eta_rule(n) if epsilon is None else float(epsilon)
    pts = grid.points
    shared = resample_counts(n, B, seed) if share_indices else None

    def one(j):
        mat, _ = _matrix_and_curve(dataset, model, pts[j], directions)
        counts = shared if shared is not None else resample_counts(n, B, seed + j)
        t_stat, draws, cols, origin = bootstrap_draws(mat, epsilon, counts)
        crits = [empirical_quantile(draws, a) for a in alphas]
        return t_stat, crits, cols.size + int(origin)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(len(pts))))
    else:
        results = [one(j) for j in range(len(pts))]
    t_stats = np.array([r[0] for r in results])
    sizes = np.array([r[2] for r in results])
    out = []
    for k, a in enumerate(alphas):
        crit = np.array([r[1][k] for r in results])
        accepted = np.flatnonzero(~(t_stats < crit))
        out.append(ConfidenceRegion(grid, float(a), accepted, t_stats, crit, sizes))
    return out


def confidence_region(
    dataset,
    model,
    grid: ThetaGrid,
    directions: DirectionSet | None = None,
    alpha: float = 0.05,
    B: int = 1000,
    epsilon: float | None = None,
    seed: int = 0,
    share_indices: bool = True,
    threads: int = 1,
) -> ConfidenceRegion:
    return confidence_regions(
        dataset, model, grid, directions, (alpha,), B, epsilon, seed, share_indices, threads
    )[0]
