"""Identified-set estimation on a parameter grid and Hausdorff distances."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .model import Box
from .support import DirectionSet, criterion_values, support_evaluator

SCREEN_STEP = 12


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    """Cartesian grid over a box; points are ordered lexicographically."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if not axes or any(a.ndim != 1 or a.size == 0 for a in axes):
            raise ValueError("grid axes must be nonempty 1-d arrays")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_box(cls, box: Box, resolution=101) -> "ThetaGrid":
        res = [resolution] * box.dim if np.isscalar(resolution) else list(resolution)
        return cls(tuple(np.linspace(lo, hi, r) for lo, hi, r in zip(box.lower, box.upper, res)))

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def steps(self) -> np.ndarray:
        return np.array([(a[-1] - a[0]) / (a.size - 1) if a.size > 1 else 0.0 for a in self.axes])

    def __len__(self):
        return int(np.prod(self.shape))

    def index_of(self, theta) -> int:
        """Flat index of the grid point nearest to ``theta``."""
        idx = [int(np.argmin(np.abs(a - t))) for a, t in zip(self.axes, np.atleast_1d(theta))]
        return int(np.ravel_multi_index(idx, self.shape))

    def describe(self) -> dict:
        return {
            "lower": [float(a[0]) for a in self.axes],
            "upper": [float(a[-1]) for a in self.axes],
            "shape": list(self.shape),
        }


@dataclass(frozen=True, eq=False)
class IdentifiedSetEstimate:
    grid: ThetaGrid
    q_values: np.ndarray
    eta: float
    members: np.ndarray
    exact: np.ndarray | None = None

    @property
    def member_points(self) -> np.ndarray:
        return self.grid.points[self.members]

    @property
    def flags(self) -> np.ndarray:
        out = np.zeros(len(self.grid), dtype=bool)
        out[self.members] = True
        return out

    def with_eta(self, eta: float) -> "IdentifiedSetEstimate":
        if eta > self.eta and self.exact is not None and not self.exact.all():
            raise ValueError("screened estimate cannot be re-thresholded at a larger eta")
        return IdentifiedSetEstimate(
            self.grid, self.q_values, eta, np.flatnonzero(self.q_values >= -eta), self.exact
        )

    def to_csv(self, path, header_comment: str | None = None) -> None:
        pts = self.grid.points
        flags = self.flags
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow([f"theta_{k + 1}" for k in range(pts.shape[1])] + ["q_value", "member"])
            for p, q, f in zip(pts, self.q_values, flags):
                w.writerow([repr(float(v)) for v in p] + [repr(float(q)), int(f)])


def eta_rule(n: float, c: float = 0.1) -> float:
    """Tuning sequence c * log(n) / sqrt(n) (natural log)."""
    if n < 2 or c <= 0:
        raise ValueError("eta_rule needs n >= 2 and c > 0")
    return c * math.log(n) / math.sqrt(n)


def grid_criterion(evaluator, points, directions, refine=True, threads=1, chunk=1024) -> np.ndarray:
    """Criterion at every grid point, in grid order."""
    points = np.atleast_2d(points)
    chunks = [points[i : i + chunk] for i in range(0, len(points), chunk)]

    def run(block):
        return criterion_values(evaluator, block, directions, refine)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(b) for b in chunks]
    return np.concatenate(parts)


def estimate_set(
    dataset,
    model,
    grid: ThetaGrid,
    directions: DirectionSet | None = None,
    eta: float | None = None,
    refine: bool = True,
    threads: int = 1,
    evaluator=None,
    screen: bool = False,
) -> IdentifiedSetEstimate:
    """Grid points whose sample criterion is at least ``-eta``.

    With ``screen``, psi_hat is first evaluated on every ``SCREEN_STEP``-th
    grid direction. Its minimum bounds the criterion from above, so points
    already below ``-eta`` are excluded without the full evaluation; their
    ``q_values`` hold that upper bound and ``exact`` marks them False.
    Membership is identical to the unscreened computation.
    """
    if len(grid) == 0:
        raise ValueError("empty grid")
    if directions is None:
        directions = DirectionSet(model.d_phi)
    if eta is None:
        eta = eta_rule(dataset.n)
    if eta <= 0:
        raise ValueError("eta must be positive")
    ev = evaluator if evaluator is not None else support_evaluator(dataset, model)
    pts = grid.points
    if screen and directions.m >= 4 * SCREEN_STEP:
        coarse = ev.psi(pts, directions.directions[::SCREEN_STEP]).min(axis=1)
        exact = coarse >= -eta
        q = np.minimum(0.0, coarse)
        if exact.any():
            q[exact] = grid_criterion(ev, pts[exact], directions, refine, threads)
    else:
        q = grid_criterion(ev, pts, directions, refine, threads)
        exact = np.ones(len(q), dtype=bool)
    return IdentifiedSetEstimate(grid, q, float(eta), np.flatnonzero(q >= -eta), exact)


def directed_distance(A, B, scale=None, p=2) -> float:
    """sup over a in A of the distance from a to B (optionally rescaled axes)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.size == 0 or B.size == 0:
        raise ValueError("undefined Hausdorff distance: empty point set")
    A = A.reshape(len(A), -1)
    B = B.reshape(len(B), -1)
    if scale is not None:
        A, B = A / scale, B / scale
    d, _ = cKDTree(B).query(A, k=1, p=p)
    return float(np.max(d))


def hausdorff(A, B) -> float:
    """Euclidean Hausdorff distance between two finite point sets."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.size == 0 or B.size == 0:
        raise ValueError("undefined Hausdorff distance: empty point set")
    return max(directed_distance(A, B), directed_distance(B, A))
