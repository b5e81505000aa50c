"""Data-generating process of the regression design and the Monte Carlo runner."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .inference import bootstrap_test, empirical_quantile, naive_bootstrap_test, resample_counts
from .model import Box, Dataset, LinearMissingX, LinearMissingXSupport
from .setestimate import ThetaGrid, directed_distance, estimate_set, eta_rule, hausdorff
from .support import DirectionSet, sphere_minimum

REFERENCE_N = 10_000
REFERENCE_STREAM = 2**31 - 1  # replications use streams 0..R-1


@dataclass(frozen=True)
class DgpSpec:
    """y = t0 + t1 x + e, x ~ U[0, 1], e ~ U[-1, 1], x observed w.p. p_select."""

    theta_true: tuple = (0.5, 1.0)
    p_select: float = 0.9
    n: int = 1000
    seed: int = 0
    x_support: tuple = (0.0, 1.0)
    eps_half_width: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p_select < 1.0:
            raise ValueError("p_select must lie in (0, 1)")
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "theta_true", tuple(float(t) for t in self.theta_true))
        object.__setattr__(self, "x_support", tuple(float(t) for t in self.x_support))

    def replace(self, **kw) -> "DgpSpec":
        return DgpSpec(**{**asdict(self), **kw})


def simulate_dataset(spec: DgpSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Draw one MCAR sample; x is kept only where s = 1."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    lo, hi = spec.x_support
    x = rng.uniform(lo, hi, spec.n)
    e = rng.uniform(-spec.eps_half_width, spec.eps_half_width, spec.n)
    s = (rng.uniform(size=spec.n) < spec.p_select).astype(np.int8)
    t0, t1 = spec.theta_true
    y = t0 + t1 * x + e
    return Dataset(s, y[:, None], x[:, None])


def population_support(spec: DgpSpec, nodes: int = 200_000) -> LinearMissingXSupport:
    """Population psi of the design, by a midpoint rule over the law of y.

    Observed-row moments are exact; the worst case over missing rows is
    integrated against the trapezoidal density of y = t0 + t1 x + e.
    """
    t0, t1 = spec.theta_true
    lo, hi = spec.x_support
    h = spec.eps_half_width
    p = spec.p_select
    ex = (lo + hi) / 2
    exx = (lo * lo + lo * hi + hi * hi) / 3
    obs = (p, p * (t0 + t1 * ex), p * ex, p * (t0 * ex + t1 * exx), p * exx)
    # y - t0 = t1 x + e: the sum of U[t1 lo, t1 hi] and U[-h, h]
    a, b = sorted((t1 * lo, t1 * hi))
    w_lo, w_hi = a - h, b + h
    edges = np.linspace(w_lo, w_hi, nodes + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    if b > a:
        overlap = np.clip(np.minimum(mids + h, b) - np.maximum(mids - h, a), 0.0, None)
        dens = overlap / ((b - a) * 2 * h)
    else:
        dens = np.where(np.abs(mids - a) <= h, 1.0 / (2 * h), 0.0)
    weights = dens * (edges[1] - edges[0])
    weights = weights / weights.sum() * (1 - p)
    return LinearMissingXSupport(1.0, None, None, t0 + mids, (lo, hi), weights_miss=weights, obs_sums=obs)


def population_criterion(spec: DgpSpec, thetas, directions: DirectionSet | None = None) -> np.ndarray:
    ev = population_support(spec)
    directions = directions or DirectionSet(2)
    vals, _, _ = sphere_minimum(ev, np.atleast_2d(thetas), directions)
    return np.minimum(0.0, vals)


def boundary_point(spec: DgpSpec, direction=(0.0, 1.0), directions: DirectionSet | None = None,
                   tol: float = 1e-7, t_max: float = 2.0) -> np.ndarray:
    """Where the ray from ``theta_true`` along ``direction`` leaves the population set."""
    ev = population_support(spec)
    directions = directions or DirectionSet(2)
    start = np.asarray(spec.theta_true, float)
    e = np.asarray(direction, float)

    def inside(t):
        v, _, _ = sphere_minimum(ev, (start + t * e)[None, :], directions)
        return v[0] >= -1e-10

    if not inside(0.0):
        raise ValueError("theta_true is not in the population identified set")
    lo, hi = 0.0, t_max
    if inside(hi):
        raise ValueError("ray does not leave the set within t_max")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return start + lo * e


def reference_set(spec: DgpSpec, model, grid: ThetaGrid, directions: DirectionSet, eta_c: float,
                  master_seed: int, n: int = REFERENCE_N):
    """Large-sample stand-in for the true identified set."""
    rng = np.random.default_rng([master_seed, REFERENCE_STREAM])
    ds = simulate_dataset(spec.replace(n=n), rng)
    return estimate_set(ds, model, grid, directions, eta_rule(n, eta_c))


@dataclass
class McReport:
    R: int
    n: int
    eta: float
    epsilon: float
    grid: ThetaGrid
    reference_flags: np.ndarray
    member_flags: np.ndarray  # (R, len(grid))
    hausdorff: np.ndarray
    containment_steps: np.ndarray
    set_sizes: np.ndarray
    test_points: dict
    alphas: tuple
    rejections: dict  # (label, alpha) -> count
    naive_rejections: dict
    argmin_sizes: dict  # label -> mean size of the enlarged argmin set
    runtime: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def member_frequency(self) -> np.ndarray:
        return self.member_flags.mean(axis=0)

    def rejection_rate(self, label: str, alpha: float, naive: bool = False) -> float:
        table = self.naive_rejections if naive else self.rejections
        return table[(label, float(alpha))] / self.R

    def summary(self) -> dict:
        return {
            "R": self.R,
            "n": self.n,
            "eta": self.eta,
            "epsilon": self.epsilon,
            "reference_size": int(self.reference_flags.sum()),
            "mean_set_size": float(self.set_sizes.mean()),
            "min_set_size": int(self.set_sizes.min()),
            "median_hausdorff": float(np.median(self.hausdorff)),
            "mean_hausdorff": float(np.mean(self.hausdorff)),
            "containment_rate": float(np.mean(self.containment_steps <= 1.0 + 1e-9)),
            "test_points": {k: [float(v) for v in p] for k, p in self.test_points.items()},
            "rejection_rates": [
                {"label": lab, "alpha": a, "rate": self.rejection_rate(lab, a),
                 "naive_rate": self.rejection_rate(lab, a, naive=True)}
                for lab in self.test_points for a in self.alphas
            ],
            "mean_argmin_size": {k: float(v) for k, v in self.argmin_sizes.items()},
        }


def _replicate(job):
    (r, spec, model, grid, directions, eta, eps, B, alphas, master_seed, test_points, ref_pts) = job
    rng = np.random.default_rng([master_seed, r])
    ds = simulate_dataset(spec, rng)
    est = estimate_set(ds, model, grid, directions, eta, screen=True)
    flags = est.flags
    if est.members.size:
        pts = est.member_points
        h = hausdorff(pts, ref_pts)
        cont = directed_distance(ref_pts, pts, scale=np.where(grid.steps > 0, grid.steps, 1.0), p=np.inf)
    else:
        h = cont = np.inf
    rej, naive, sizes = {}, {}, {}
    if test_points:
        counts = resample_counts(ds.n, B, [master_seed, r, 1])
        for label, th in test_points.items():
            fs = bootstrap_test(ds, model, th, directions, alphas[0], B, eps, counts=counts)
            nv = naive_bootstrap_test(ds, model, th, directions, alphas[0], B, counts=counts)
            for a in alphas:
                rej[(label, a)] = int(fs.t_stat < empirical_quantile(fs.boot_draws, a))
                naive[(label, a)] = int(nv.t_stat < empirical_quantile(nv.boot_draws, a))
            sizes[label] = len(fs.enlarged_argmin) + int(fs.origin_in_argmin)
    return r, flags, h, cont, int(est.members.size), rej, naive, sizes


def _single_blas_thread():
    threadpool_limits(limits=1)


def run_study(
    spec: DgpSpec,
    grid: ThetaGrid,
    directions: DirectionSet | None = None,
    eta_c: float = 0.1,
    epsilon_c: float = 0.1,
    B: int = 200,
    R: int = 200,
    alphas=(0.05,),
    master_seed: int = 0,
    test_points: dict | None = None,
    threads: int = 1,
    model=None,
    reference=None,
) -> McReport:
    """Monte Carlo study: set estimates, Hausdorff errors and test rejections.

    Replication r draws its sample from stream (master_seed, r); the reference
    set comes from one 10,000-observation sample on a separate stream.
    """
    if R < 1:
        raise ValueError("R must be at least 1")
    t_start = time.perf_counter()
    directions = directions or DirectionSet(2)
    if model is None:
        box = Box(tuple(float(a[0]) for a in grid.axes), tuple(float(a[-1]) for a in grid.axes))
        model = LinearMissingX(spec.x_support, box)
    alphas = tuple(float(a) for a in alphas)
    test_points = {k: np.asarray(v, float) for k, v in (test_points or {}).items()}
    if reference is None:
        reference = reference_set(spec, model, grid, directions, eta_c, master_seed)
    if reference.members.size == 0:
        raise RuntimeError("reference set is empty; widen the grid or the tuning constant")
    t_ref = time.perf_counter() - t_start
    eta = eta_rule(spec.n, eta_c)
    eps = eta_rule(spec.n, epsilon_c)
    ref_pts = reference.member_points
    jobs = [
        (r, spec, model, grid, directions, eta, eps, B, alphas, master_seed, test_points, ref_pts)
        for r in range(R)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads, initializer=_single_blas_thread) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, R // (4 * threads))))
    else:
        results = [_replicate(j) for j in jobs]
    results.sort(key=lambda res: res[0])

    flags = np.stack([res[1] for res in results])
    rejections = {(lab, a): sum(res[5][(lab, a)] for res in results) for lab in test_points for a in alphas}
    naive = {(lab, a): sum(res[6][(lab, a)] for res in results) for lab in test_points for a in alphas}
    sizes = {lab: float(np.mean([res[7][lab] for res in results])) for lab in test_points}
    total = time.perf_counter() - t_start
    return McReport(
        R=R,
        n=spec.n,
        eta=eta,
        epsilon=eps,
        grid=grid,
        reference_flags=reference.flags,
        member_flags=flags,
        hausdorff=np.array([res[2] for res in results]),
        containment_steps=np.array([res[3] for res in results]),
        set_sizes=np.array([res[4] for res in results]),
        test_points=test_points,
        alphas=alphas,
        rejections=rejections,
        naive_rejections=naive,
        argmin_sizes=sizes,
        runtime={"reference_seconds": t_ref, "total_seconds": total, "per_replication_seconds": (total - t_ref) / R},
        config={"B": B, "R": R, "eta_c": eta_c, "epsilon_c": epsilon_c, "master_seed": master_seed,
                "dgp": asdict(spec), "directions": directions.describe(), "grid": grid.describe()},
    )


def write_study(report: McReport, outdir, config_hash: str | None = None) -> dict:
    """Write sets.csv, hausdorff.csv, rejections.csv and report.json; runtime goes to runtime.json."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    pts = report.grid.points
    d = pts.shape[1]
    paths = {}

    def open_csv(name):
        fh = open(out / name, "w", newline="")
        if config_hash:
            fh.write(f"# config_sha256={config_hash}\n")
        paths[name] = str(out / name)
        return fh, csv.writer(fh)

    fh, w = open_csv("sets.csv")
    with fh:
        w.writerow([f"theta_{k + 1}" for k in range(d)] + ["reference", "frequency"]
                   + [f"r{r}" for r in range(report.R)])
        freq = report.member_frequency
        for j, p in enumerate(pts):
            w.writerow([repr(float(v)) for v in p] + [int(report.reference_flags[j]), repr(float(freq[j]))]
                       + [int(f) for f in report.member_flags[:, j]])

    fh, w = open_csv("hausdorff.csv")
    with fh:
        w.writerow(["replication", "n", "hausdorff", "containment_steps", "set_size"])
        for r in range(report.R):
            w.writerow([r, report.n, repr(float(report.hausdorff[r])),
                        repr(float(report.containment_steps[r])), int(report.set_sizes[r])])

    fh, w = open_csv("rejections.csv")
    with fh:
        w.writerow(["label"] + [f"theta_{k + 1}" for k in range(d)]
                   + ["alpha", "rate", "naive_rate", "rejections", "R"])
        for lab, th in report.test_points.items():
            for a in report.alphas:
                w.writerow([lab] + [repr(float(v)) for v in th]
                           + [repr(a), repr(report.rejection_rate(lab, a)),
                              repr(report.rejection_rate(lab, a, naive=True)),
                              report.rejections[(lab, a)], report.R])

    summary = {"config_sha256": config_hash, **report.summary(), "config": report.config}
    with open(out / "report.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    paths["report.json"] = str(out / "report.json")
    with open(out / "runtime.json", "w") as fh:
        json.dump(report.runtime, fh, indent=2)
        fh.write("\n")
    return paths
