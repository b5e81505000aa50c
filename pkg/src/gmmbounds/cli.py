"""Command-line front end.

Settings come from an optional JSON config file, overridden by flags.
Every output file starts with a line recording the SHA-256 of the resolved
configuration (thread count and output directory excluded, since they do
not change results).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .inference import bootstrap_test, confidence_regions
from .io import DataError, file_sha256, is_panel_file, load_dataset, load_panel
from .model import MODELS, Box, get_model
from .multiperiod import PanelMean
from .oracle import run_oracle_suite
from .setestimate import ThetaGrid, estimate_set, eta_rule
from .simulate import DgpSpec, boundary_point, run_study, simulate_dataset, write_study
from .support import BALL_KINDS, DirectionSet

COMMANDS = ("estimate-set", "test", "confidence-region", "simulate", "verify")
OUTPUT_ENV = "GMMBOUNDS_OUTPUT_DIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "estimate-set"
    model: str = "linear_missing_x"
    model_params: dict = field(default_factory=dict)
    data: str | None = None
    dgp: dict | None = None
    grid_lower: list | None = None
    grid_upper: list | None = None
    grid_resolution: int = 101
    ball_kind: str = "euclidean"
    m: int = 720
    eta_c: float = 0.1
    epsilon_c: float = 0.1
    B: int = 1000
    R: int = 200
    alpha: float = 0.05
    alphas: list = field(default_factory=lambda: [0.05])
    theta0: list | None = None
    test_points: dict | None = None
    seed: int = 0
    instances: int = 50
    scripting: bool = False
    output_dir: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.model not in MODELS and self.model != "panel_mean":
            raise UsageError(f"unknown model {self.model!r}; choose from {sorted([*MODELS, 'panel_mean'])}")
        if self.ball_kind not in BALL_KINDS:
            raise UsageError(f"unknown ball kind {self.ball_kind!r}")
        for name in ("eta_c", "epsilon_c", "B", "R", "m", "grid_resolution", "threads", "instances"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        for a in [self.alpha, *self.alphas]:
            if not 0 < a < 1:
                raise UsageError("alpha values must lie in (0, 1)")
        if self.command in ("estimate-set", "test", "confidence-region"):
            if (self.data is None) == (self.dgp is None):
                raise UsageError(f"{self.command} needs exactly one of --data or a dgp section")
        if self.command == "test" and self.theta0 is None:
            raise UsageError("test needs --theta0")

    def hashed(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        d.pop("output_dir")
        if self.data is not None and Path(self.data).exists():
            d["data_sha256"] = file_sha256(self.data)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.hashed(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError("model parameters look like key=value")
    key, val = text.split("=", 1)
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmmbounds", description="Sharp identified sets and bootstrap tests for GMM models with missing data.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--model")
    p.add_argument("--model-param", action="append", type=_param, default=None, metavar="KEY=VALUE",
                   help="model parameter, JSON-decoded (e.g. x_support=[0,1])")
    p.add_argument("--data", help="CSV data file")
    p.add_argument("--n", type=int, help="simulated sample size")
    p.add_argument("--p-select", type=float)
    p.add_argument("--theta-true", type=_floats)
    p.add_argument("--grid-lower", type=_floats)
    p.add_argument("--grid-upper", type=_floats)
    p.add_argument("--grid-resolution", type=int)
    p.add_argument("--ball", dest="ball_kind")
    p.add_argument("--m", type=int, help="number of grid directions")
    p.add_argument("--eta-c", type=float)
    p.add_argument("--epsilon-c", type=float)
    p.add_argument("--B", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--theta0", type=_floats)
    p.add_argument("--seed", type=int)
    p.add_argument("--instances", type=int, help="random instances per check for verify")
    p.add_argument("--scripting", action="store_true", default=None, help="test: exit 1 on rejection")
    p.add_argument("--output-dir")
    p.add_argument("--threads", type=int)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise UsageError(f"unknown config keys {unknown}")
    raw["command"] = args.command
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None and f.name not in ("command", "model_params"):
            raw[f.name] = val
    if args.model_param:
        raw["model_params"] = {**raw.get("model_params", {}), **dict(args.model_param)}
    dgp_flags = {"n": args.n, "p_select": args.p_select, "theta_true": args.theta_true}
    if any(v is not None for v in dgp_flags.values()) or (args.command == "simulate" and raw.get("dgp") is None):
        raw["dgp"] = {**(raw.get("dgp") or {}), **{k: v for k, v in dgp_flags.items() if v is not None}}
    if raw.get("data") is not None and args.data is not None:
        raw["dgp"] = None
    cfg = RunConfig(**raw)
    if cfg.output_dir is None:
        cfg.output_dir = os.environ.get(OUTPUT_ENV, "gmmbounds-out")
    cfg.validate()
    return cfg


def _model(cfg: RunConfig):
    if cfg.model == "panel_mean":
        return PanelMean(**cfg.model_params)
    try:
        return get_model(cfg.model, **cfg.model_params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for model {cfg.model!r}: {exc}") from None


def _dgp(cfg: RunConfig) -> DgpSpec:
    d = dict(cfg.dgp or {})
    if "theta_true" in d:
        d["theta_true"] = tuple(d["theta_true"])
    d.setdefault("seed", cfg.seed)
    try:
        return DgpSpec(**d)
    except TypeError as exc:
        raise UsageError(f"bad dgp section: {exc}") from None


def _dataset(cfg: RunConfig, model):
    if cfg.data is not None:
        if is_panel_file(cfg.data):
            ds = load_panel(cfg.data)
            print(f"loaded panel {cfg.data}: n={ds.n}, p3_hat={ds.p3:.6g}", file=sys.stderr)
            return ds
        ds = load_dataset(cfg.data, model.z1_columns or None, model.z2_columns or None)
        print(f"loaded {cfg.data}: n={ds.n}, p_hat={ds.p_hat:.6g}", file=sys.stderr)
        return ds
    if cfg.model != "linear_missing_x":
        raise UsageError("simulated data follow the linear_missing_x design; pass --data for other models")
    return simulate_dataset(_dgp(cfg))


def _grid(cfg: RunConfig, model) -> ThetaGrid:
    if hasattr(model, "theta_axes"):
        return ThetaGrid(tuple(model.theta_axes))
    box = model.theta_space
    lo = cfg.grid_lower if cfg.grid_lower is not None else list(box.lower)
    hi = cfg.grid_upper if cfg.grid_upper is not None else list(box.upper)
    if len(lo) != model.d_theta or len(hi) != model.d_theta:
        raise UsageError(f"grid bounds need {model.d_theta} coordinates")
    return ThetaGrid.from_box(Box(tuple(lo), tuple(hi)), cfg.grid_resolution)


def _directions(cfg: RunConfig, model) -> DirectionSet:
    return DirectionSet(model.d_phi, cfg.m, cfg.ball_kind)


def _write_json(path: Path, payload: dict, chash: str) -> None:
    with open(path, "w") as fh:
        json.dump({"config_sha256": chash, **payload}, fh, indent=2)
        fh.write("\n")


def _fmt_level(alpha: float) -> str:
    return f"{1 - alpha:.4f}".rstrip("0").rstrip(".")


def cmd_estimate_set(cfg, out, chash):
    model = _model(cfg)
    ds = _dataset(cfg, model)
    grid = _grid(cfg, model)
    eta = eta_rule(ds.n, cfg.eta_c)
    est = estimate_set(ds, model, grid, _directions(cfg, model), eta, threads=cfg.threads)
    est.to_csv(out / "set.csv", f"config_sha256={chash}")
    pts = est.member_points
    summary = {
        "n": ds.n,
        "eta": eta,
        "grid": grid.describe(),
        "members": int(est.members.size),
        "member_lower": pts.min(axis=0).tolist() if pts.size else None,
        "member_upper": pts.max(axis=0).tolist() if pts.size else None,
    }
    _write_json(out / "summary.json", summary, chash)
    print(json.dumps(summary))
    return 0


def cmd_test(cfg, out, chash):
    model = _model(cfg)
    ds = _dataset(cfg, model)
    if len(cfg.theta0) != model.d_theta:
        raise UsageError(f"--theta0 needs {model.d_theta} coordinates")
    eps = eta_rule(ds.n, cfg.epsilon_c)
    res = bootstrap_test(ds, model, cfg.theta0, _directions(cfg, model), cfg.alpha, cfg.B, eps, cfg.seed)
    payload = res.summary()
    _write_json(out / "test.json", payload, chash)
    print(json.dumps(payload))
    return 1 if (cfg.scripting and res.reject) else 0


def cmd_confidence_region(cfg, out, chash):
    model = _model(cfg)
    ds = _dataset(cfg, model)
    grid = _grid(cfg, model)
    eps = eta_rule(ds.n, cfg.epsilon_c)
    regions = confidence_regions(ds, model, grid, _directions(cfg, model), cfg.alphas, cfg.B, eps, cfg.seed,
                                 threads=cfg.threads)
    pts = grid.points
    written = []
    for cr in regions:
        path = out / f"cr_{_fmt_level(cr.alpha)}.csv"
        accepted = np.zeros(len(grid), dtype=bool)
        accepted[cr.accepted] = True
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_sha256={chash}\n")
            fh.write(",".join([f"theta_{k + 1}" for k in range(pts.shape[1])] + ["t_stat", "critical_value", "accepted"]) + "\n")
            for p, t, c, a in zip(pts, cr.t_stats, cr.critical_values, accepted):
                fh.write(",".join([repr(float(v)) for v in p] + [repr(float(t)), repr(float(c)), str(int(a))]) + "\n")
        written.append({"level": round(1 - cr.alpha, 10), "file": path.name, "accepted": int(cr.accepted.size)})
    print(json.dumps(written))
    return 0


def cmd_simulate(cfg, out, chash):
    if cfg.model != "linear_missing_x":
        raise UsageError("simulate runs the linear_missing_x design only")
    model = _model(cfg)
    spec = _dgp(cfg)
    grid = _grid(cfg, model)
    if cfg.test_points is not None:
        tps = {k: np.asarray(v, float) for k, v in cfg.test_points.items()}
    else:
        tps = {"interior": np.array(spec.theta_true), "boundary": boundary_point(spec)}
    rep = run_study(spec, grid, _directions(cfg, model), cfg.eta_c, cfg.epsilon_c, cfg.B, cfg.R,
                    cfg.alphas, cfg.seed, tps, cfg.threads, model)
    write_study(rep, out, chash)
    print(json.dumps(rep.summary()))
    return 0


def cmd_verify(cfg, out, chash):
    checks = run_oracle_suite(cfg.seed, cfg.instances)
    rows = [{"check": c.name, "instances": c.instances, "max_error": float(c.max_error),
             "tolerance": c.tolerance, "ok": c.ok} for c in checks]
    _write_json(out / "verify.json", {"checks": rows}, chash)
    for r in rows:
        print(f"{'ok  ' if r['ok'] else 'FAIL'} {r['check']}: max error {r['max_error']:.3g} over {r['instances']}")
    return 0 if all(c.ok for c in checks) else 1


HANDLERS = {
    "estimate-set": cmd_estimate_set,
    "test": cmd_test,
    "confidence-region": cmd_confidence_region,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = cfg.config_hash()
        with threadpool_limits(limits=cfg.threads):
            return HANDLERS[cfg.command](cfg, out, chash)
    except (UsageError, DataError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gmmbounds: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
