"""Monte Carlo study of the regression design at several sample sizes.

Writes one output directory per n (sets.csv, hausdorff.csv, rejections.csv,
report.json) and prints a summary table.

    python3 scripts/run_mc.py --n 250 1000 --R 200 --B 200 --out mc-out
"""
import argparse
import json
from pathlib import Path

from gmmbounds.model import Box
from gmmbounds.setestimate import ThetaGrid
from gmmbounds.simulate import DgpSpec, boundary_point, run_study, write_study
from gmmbounds.support import DirectionSet


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[250, 1000])
    ap.add_argument("--R", type=int, default=200)
    ap.add_argument("--B", type=int, default=200)
    ap.add_argument("--p-select", type=float, default=0.9)
    ap.add_argument("--eta-c", type=float, default=0.1)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.05, 0.10])
    ap.add_argument("--resolution", type=int, default=101)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="mc-out")
    args = ap.parse_args()

    grid = ThetaGrid.from_box(Box((0.0, 0.0), (1.0, 2.0)), args.resolution)
    base = DgpSpec(p_select=args.p_select)
    points = {"interior": base.theta_true, "boundary": boundary_point(base)}
    print(f"{'n':>6} {'median d_H':>11} {'contain':>8} {'mean |set|':>10} {'rej int':>8} {'rej bdry':>9} {'naive bdry':>10}")
    for n in args.n:
        rep = run_study(base.replace(n=n), grid, DirectionSet(2), args.eta_c, args.eta_c, args.B, args.R,
                        args.alphas, args.seed, points, args.threads)
        write_study(rep, Path(args.out) / f"n{n}")
        s = rep.summary()
        a = args.alphas[0]
        print(f"{n:>6} {s['median_hausdorff']:>11.4f} {s['containment_rate']:>8.3f} {s['mean_set_size']:>10.1f} "
              f"{rep.rejection_rate('interior', a):>8.3f} {rep.rejection_rate('boundary', a):>9.3f} "
              f"{rep.rejection_rate('boundary', a, naive=True):>10.3f}")
        (Path(args.out) / f"n{n}" / "args.json").write_text(json.dumps(vars(args), indent=2) + "\n")


if __name__ == "__main__":
    main()
