"""Rejection rates of the restricted and the naive bootstrap along a ray through the identified set.

Points are theta_true + t * (0, 1) for several t, including the population
boundary. Population membership is computed by quadrature, not simulation.

    python3 scripts/boundary_size.py --R 200 --B 200
"""
import argparse

import numpy as np

from gmmbounds.model import LinearMissingX
from gmmbounds.inference import bootstrap_test, naive_bootstrap_test, resample_counts
from gmmbounds.simulate import DgpSpec, boundary_point, population_criterion, simulate_dataset
from gmmbounds.setestimate import eta_rule
from gmmbounds.support import DirectionSet


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--R", type=int, default=200)
    ap.add_argument("--B", type=int, default=200)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--offsets", type=float, nargs="+", default=[-0.02, 0.0, 0.02, 0.05])
    ap.add_argument("--seed", type=int, default=99)
    args = ap.parse_args()

    spec = DgpSpec(n=args.n)
    bp = boundary_point(spec)
    model = LinearMissingX()
    dirs = DirectionSet(2)
    eps = eta_rule(args.n)
    thetas = [bp + np.array([0.0, d]) for d in args.offsets]
    fs = np.zeros(len(thetas))
    nv = np.zeros(len(thetas))
    for r in range(args.R):
        ds = simulate_dataset(spec, np.random.default_rng([args.seed, r]))
        counts = resample_counts(ds.n, args.B, [args.seed, r])
        for k, th in enumerate(thetas):
            fs[k] += bootstrap_test(ds, model, th, dirs, args.alpha, args.B, eps, counts=counts).reject
            nv[k] += naive_bootstrap_test(ds, model, th, dirs, args.alpha, args.B, counts=counts).reject
    print(f"boundary point {np.round(bp, 5).tolist()}, alpha={args.alpha}, R={args.R}, B={args.B}")
    print(f"{'offset':>7} {'pop. Q':>9} {'restricted':>10} {'naive':>7}")
    for d, th, a, b in zip(args.offsets, thetas, fs / args.R, nv / args.R):
        print(f"{d:>7.3f} {population_criterion(spec, th)[0]:>9.5f} {a:>10.3f} {b:>7.3f}")


if __name__ == "__main__":
    main()
