"""Empirical level of each calibration method under P1 = P2.

    python scripts/level_check.py --kernel gaussian --n 400 --replications 500
"""

import argparse
import math

import numpy as np

from kfda import CalibrationMethod, KernelSpec, build_bundle, calibrate
from kfda.power import gaussian_null, uniform_null
from kfda.statistics import decaying_gamma, kfda_from_bundle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kernel", choices=["gaussian", "spline"], default="gaussian")
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--replications", type=int, default=500)
    ap.add_argument("--methods", default="mixture,normal,permutation")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = KernelSpec.gaussian(1.0) if args.kernel == "gaussian" else KernelSpec.spline(2)
    gen = gaussian_null if args.kernel == "gaussian" else uniform_null
    methods = [CalibrationMethod(m) for m in args.methods.split(",")]
    n1 = args.n // 2
    hits = {m: 0 for m in methods}
    for r in range(args.replications):
        sample = gen(n1, args.n - n1, np.random.default_rng([args.seed, r]))
        bundle = build_bundle(sample, spec)
        for m in methods:
            gamma = decaying_gamma(args.n) if m is CalibrationMethod.NORMAL else args.gamma
            value = kfda_from_bundle(bundle, gamma)
            reps = 20_000 if m is CalibrationMethod.MIXTURE else 200
            hits[m] += calibrate(bundle, value, gamma, m, args.alpha, reps, seed=r).rejects()
    for m in methods:
        level = hits[m] / args.replications
        se = math.sqrt(level * (1 - level) / args.replications)
        print(f"{m.value:16s} level {level:.3f} (se {se:.3f})")


if __name__ == "__main__":
    main()
