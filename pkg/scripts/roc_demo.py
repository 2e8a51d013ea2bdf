"""ROC table on the synthetic Gaussian-mixture scenario.

    python scripts/roc_demo.py --shift 0.5 --n 100 --replications 200
"""

import argparse

from kfda import KernelSpec, roc_curve
from kfda.power import gaussian_mixture_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shift", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=100, help="per-sample size")
    ap.add_argument("--gamma", type=float, default=0.1)
    ap.add_argument("--replications", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9]
    curve = roc_curve(
        gaussian_mixture_scenario(args.shift), KernelSpec.gaussian(), args.gamma, args.n, args.n,
        grid, args.replications, args.seed,
    )
    print("alpha\tfpr\ttpr")
    for a, f, t in curve:
        print(f"{a:g}\t{f:.3f}\t{t:.3f}")


if __name__ == "__main__":
    main()
