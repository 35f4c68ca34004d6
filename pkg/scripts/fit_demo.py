"""Fit the conditional tail model to simulated data and estimate a risk-region probability."""

import argparse

import numpy as np

from cevm import htfit
from cevm.montecarlo import sample_pairs
from cevm.registry import example_registry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--k", type=float, default=0.0)
    ap.add_argument("--x-max", type=float, default=0.0)
    ap.add_argument("--y-min", type=float, default=None, help="default: 0.999 quantile of Y")
    args = ap.parse_args()

    model = example_registry("tail_kernel", rho=args.rho, k=args.k).model_spec()
    X, Y = sample_pairs(model, args.n, seed=args.seed)
    fr = htfit.fit(X, Y)
    nz = fr.normalization
    print(f"threshold u={fr.u:.3f}, exceedances m={fr.m}")
    print(f"gamma_hat={fr.gamma_hat:.3f}  rho_hat={nz.rho:.3f}  family={nz.family}")
    q = np.quantile(fr.residuals, [0.1, 0.5, 0.9])
    print(f"residual quantiles (10/50/90%): {q.round(3)}  (true G = N(0,1): [-1.282 0 1.282])")

    y_min = args.y_min if args.y_min is not None else float(np.quantile(Y, 0.999))
    risk = htfit.risk_region_probability(fr, args.x_max, y_min, seed=args.seed)
    truth_X, truth_Y = sample_pairs(model, 20_000_000, seed=args.seed + 1)
    truth = float(np.mean((truth_X <= args.x_max) & (truth_Y > y_min)))
    print(f"P[X <= {args.x_max:g}, Y > {y_min:.3f}] = {risk.probability:.3e} "
          f"[{risk.lower:.3e}, {risk.upper:.3e}]  (Monte Carlo truth {truth:.3e})")


if __name__ == "__main__":
    main()
