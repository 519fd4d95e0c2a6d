"""Held-out prediction on a simulated Matern field for R = 1, 2, 3."""

import argparse

from mdct.experiments import two_d_prediction
from mdct.simdata import MaternParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--R", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--n", type=int, default=10500)
    ap.add_argument("--n-test", type=int, default=500)
    ap.add_argument("--theta1", type=float, default=1.5)
    ap.add_argument("--theta2", type=float, default=3.0)
    ap.add_argument("--nu", type=float, default=0.5)
    ap.add_argument("--n-iter", type=int, default=3000)
    ap.add_argument("--burn-in", type=int, default=1000)
    ap.add_argument("--thin", type=int, default=2)
    args = ap.parse_args()

    res = two_d_prediction(Rs=args.R, n=args.n, n_test=args.n_test, n_iter=args.n_iter,
                           burn_in=args.burn_in, thin=args.thin, seed=args.seed,
                           params=MaternParams(args.theta1, args.theta2, args.nu))
    print(f"{'R':>2} {'basis':>6} {'MSPE':>7} {'cover95':>8} {'len95':>7} {'surfMSE':>8} {'sec':>6}")
    for R, r in res.items():
        print(f"{R:>2} {r['n_basis']:>6} {r['mspe']:>7.4f} {r['coverage95']:>8.3f} "
              f"{r['mean_length95']:>7.3f} {r['surface_mse']:>8.4f} {r['seconds']:>6.0f}")


if __name__ == "__main__":
    main()
