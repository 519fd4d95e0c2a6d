"""Surface recovery on the piecewise 1D function for R = 1, 2, 3."""

import argparse

import numpy as np

from mdct import simdata
from mdct.experiments import surface_mse_1d


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--R", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--J1", type=int, default=30)
    ap.add_argument("--n-iter", type=int, default=10000)
    ap.add_argument("--burn-in", type=int, default=5000)
    ap.add_argument("--thin", type=int, default=10)
    args = ap.parse_args()

    table = {R: [] for R in args.R}
    for seed in args.seeds:
        sim = simdata.gen_1d(n=args.n, seed=seed)
        for R in args.R:
            res = surface_mse_1d(sim, R, J1=args.J1, n_iter=args.n_iter, burn_in=args.burn_in,
                                 thin=args.thin, seed=seed)
            table[R].append(res["mse"])
            print(f"seed={seed} R={R} mse={res['mse']:.5f} eta={res['eta_counts'].tolist()} "
                  f"time={res['seconds']:.1f}s", flush=True)
    for R in args.R:
        print(f"R={R} mean mse={np.mean(table[R]):.5f}")


if __name__ == "__main__":
    main()
