"""Out-of-sample AUC of the probit model on simulated binary data."""

import argparse

from mdct.experiments import probit_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--n", type=int, default=4500)
    ap.add_argument("--n-test", type=int, default=500)
    ap.add_argument("--R", type=int, default=3)
    ap.add_argument("--n-iter", type=int, default=3000)
    ap.add_argument("--burn-in", type=int, default=1000)
    ap.add_argument("--thin", type=int, default=2)
    args = ap.parse_args()

    for seed in args.seeds:
        res = probit_experiment(n=args.n, n_test=args.n_test, R=args.R, n_iter=args.n_iter,
                                burn_in=args.burn_in, thin=args.thin, seed=seed)
        print(f"seed={seed} AUC={res['auc']:.3f} base_rate={res['base_rate']:.2f} "
              f"time={res['seconds']:.0f}s", flush=True)


if __name__ == "__main__":
    main()
