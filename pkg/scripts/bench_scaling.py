"""Per-iteration wall time against n at a fixed grid, with a through-origin fit."""

import argparse
import os

from mdct.experiments import bench_dataset, fit_through_origin, time_iterations


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[10000, 20000, 40000])
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--iters", type=int, default=15)
    args = ap.parse_args()

    print(f"cpus available: {len(os.sched_getaffinity(0))}")
    seq = []
    for n in args.n:
        data = bench_dataset(n)
        t_seq = time_iterations(data, mode="sequential", iters=args.iters)
        t_par = time_iterations(data, mode="chromatic", workers=args.workers, iters=args.iters)
        seq.append(t_seq)
        print(f"n={n:>7d} sequential={t_seq:.5f}s chromatic[{args.workers}]={t_par:.5f}s "
              f"speedup={t_seq / t_par:.2f}x", flush=True)
    slope, rel = fit_through_origin(args.n, seq)
    print(f"slope={slope:.3e} s/obs, relative residuals: " + ", ".join(f"{r:+.3f}" for r in rel))


if __name__ == "__main__":
    main()
