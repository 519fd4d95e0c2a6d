"""Desk-scale versions of the simulation studies, shared by scripts/ and tests."""

from __future__ import annotations

import time

import numpy as np

from . import simdata
from .grid import DomainBox, build_grid
from .predict import centered_mse, predict, predictive_metrics, residual_surface
from .probit import auc, run_probit_chain
from .sampler import ChainConfig, Dataset, GibbsSampler, Hyperparams, run_chain

UNIT_SQUARE = DomainBox((0.0, 0.0), (1.0, 1.0))
INTERVAL_1D = DomainBox((0.0,), (10.0,))


def surface_mse_1d(sim: simdata.SimData, R: int, *, J1: int = 30, n_iter: int = 10000,
                   burn_in: int = 5000, thin: int = 10, seed: int = 0,
                   hyper: Hyperparams = Hyperparams()) -> dict:
    """Fit the 1D model and score the posterior-median surface at the data."""
    grid = build_grid(INTERVAL_1D, R, J1)
    t0 = time.perf_counter()
    chain = run_chain(sim.data, grid, hyper,
                      ChainConfig(n_iter, burn_in, thin, seed=seed, mode="sequential"))
    W = residual_surface(sim.data.locations, chain, grid)
    return {
        "R": R,
        "mse": centered_mse(np.median(W, axis=1), sim.w0),
        "seconds": time.perf_counter() - t0,
        "eta_counts": np.bincount(chain.eta, minlength=hyper.h_eta + 1)[1:],
    }


def one_d_recovery(seeds=(0, 1, 2), Rs=(1, 2, 3), n: int = 5000, **kw) -> dict:
    """Surface MSE for each seed and resolution count; returns ``{R: [mse per seed]}``."""
    out = {R: [] for R in Rs}
    for seed in seeds:
        sim = simdata.gen_1d(n=n, seed=seed)
        for R in Rs:
            out[R].append(surface_mse_1d(sim, R, seed=seed, **kw)["mse"])
    return out


def two_d_prediction(Rs=(1, 2, 3), *, n: int = 10500, n_test: int = 500, J1=(10, 10),
                     n_iter: int = 3000, burn_in: int = 1000, thin: int = 2, seed: int = 0,
                     params: simdata.MaternParams = simdata.MaternParams(),
                     hyper: Hyperparams = Hyperparams()) -> dict:
    """Held-out predictive metrics on a Matern field for each resolution count."""
    sim = simdata.gen_2d(n=n, params=params, seed=seed, n_test=n_test)
    rng = np.random.default_rng([seed, 99])
    out = {}
    for R in Rs:
        grid = build_grid(UNIT_SQUARE, R, J1)
        t0 = time.perf_counter()
        chain = run_chain(sim.data, grid, hyper,
                          ChainConfig(n_iter, burn_in, thin, seed=seed, mode="sequential"))
        draws = predict(sim.test.locations, sim.test.X, chain, grid, rng)
        res = predictive_metrics(draws, sim.test.y)
        res["surface_mse"] = centered_mse(draws.w_median, sim.test_w0)
        res["n_basis"] = grid.n_basis
        res["seconds"] = time.perf_counter() - t0
        res["eta_counts"] = np.bincount(chain.eta, minlength=hyper.h_eta + 1)[1:]
        out[R] = res
    return out


def probit_experiment(*, n: int = 4500, n_test: int = 500, R: int = 3, J1=(10, 10),
                      n_iter: int = 3000, burn_in: int = 1000, thin: int = 2, seed: int = 0,
                      params: simdata.MaternParams = simdata.MaternParams(),
                      gamma=(0.0, 0.5), hyper: Hyperparams = Hyperparams()) -> dict:
    sim = simdata.gen_binary(n=n, params=params, gamma=gamma, seed=seed, n_test=n_test)
    grid = build_grid(UNIT_SQUARE, R, J1)
    t0 = time.perf_counter()
    chain = run_probit_chain(sim.data, grid, hyper,
                             ChainConfig(n_iter, burn_in, thin, seed=seed, mode="sequential"))
    draws = predict(sim.test.locations, sim.test.X, chain, grid, np.random.default_rng([seed, 99]))
    return {
        "auc": auc(draws.p_mean, sim.test.y),
        "seconds": time.perf_counter() - t0,
        "base_rate": float(sim.data.y.mean()),
    }


def bench_dataset(n: int, seed: int = 0) -> Dataset:
    """Cheap smooth 2D data for timing; no dense covariance involved."""
    rng = np.random.default_rng(seed)
    S = rng.uniform(0.0, 1.0, (n, 2))
    X = np.column_stack([np.ones(n), rng.standard_normal(n)])
    w = np.sin(6 * S[:, 0]) * np.cos(4 * S[:, 1]) + 0.5 * np.sin(15 * S[:, 0] * S[:, 1])
    y = X @ [1.0, 1.0] + w + 0.2 * rng.standard_normal(n)
    return Dataset(y, X, S)


def time_iterations(data: Dataset, *, R: int = 3, J1=(10, 10), mode: str = "sequential",
                    workers: int = 1, warmup: int = 3, iters: int = 10, seed: int = 0,
                    hyper: Hyperparams = Hyperparams()) -> float:
    """Median wall time of one Gibbs iteration, excluding design construction."""
    grid = build_grid(UNIT_SQUARE, R, J1)
    with GibbsSampler(data, grid, hyper, mode=mode, workers=workers) as sampler:
        state = sampler.initial_state(np.random.default_rng(seed))
        for t in range(warmup):
            sampler.step(state, t, seed)
        times = []
        for t in range(warmup, warmup + iters):
            t0 = time.perf_counter()
            sampler.step(state, t, seed)
            times.append(time.perf_counter() - t0)
    return float(np.median(times))


def fit_through_origin(ns, times) -> tuple[float, np.ndarray]:
    """Least-squares slope of ``time = a * n`` and each point's relative residual."""
    ns = np.asarray(ns, dtype=float)
    times = np.asarray(times, dtype=float)
    slope = float(ns @ times / (ns @ ns))
    return slope, (times - slope * ns) / (slope * ns)
