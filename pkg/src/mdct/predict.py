"""Composition-sampling prediction, residual surfaces and evaluation metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import special

from .grid import MultiresGrid
from .kernel import build_design
from .sampler import ChainSamples


@dataclass
class PredictionDraws:
    """Predictive draws at ``n0`` points, one column per stored chain draw."""

    y: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    family: str = "gaussian"

    @property
    def n_points(self) -> int:
        return self.y.shape[0]

    @property
    def y_mean(self):
        return self.y.mean(axis=1)

    @property
    def y_median(self):
        return np.median(self.y, axis=1)

    @property
    def y_interval(self):
        return np.quantile(self.y, [0.025, 0.975], axis=1)

    @property
    def w_mean(self):
        return self.w.mean(axis=1)

    @property
    def w_median(self):
        return np.median(self.w, axis=1)

    @property
    def w_interval(self):
        return np.quantile(self.w, [0.025, 0.975], axis=1)

    @property
    def p_mean(self):
        """Posterior mean success probability (probit family)."""
        return special.ndtr(self.mu).mean(axis=1)

    def summary(self) -> dict:
        ylo, yhi = self.y_interval
        wlo, whi = self.w_interval
        out = {
            "y_mean": self.y_mean, "y_median": self.y_median, "y_lo95": ylo, "y_hi95": yhi,
            "w_mean": self.w_mean, "w_lo95": wlo, "w_hi95": whi,
        }
        if self.family == "probit":
            out["p_mean"] = self.p_mean
        return out


def residual_surface(points, chain: ChainSamples, grid: MultiresGrid) -> np.ndarray:
    """``w(s0)`` for every stored draw, shape ``(n0, L)``; no noise added.

    Each draw uses the bandwidths of the eta stored with it.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.d)
    W = np.zeros((len(pts), len(chain)))
    for eta in np.unique(chain.eta):
        sel = chain.eta == eta
        K = build_design(pts, grid, float(eta)).K
        W[:, sel] = K @ chain.beta[sel].T
    return W


def predict(points, X0, chain: ChainSamples, grid: MultiresGrid, rng) -> PredictionDraws:
    """Posterior predictive draws of ``y(s0)`` at each point.

    For draw ``l``: ``mu = x0'gamma_l + w_l(s0)``, then ``y ~ N(mu, sigma2_l)``.
    Probit chains report the latent scale; see :attr:`PredictionDraws.p_mean`.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.d)
    X0 = np.asarray(X0, dtype=float).reshape(len(pts), -1)
    W = residual_surface(pts, chain, grid)
    mu = X0 @ chain.gamma.T + W
    y = mu + rng.standard_normal(mu.shape) * np.sqrt(chain.sigma2)[None, :]
    return PredictionDraws(y=y, w=W, mu=mu, family=chain.family)


def predict_at(s0, x0, chain: ChainSamples, grid: MultiresGrid, rng) -> PredictionDraws:
    return predict(np.atleast_1d(np.asarray(s0, dtype=float))[None, :], np.atleast_2d(x0), chain, grid, rng)


def mse(estimate, truth) -> float:
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    return float(np.mean((estimate - truth) ** 2))


def centered_mse(estimate, truth) -> float:
    """MSE after removing each vector's mean.

    The intercept and the constant part of the surface are only weakly
    separated by the prior, so surfaces are compared up to a level shift.
    """
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    return mse(estimate - estimate.mean(), truth - truth.mean())


def predictive_metrics(draws: PredictionDraws, truth) -> dict:
    """MSPE of the predictive mean, 95% interval coverage and mean length."""
    truth = np.asarray(truth, dtype=float)
    lo, hi = draws.y_interval
    return {
        "mspe": mse(draws.y_mean, truth),
        "coverage95": float(np.mean((truth >= lo) & (truth <= hi))),
        "mean_length95": float(np.mean(hi - lo)),
    }


def write_predictions(path, points, draws: PredictionDraws) -> None:
    pts = np.asarray(points, dtype=float)
    pts = pts[:, None] if pts.ndim == 1 else pts
    summ = draws.summary()
    coord = [f"s{k + 1}" for k in range(pts.shape[1])]
    names = ["y_mean", "y_median", "y_lo95", "y_hi95", "w_mean", "w_lo95", "w_hi95"]
    if "p_mean" in summ:
        names.append("p_mean")
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(coord + names)
        cols = [pts[:, k] for k in range(pts.shape[1])] + [summ[k] for k in names]
        for row in zip(*cols):
            out.writerow([repr(float(v)) for v in row])
