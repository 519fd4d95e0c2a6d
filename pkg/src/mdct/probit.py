"""Binary spatial regression through probit latent-variable augmentation.

Latent ``z_i ~ N(x_i'gamma + (K beta)_i, 1)`` truncated to ``z > 0`` when
``y_i = 1`` and ``z <= 0`` otherwise. Given ``z`` the Gaussian sampler runs
unchanged with the noise variance pinned at 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DataError
from .sampler import ChainConfig, ChainSamples, Dataset, Hyperparams, ModelState, run_chain
from .kernel import SparseDesign

TAIL = 6.0


@dataclass
class BinaryDataset(Dataset):
    def __post_init__(self):
        super().__post_init__()
        if not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("binary responses must be 0 or 1")


def _open_uniform(rng, size):
    return (rng.integers(0, 2**53, size=size) + 0.5) / 2.0**53


def truncated_standard_normal(a, rng) -> np.ndarray:
    """Draw ``x ~ N(0, 1)`` conditioned on ``x >= a``, elementwise.

    Inverse CDF below ``a = 6``; exponential rejection in the far tail.
    """
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape)
    body = a <= TAIL
    if body.any():
        u = _open_uniform(rng, int(body.sum()))
        out[body] = -special.ndtri(u * special.ndtr(-a[body]))
    tail = np.flatnonzero(~body)
    while len(tail):
        at = a[tail]
        lam = 0.5 * (at + np.sqrt(at * at + 4.0))
        x = at + rng.exponential(1.0 / lam)
        ok = _open_uniform(rng, len(tail)) <= np.exp(-0.5 * (x - lam) ** 2)
        out[tail[ok]] = x[ok]
        tail = tail[~ok]
    return np.maximum(out, a)


def draw_latents(linpred, y, rng) -> np.ndarray:
    linpred = np.asarray(linpred, dtype=float)
    pos = np.asarray(y) == 1
    a = np.where(pos, -linpred, linpred)
    x = truncated_standard_normal(a, rng)
    z = linpred + np.where(pos, x, -x)
    return np.where(pos, np.maximum(z, np.finfo(float).tiny), np.minimum(z, 0.0))


def update_latents(data: Dataset, design: SparseDesign, state: ModelState, rng) -> np.ndarray:
    linpred = data.X @ state.gamma + design.dot(state.beta)
    return draw_latents(linpred, data.y, rng)


def run_probit_chain(data: Dataset, grid, hyper: Hyperparams, config: ChainConfig, **kw) -> ChainSamples:
    if not isinstance(data, BinaryDataset):
        data = BinaryDataset(data.y, data.X, data.locations)
    return run_chain(data, grid, hyper, config, family="probit", **kw)


def auc(scores, labels) -> float:
    """Area under the ROC curve in Mann-Whitney form; ties count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes among the labels")
    ranks = stats.rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))
