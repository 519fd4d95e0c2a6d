"""Multiscale tree shrinkage prior: Gamma scales on the knot tree.

Every coefficient ``beta_j^r`` has prior variance ``alpha_j^r``, the product of
inverse Gamma scales along its ancestry::

    alpha_j^1 = 1/delta_1,   alpha_j^r = alpha_father(j)^(r-1) / delta_(j,r)
    delta_1 ~ Gamma(2, 1),   delta_(j,r) ~ Gamma(c, 1),  c > 2

Per-node arrays are flat and resolution-major, aligned with design columns.
Entries of ``delta`` at resolution 1 are unused placeholders fixed at 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import MultiresGrid, TreeIndex, subtree_size


@dataclass
class ShrinkageState:
    c: float
    delta1: float
    delta: np.ndarray
    alpha: np.ndarray

    def copy(self) -> "ShrinkageState":
        return ShrinkageState(self.c, self.delta1, self.delta.copy(), self.alpha.copy())


def check_c(c: float) -> None:
    if not c > 2:
        raise ConfigError(f"shrinkage shape c must exceed 2, got {c}")


def compute_alpha(delta1: float, delta: np.ndarray, grid: MultiresGrid) -> np.ndarray:
    """Variances from scratch by the path-product recursion."""
    off = grid.offsets
    alpha = np.empty(grid.n_basis)
    alpha[: off[1]] = 1.0 / delta1
    for r in range(2, grid.R + 1):
        parent = alpha[off[r - 2]:off[r - 1]]
        alpha[off[r - 1]:off[r]] = np.repeat(parent, grid.P) / delta[off[r - 1]:off[r]]
    return alpha


def initial_state(c: float, grid: MultiresGrid) -> ShrinkageState:
    """All scales at their prior means."""
    check_c(c)
    delta = np.full(grid.n_basis, float(c))
    delta[: grid.J1] = 1.0
    return ShrinkageState(c=float(c), delta1=2.0, delta=delta, alpha=compute_alpha(2.0, delta, grid))


def alpha_of(idx: TreeIndex, state: ShrinkageState, grid: MultiresGrid) -> float:
    """Prior variance of one node by walking its ancestry."""
    off = grid.offsets
    value = 1.0 / state.delta1
    j = idx.j - 1
    path = []
    for r in range(idx.r, 1, -1):
        path.append(state.delta[off[r - 1] + j])
        j //= grid.P
    for dlt in reversed(path):
        value = value / dlt
    return value


def draw_prior(c: float, grid: MultiresGrid, rng: np.random.Generator):
    """One joint prior draw of the scales and the coefficients."""
    check_c(c)
    delta1 = rng.gamma(2.0, 1.0)
    delta = np.ones(grid.n_basis)
    delta[grid.J1:] = rng.gamma(c, 1.0, size=grid.n_basis - grid.J1)
    alpha = compute_alpha(delta1, delta, grid)
    beta = rng.standard_normal(grid.n_basis) * np.sqrt(alpha)
    return ShrinkageState(float(c), float(delta1), delta, alpha), beta


def subtree_sums(values: np.ndarray, grid: MultiresGrid) -> np.ndarray:
    """For each node, the sum of ``values`` over its subtree (itself included)."""
    off = grid.offsets
    out = np.asarray(values, dtype=float).copy()
    for r in range(grid.R - 1, 0, -1):
        child = out[off[r]:off[r + 1]].reshape(-1, grid.P).sum(axis=1)
        out[off[r - 1]:off[r]] += child
    return out


def delta1_conditional(beta, state: ShrinkageState, grid: MultiresGrid) -> tuple[float, float]:
    """Shape and rate of ``delta_1 | rest``.

    ``alpha * delta_1`` is the variance path product with the global factor removed.
    """
    beta = np.asarray(beta, dtype=float)
    shape = 2.0 + grid.n_basis / 2.0
    rate = 1.0 + 0.5 * np.sum(beta * beta / (state.alpha * state.delta1))
    if not np.isfinite(rate):
        raise NumericalError(f"non-finite rate for delta_1: {rate}")
    return shape, float(rate)


def delta_conditional(idx: TreeIndex, beta, state: ShrinkageState, grid: MultiresGrid) -> tuple[float, float]:
    """Shape and rate of ``delta_(j,r) | rest`` for ``r >= 2``."""
    if idx.r < 2:
        raise ValueError("resolution-1 nodes share delta_1; use delta1_conditional")
    beta = np.asarray(beta, dtype=float)
    off = grid.offsets
    own = state.delta[off[idx.r - 1] + idx.j - 1]
    total = 0.0
    for level in range(grid.R - idx.r + 1):
        r = idx.r + level
        width = grid.P**level
        lo = off[r - 1] + (idx.j - 1) * width
        b = beta[lo:lo + width]
        total += np.sum(b * b / (state.alpha[lo:lo + width] * own))
    shape = state.c + subtree_size(idx.r, grid) / 2.0
    rate = 1.0 + 0.5 * total
    if not np.isfinite(rate):
        raise NumericalError(f"non-finite rate for delta at {tuple(idx)}")
    return shape, float(rate)


def _refresh_subtree(idx: TreeIndex, state: ShrinkageState, grid: MultiresGrid) -> None:
    """Recompute variances below ``idx`` with the same arithmetic as :func:`compute_alpha`."""
    off = grid.offsets
    P = grid.P
    for level in range(grid.R - idx.r + 1):
        r = idx.r + level
        width = P**level
        lo = (idx.j - 1) * width
        seg = slice(off[r - 1] + lo, off[r - 1] + lo + width)
        if level == 0:
            parent = state.alpha[off[r - 2] + lo // P:off[r - 2] + lo // P + 1]
        else:
            plo = off[r - 2] + lo // P
            parent = np.repeat(state.alpha[plo:plo + width // P], P)
        state.alpha[seg] = parent / state.delta[seg]


def update_delta1(beta, state: ShrinkageState, grid: MultiresGrid, rng: np.random.Generator) -> float:
    shape, rate = delta1_conditional(beta, state, grid)
    state.delta1 = float(rng.gamma(shape, 1.0 / rate))
    state.alpha = compute_alpha(state.delta1, state.delta, grid)
    return state.delta1


def update_delta_jr(idx: TreeIndex, beta, state: ShrinkageState, grid: MultiresGrid, rng: np.random.Generator) -> float:
    shape, rate = delta_conditional(idx, beta, state, grid)
    value = float(rng.gamma(shape, 1.0 / rate))
    state.delta[grid.offsets[idx.r - 1] + idx.j - 1] = value
    _refresh_subtree(idx, state, grid)
    return value


def resolution_conditional(r: int, beta, state: ShrinkageState, grid: MultiresGrid):
    """Shape and per-node rates of every ``delta_(j,r)`` at resolution ``r >= 2``."""
    if r < 2:
        raise ValueError("resolution must be >= 2")
    beta = np.asarray(beta, dtype=float)
    off = grid.offsets
    ratio = subtree_sums(beta * beta / state.alpha, grid)[off[r - 1]:off[r]]
    rate = 1.0 + 0.5 * ratio / state.delta[off[r - 1]:off[r]]
    if not np.all(np.isfinite(rate)):
        raise NumericalError(f"non-finite delta rate at resolution {r}")
    return state.c + subtree_size(r, grid) / 2.0, rate


def update_resolution(r: int, beta, state: ShrinkageState, grid: MultiresGrid, rng: np.random.Generator) -> None:
    """Draw every ``delta_(j,r)`` at one resolution.

    Nodes at one resolution have disjoint subtrees, so their conditionals
    do not involve each other and one vectorized draw is exact.
    """
    shape, rate = resolution_conditional(r, beta, state, grid)
    off = grid.offsets
    state.delta[off[r - 1]:off[r]] = rng.gamma(shape, 1.0 / rate)
    state.alpha = compute_alpha(state.delta1, state.delta, grid)


def update_all(beta, state: ShrinkageState, grid: MultiresGrid, rng: np.random.Generator) -> None:
    """Resolutions 2..R in turn, then the global scale."""
    for r in range(2, grid.R + 1):
        update_resolution(r, beta, state, grid, rng)
    update_delta1(beta, state, grid, rng)
