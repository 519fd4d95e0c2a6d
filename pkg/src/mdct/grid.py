"""Recursive partition of a rectangular domain and knot tree navigation.

Knots at resolution 1 form an ``h_x x h_y`` lattice (or ``J(1)`` intervals in
1D), numbered row-major with the first axis varying fastest. Each cell is
split into ``P = 2**d`` congruent children numbered the same way, so the
children of node ``k`` (1-based) at resolution ``r`` are ``(k-1)P+1 .. kP`` at
resolution ``r+1``.

Public tree indices (:class:`TreeIndex`) are 1-based. Array-facing helpers
(``locate_many``, column offsets) are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, OutOfDomainError


class TreeIndex(NamedTuple):
    j: int  # within-resolution index, 1-based
    r: int  # resolution, 1..R


@dataclass(frozen=True)
class DomainBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ConfigError(f"box must be 1D or 2D, got lower={lo}, upper={hi}")
        if not all(np.isfinite(lo + hi)):
            raise ConfigError("box bounds must be finite")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError(f"box needs lower < upper on every axis, got {lo}, {hi}")

    @property
    def d(self) -> int:
        return len(self.lower)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "DomainBox":
        """Build from ``lo1, hi1[, lo2, hi2]``."""
        v = [float(x) for x in values]
        if len(v) not in (2, 4):
            raise ConfigError(f"box needs 2 or 4 numbers, got {len(v)}")
        return cls(tuple(v[0::2]), tuple(v[1::2]))

    def flat(self) -> tuple[float, ...]:
        return tuple(x for pair in zip(self.lower, self.upper) for x in pair)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        lo, hi = np.array(self.lower), np.array(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True, eq=False)
class MultiresGrid:
    """Partition tree with knots at cell centers.

    Attributes
    ----------
    box, R, J1_dims
        Construction inputs.
    P
        Children per node, ``2**d``.
    knots
        ``knots[r-1]`` is a ``(J(r), d)`` array of knot coordinates in tree order.
    spacing
        ``(R, d)`` inter-knot distance per resolution and axis.
    lattice
        ``lattice[r-1]`` is the ``(J(r), d)`` integer lattice position of each knot.
    tree_of_lattice
        ``tree_of_lattice[r-1]`` maps a lattice position (array indexed
        ``[i_x]`` or ``[i_x, i_y]``) to the 0-based tree index.
    """

    box: DomainBox
    R: int
    J1_dims: tuple[int, ...]
    P: int
    knots: list[np.ndarray] = field(repr=False)
    spacing: np.ndarray = field(repr=False)
    lattice: list[np.ndarray] = field(repr=False)
    tree_of_lattice: list[np.ndarray] = field(repr=False)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def J(self) -> tuple[int, ...]:
        return tuple(len(k) for k in self.knots)

    @property
    def J1(self) -> int:
        return self.J[0]

    @property
    def n_basis(self) -> int:
        return sum(self.J)

    @property
    def offsets(self) -> np.ndarray:
        """Column offset of each resolution in resolution-major order (length R+1)."""
        return np.concatenate([[0], np.cumsum(self.J)]).astype(np.int64)

    def lattice_dims(self, r: int) -> tuple[int, ...]:
        return tuple(n * 2 ** (r - 1) for n in self.J1_dims)

    def delta(self, r: int) -> float:
        """Knot spacing used for bandwidths: max over axes at resolution ``r``."""
        return float(self.spacing[r - 1].max())

    @property
    def block_size(self) -> int:
        """Number of nodes in a resolution-1 subtree, ``(P**R - 1)/(P - 1)``."""
        return (self.P**self.R - 1) // (self.P - 1)

    def column(self, idx: TreeIndex) -> int:
        """0-based design-matrix column of a tree node."""
        _check_index(idx, self)
        return int(self.offsets[idx.r - 1]) + idx.j - 1

    def node_of_column(self, col: int) -> TreeIndex:
        r = int(np.searchsorted(self.offsets, col, side="right"))
        return TreeIndex(int(col - self.offsets[r - 1]) + 1, r)

    def block_columns(self, m: int) -> np.ndarray:
        """Columns of the subtree rooted at resolution-1 node ``m`` (0-based m)."""
        cols = []
        for r in range(1, self.R + 1):
            width = self.P ** (r - 1)
            start = int(self.offsets[r - 1]) + m * width
            cols.append(np.arange(start, start + width))
        return np.concatenate(cols)

    def column_block(self) -> np.ndarray:
        """0-based resolution-1 ancestor of every column."""
        return np.concatenate(
            [np.arange(self.J[r - 1]) // self.P ** (r - 1) for r in range(1, self.R + 1)]
        )

    def cell_bounds(self, idx: TreeIndex) -> tuple[np.ndarray, np.ndarray]:
        _check_index(idx, self)
        h = self.spacing[idx.r - 1]
        lo = np.array(self.box.lower) + self.lattice[idx.r - 1][idx.j - 1] * h
        return lo, lo + h


def build_grid(box: DomainBox, R: int, J1_dims) -> MultiresGrid:
    """Partition ``box`` into ``R`` nested resolutions.

    ``J1_dims`` gives the resolution-1 cell count per axis (an int is accepted
    in 1D). Each further resolution bisects every cell along every axis.
    """
    if not isinstance(box, DomainBox):
        raise ConfigError("box must be a DomainBox")
    dims = tuple(int(v) for v in np.atleast_1d(J1_dims))
    if len(dims) != box.d:
        raise ConfigError(f"J1_dims has {len(dims)} entries for a {box.d}D box")
    if int(R) != R or R < 1:
        raise ConfigError(f"R must be a positive integer, got {R}")
    if any(v < 1 for v in dims):
        raise ConfigError(f"J1_dims must be positive, got {dims}")
    R = int(R)
    d = box.d
    P = 2**d
    lo = np.array(box.lower)
    width = np.array(box.upper) - lo
    h1 = width / np.array(dims)

    # resolution 1: row-major, first axis fastest
    if d == 1:
        lat = np.arange(dims[0])[:, None]
    else:
        iy, ix = np.meshgrid(np.arange(dims[1]), np.arange(dims[0]), indexing="ij")
        lat = np.column_stack([ix.ravel(), iy.ravel()])
    # child offsets in the same row-major order
    if d == 1:
        child_off = np.array([[0], [1]])
    else:
        child_off = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])

    lattices = [lat]
    for _ in range(1, R):
        prev = lattices[-1]
        lattices.append((2 * prev[:, None, :] + child_off[None, :, :]).reshape(-1, d))

    spacing = np.empty((R, d))
    knots, inverse = [], []
    for r in range(1, R + 1):
        h = h1 / 2 ** (r - 1)
        spacing[r - 1] = h
        lat_r = lattices[r - 1]
        knots.append(lo + (lat_r + 0.5) * h)
        dims_r = tuple(n * 2 ** (r - 1) for n in dims)
        inv = np.empty(dims_r, dtype=np.int64)
        inv[tuple(lat_r.T)] = np.arange(len(lat_r))
        inverse.append(inv)

    return MultiresGrid(
        box=box,
        R=R,
        J1_dims=dims,
        P=P,
        knots=knots,
        spacing=spacing,
        lattice=lattices,
        tree_of_lattice=inverse,
    )


def _check_index(idx: TreeIndex, grid: MultiresGrid) -> None:
    if not 1 <= idx.r <= grid.R:
        raise IndexError(f"resolution {idx.r} outside 1..{grid.R}")
    if not 1 <= idx.j <= grid.J[idx.r - 1]:
        raise IndexError(f"index {idx.j} outside 1..{grid.J[idx.r - 1]} at resolution {idx.r}")


def father(idx: TreeIndex, P: int) -> TreeIndex:
    if idx.r < 2:
        raise ValueError(f"node {tuple(idx)} is at resolution 1 and has no father")
    return TreeIndex((idx.j - 1) // P + 1, idx.r - 1)


def children(idx: TreeIndex, P: int) -> list[TreeIndex]:
    return [TreeIndex((idx.j - 1) * P + c, idx.r + 1) for c in range(1, P + 1)]


def subtree(idx: TreeIndex, grid: MultiresGrid) -> list[TreeIndex]:
    """``idx`` and all its descendants, coarse to fine."""
    _check_index(idx, grid)
    out = []
    for level in range(grid.R - idx.r + 1):
        width = grid.P**level
        first = (idx.j - 1) * width + 1
        out.extend(TreeIndex(j, idx.r + level) for j in range(first, first + width))
    return out


def subtree_size(r: int, grid: MultiresGrid) -> int:
    return (grid.P ** (grid.R - r + 1) - 1) // (grid.P - 1)


def locate_many(points, grid: MultiresGrid, r: int) -> np.ndarray:
    """0-based tree index at resolution ``r`` of each point.

    Cells are half-open ``[low, high)`` per axis with the last cell closed.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.d)
    if not np.all(grid.box.contains(pts)):
        bad = pts[~grid.box.contains(pts)][0]
        raise OutOfDomainError(f"location {bad.tolist()} outside box {grid.box.flat()}")
    lo = np.array(grid.box.lower)
    h = grid.spacing[r - 1]
    dims = np.array(grid.lattice_dims(r))
    k = np.floor((pts - lo) / h).astype(np.int64)
    k = np.clip(k, 0, dims - 1)
    # the division can round across an edge; fix against the exact edges
    edge_lo = lo + k * h
    k -= (pts < edge_lo) & (k > 0)
    edge_hi = lo + (k + 1) * h
    k += (pts >= edge_hi) & (k < dims - 1)
    return grid.tree_of_lattice[r - 1][tuple(k.T)]


def locate(s, grid: MultiresGrid, r: int) -> TreeIndex:
    j = locate_many(np.atleast_1d(np.asarray(s, dtype=float)), grid, r)[0]
    return TreeIndex(int(j) + 1, r)


def neighborhood(m: int, eta: float, grid: MultiresGrid, kind: str = "blocks", locations=None) -> np.ndarray:
    """Blocks or data rows near resolution-1 knot ``m`` (1-based).

    ``kind="blocks"`` returns the 1-based resolution-1 indices ``j`` with
    ``|s_j - s_m| < 2 eta Delta_1``. ``kind="data"`` returns 0-based row
    indices ``i`` with ``|s_i - s_m| < eta Delta_1``.
    """
    if not 1 <= m <= grid.J1:
        raise IndexError(f"block {m} outside 1..{grid.J1}")
    center = grid.knots[0][m - 1]
    d1 = grid.delta(1)
    if kind == "blocks":
        dist = np.linalg.norm(grid.knots[0] - center, axis=1)
        return np.flatnonzero(dist < 2 * eta * d1) + 1
    if kind == "data":
        if locations is None:
            raise ValueError("kind='data' needs locations")
        pts = np.asarray(locations, dtype=float).reshape(-1, grid.d)
        return np.flatnonzero(np.linalg.norm(pts - center, axis=1) < eta * d1)
    raise ValueError(f"unknown neighborhood kind {kind!r}")
