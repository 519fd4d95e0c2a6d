"""Compactly supported Wendland kernel and the multiresolution design matrix."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError
from .grid import MultiresGrid, locate_many


def wendland_order(d: int) -> int:
    return d // 2 + 2


def wendland(z, l: int):
    """``(1 - z)_+^(l+1) (1 + (l+1) z)``; exactly zero for ``z >= 1``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("wendland is defined for z >= 0")
    t = np.clip(1.0 - z, 0.0, None)
    out = t ** (l + 1) * (1.0 + (l + 1) * z)
    out = np.where(z >= 1.0, 0.0, out)
    return out if out.ndim else float(out)


def kernel_eval(s, knot, phi_r: float, l: int):
    if phi_r <= 0:
        raise ValueError("bandwidth must be positive")
    s = np.asarray(s, dtype=float)
    knot = np.asarray(knot, dtype=float)
    diff = np.atleast_1d(s - knot)
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    return wendland(dist / phi_r, l)


@dataclass(frozen=True)
class KernelConfig:
    d: int
    l: int
    eta: float
    phi: tuple[float, ...]

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.l != wendland_order(self.d):
            raise ConfigError(f"polynomial order for d={self.d} must be {wendland_order(self.d)}")
        phi = np.asarray(self.phi)
        if np.any(phi <= 0) or np.any(np.diff(phi) >= 0):
            raise ConfigError(f"bandwidths must be positive and strictly decreasing, got {self.phi}")


def kernel_config(grid: MultiresGrid, eta: float) -> KernelConfig:
    phi = tuple(eta * grid.delta(r) for r in range(1, grid.R + 1))
    return KernelConfig(d=grid.d, l=wendland_order(grid.d), eta=float(eta), phi=phi)


@dataclass(frozen=True, eq=False)
class SparseDesign:
    """Row-sparse basis matrix ``K`` (n x sum_r J(r)) for one bandwidth multiplier."""

    K: sparse.csr_array
    eta: float

    @property
    def n_rows(self) -> int:
        return self.K.shape[0]

    @property
    def n_cols(self) -> int:
        return self.K.shape[1]

    @property
    def nnz(self) -> int:
        return self.K.nnz

    def row(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.K.indptr[i], self.K.indptr[i + 1]
        return list(zip(self.K.indices[lo:hi].tolist(), self.K.data[lo:hi].tolist()))

    def dot(self, beta) -> np.ndarray:
        return self.K @ np.asarray(beta, dtype=float)


def _resolution_entries(pts: np.ndarray, grid: MultiresGrid, r: int, phi: float, l: int):
    d = grid.d
    h = grid.spacing[r - 1]
    dims = np.array(grid.lattice_dims(r))
    lo = np.array(grid.box.lower)
    # lattice cell of each point; every knot within phi lies within `reach` cells
    base = np.clip(np.floor((pts - lo) / h).astype(np.int64), 0, dims - 1)
    reach = np.ceil(phi / h).astype(np.int64) + 1
    ranges = [range(-int(w), int(w) + 1) for w in reach]
    rows, cols, vals = [], [], []
    idx = np.arange(len(pts))
    inv = grid.tree_of_lattice[r - 1]
    for off in itertools.product(*ranges):
        cand = base + np.array(off)
        ok = np.all((cand >= 0) & (cand < dims), axis=1)
        if not ok.any():
            continue
        c = cand[ok]
        diff = pts[ok] - (lo + (c + 0.5) * h)
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        near = dist < phi
        if not near.any():
            continue
        v = wendland(dist[near] / phi, l)
        keep = v > 0
        rows.append(idx[ok][near][keep])
        cols.append(inv[tuple(c[near][keep].T)])
        vals.append(v[keep])
    if not rows:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def build_design(locations, grid: MultiresGrid, eta: float, chunk: int = 20000) -> SparseDesign:
    """Evaluate every basis function at every location, storing nonzeros only.

    Columns are resolution-major, then tree index within resolution.
    """
    pts = np.asarray(locations, dtype=float).reshape(-1, grid.d)
    cfg = kernel_config(grid, eta)
    locate_many(pts, grid, 1)  # raises on out-of-domain locations
    offsets = grid.offsets
    blocks = []
    for start in range(0, max(len(pts), 1), chunk):
        sub = pts[start:start + chunk]
        rr, cc, vv = [], [], []
        for r in range(1, grid.R + 1):
            i, j, v = _resolution_entries(sub, grid, r, cfg.phi[r - 1], cfg.l)
            rr.append(i)
            cc.append(j + offsets[r - 1])
            vv.append(v)
        m = sparse.csr_array(
            (np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
            shape=(len(sub), grid.n_basis),
        )
        blocks.append(m)
    K = sparse.vstack(blocks, format="csr") if len(blocks) > 1 else blocks[0]
    K = sparse.csr_array(K)
    K.sum_duplicates()
    K.sort_indices()
    return SparseDesign(K=K, eta=float(eta))


def dense_design(locations, grid: MultiresGrid, eta: float) -> np.ndarray:
    """Brute-force dense evaluation; for checking :func:`build_design`."""
    pts = np.asarray(locations, dtype=float).reshape(-1, grid.d)
    cfg = kernel_config(grid, eta)
    cols = []
    for r in range(1, grid.R + 1):
        dist = np.linalg.norm(pts[:, None, :] - grid.knots[r - 1][None, :, :], axis=2)
        cols.append(wendland(dist / cfg.phi[r - 1], cfg.l))
    return np.hstack(cols)
