"""Gibbs sampler for the multiscale kernel convolution regression model.

Model::

    y = X gamma + K_eta beta + eps,   eps ~ N(0, sigma2 I)
    beta_j^r ~ N(0, alpha_j^r)   (tree shrinkage prior, see ``shrinkage``)
    sigma2 ~ IG(a_sigma, b_sigma),  flat prior on gamma

One iteration runs, in order: eta selection, all beta blocks, gamma, sigma2,
the resolution-level scales and finally the global scale. A beta block is the
set of coefficients in the subtree of one resolution-1 knot.

Block schedules
---------------
``sequential``  one worker sweeps every block with the latest values.
``chromatic``   blocks are colored so that no two blocks of one color share a
                data row; a color class is split across ``workers`` threads.
                Same draws as ``sequential`` bit for bit.
``jacobi``      every block is drawn against the previous iteration's values
                and the residual is refreshed afterwards. Not an exact Gibbs
                sampler; kept for benchmarking.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.spatial import cKDTree

from . import _kernels, shrinkage
from .errors import ConfigError, DataError, NumericalError
from .grid import MultiresGrid
from .kernel import SparseDesign, build_design
from .shrinkage import ShrinkageState

MODES = ("sequential", "chromatic", "jacobi")
FREEZABLE = frozenset({"beta", "gamma", "sigma2", "delta", "eta"})
ROW_CHUNK = 16384


@dataclass
class Dataset:
    y: np.ndarray
    X: np.ndarray
    locations: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        loc = np.asarray(self.locations, dtype=float)
        self.locations = loc[:, None] if loc.ndim == 1 else loc
        n = len(self.y)
        if self.X.shape[0] != n or self.locations.shape[0] != n:
            raise DataError(
                f"row counts disagree: y={n}, X={self.X.shape[0]}, locations={self.locations.shape[0]}"
            )
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))
                and np.all(np.isfinite(self.locations))):
            raise DataError("data contain non-finite values")
        if n and np.linalg.matrix_rank(self.X) < self.X.shape[1]:
            raise DataError("predictor matrix X is rank deficient")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Hyperparams:
    c: float = 3.0
    a_sigma: float = 2.0
    b_sigma: float = 1.0
    h_eta: int = 5

    def __post_init__(self):
        shrinkage.check_c(self.c)
        if self.a_sigma <= 0 or self.b_sigma <= 0:
            raise ConfigError("a_sigma and b_sigma must be positive")
        if int(self.h_eta) != self.h_eta or self.h_eta < 1:
            raise ConfigError(f"h_eta must be a positive integer, got {self.h_eta}")


@dataclass
class ModelState:
    gamma: np.ndarray
    sigma2: float
    beta: np.ndarray
    shrink: ShrinkageState
    eta: int = 1

    def copy(self) -> "ModelState":
        return ModelState(self.gamma.copy(), self.sigma2, self.beta.copy(), self.shrink.copy(), self.eta)


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    mode: str = "chromatic"
    workers: int = 1
    freeze: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "freeze", frozenset(self.freeze))
        if self.n_iter < 0 or self.burn_in < 0:
            raise ConfigError("n_iter and burn_in must be non-negative")
        if self.n_iter < self.burn_in:
            raise ConfigError(f"n_iter ({self.n_iter}) < burn_in ({self.burn_in})")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.freeze <= FREEZABLE:
            raise ConfigError(f"can only freeze {sorted(FREEZABLE)}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def n_stored(self) -> int:
        return math.ceil((self.n_iter - self.burn_in) / self.thin)

    def keeps(self, t: int) -> bool:
        return t >= self.burn_in and (t - self.burn_in) % self.thin == 0


@dataclass
class ChainSamples:
    """Stored draws, one row per kept iteration.

    ``delta`` holds the resolution >= 2 scales in resolution-major order.
    """

    gamma: np.ndarray
    sigma2: np.ndarray
    beta: np.ndarray
    delta1: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    iter_times: np.ndarray = field(repr=False)
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    mode: str = "chromatic"
    family: str = "gaussian"
    jitter_events: int = 0

    def __len__(self) -> int:
        return len(self.sigma2)

    @classmethod
    def empty(cls, L: int, p: int, n_basis: int, n_delta: int, n_iter: int, **meta) -> "ChainSamples":
        return cls(
            gamma=np.zeros((L, p)), sigma2=np.zeros(L), beta=np.zeros((L, n_basis)),
            delta1=np.zeros(L), delta=np.zeros((L, n_delta)), eta=np.zeros(L, dtype=np.int64),
            iter_times=np.zeros(n_iter), **meta,
        )

    def record(self, l: int, state: ModelState, J1: int) -> None:
        self.gamma[l] = state.gamma
        self.sigma2[l] = state.sigma2
        self.beta[l] = state.beta
        self.delta1[l] = state.shrink.delta1
        self.delta[l] = state.shrink.delta[J1:]
        self.eta[l] = state.eta


# ---------------------------------------------------------------- block system


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """Per-block views of one design matrix, ready for the compiled sweep."""

    eta: float
    q: int
    cols: np.ndarray
    rows_ptr: np.ndarray
    rows: np.ndarray
    ent_ptr: np.ndarray
    ent_col: np.ndarray
    ent_val: np.ndarray
    gram: np.ndarray
    colors: np.ndarray
    order: np.ndarray = field(repr=False)
    color_classes: list = field(repr=False)

    @property
    def n_colors(self) -> int:
        return len(self.color_classes)

    def block_rows(self, m: int) -> np.ndarray:
        """0-based data rows touching block ``m`` (0-based)."""
        return self.rows[self.rows_ptr[m]:self.rows_ptr[m + 1]]


def _local_column(grid: MultiresGrid) -> np.ndarray:
    parts = []
    base = 0
    for r in range(1, grid.R + 1):
        width = grid.P ** (r - 1)
        parts.append(base + np.arange(grid.J[r - 1]) % width)
        base += width
    return np.concatenate(parts)


def _greedy_color(n: int, pairs: np.ndarray) -> np.ndarray:
    adj = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    colors = np.full(n, -1, dtype=np.int64)
    for m in range(n):
        used = {colors[k] for k in adj[m] if colors[k] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[m] = c
    return colors


def neighbor_pairs(grid: MultiresGrid, eta: float) -> np.ndarray:
    """0-based block pairs ``(a, b)``, ``a < b``, with knots closer than ``2 eta Delta_1``."""
    radius = 2 * eta * grid.delta(1)
    tree = cKDTree(grid.knots[0])
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs):
        dist = np.linalg.norm(grid.knots[0][pairs[:, 0]] - grid.knots[0][pairs[:, 1]], axis=1)
        pairs = pairs[dist < radius]
    return pairs.reshape(-1, 2)


def _rows_disjoint(classes, rows_ptr, rows) -> bool:
    for cls in classes:
        rs = np.concatenate([rows[rows_ptr[m]:rows_ptr[m + 1]] for m in cls]) if len(cls) else rows[:0]
        if len(np.unique(rs)) != len(rs):
            return False
    return True


def build_block_system(design: SparseDesign, grid: MultiresGrid) -> BlockSystem:
    K = design.K
    n = K.shape[0]
    J1, q = grid.J1, grid.block_size
    row = np.repeat(np.arange(n, dtype=np.int64), np.diff(K.indptr))
    col = K.indices.astype(np.int64)
    blk = grid.column_block()[col]
    local = _local_column(grid)[col]
    perm = np.lexsort((row, blk))
    row, blk, local, val = row[perm], blk[perm], local[perm], K.data[perm]
    key = blk * max(n, 1) + row
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]]) if len(key) else np.zeros(0, np.int64)
    ent_ptr = np.r_[starts, len(key)].astype(np.int64)
    rows = row[starts]
    rows_ptr = np.searchsorted(blk[starts], np.arange(J1 + 1)).astype(np.int64)
    gram = np.zeros((J1, q, q))
    _kernels.block_gram(rows_ptr, ent_ptr, local, val, q, gram)
    cols = np.stack([grid.block_columns(m) for m in range(J1)]).astype(np.int64)

    colors = _greedy_color(J1, neighbor_pairs(grid, design.eta))
    classes = [np.flatnonzero(colors == c) for c in range(colors.max() + 1)]
    if not _rows_disjoint(classes, rows_ptr, rows):
        # supports reach further than the knot neighborhood; color by shared rows too
        S = sparse.csr_array((np.ones(len(rows)), (rows, np.repeat(np.arange(J1), np.diff(rows_ptr)))),
                             shape=(n, J1))
        C = sparse.triu(S.T @ S, k=1).tocoo()
        extra = np.column_stack([C.row, C.col])
        colors = _greedy_color(J1, np.vstack([neighbor_pairs(grid, design.eta), extra]))
        classes = [np.flatnonzero(colors == c) for c in range(colors.max() + 1)]
    order = np.concatenate(classes).astype(np.int64)
    return BlockSystem(
        eta=design.eta, q=q, cols=cols, rows_ptr=rows_ptr, rows=rows, ent_ptr=ent_ptr,
        ent_col=local, ent_val=np.ascontiguousarray(val), gram=gram, colors=colors,
        order=order, color_classes=classes,
    )


# ----------------------------------------------------- reference conditionals


def gamma_conditional(data: Dataset, design: SparseDesign, state: ModelState):
    """Mean and covariance of ``gamma | rest``."""
    XtX = data.X.T @ data.X
    mean = np.linalg.solve(XtX, data.X.T @ (data.y - design.dot(state.beta)))
    return mean, state.sigma2 * np.linalg.inv(XtX)


def update_gamma(data: Dataset, design: SparseDesign, state: ModelState, rng) -> np.ndarray:
    mean, cov = gamma_conditional(data, design, state)
    return mean + np.linalg.cholesky(cov) @ rng.standard_normal(len(mean))


def sigma2_conditional(data: Dataset, design: SparseDesign, state: ModelState, hyper: Hyperparams):
    """Shape and rate of the inverse-Gamma ``sigma2 | rest``."""
    resid = data.y - data.X @ state.gamma - design.dot(state.beta)
    return data.n / 2 + hyper.a_sigma, hyper.b_sigma + 0.5 * float(resid @ resid)


def update_sigma2(data: Dataset, design: SparseDesign, state: ModelState, hyper: Hyperparams, rng) -> float:
    shape, rate = sigma2_conditional(data, design, state, hyper)
    return float(1.0 / rng.gamma(shape, 1.0 / rate))


def block_conditional(m: int, data: Dataset, design: SparseDesign, grid: MultiresGrid,
                      state: ModelState, beta=None):
    """Gaussian conditional of block ``m`` (1-based): ``(mean, cov, rows, other_cols)``.

    ``beta`` defaults to ``state.beta``; any object supporting fancy indexing
    works, which lets callers audit which coefficients are read. Only rows
    touching the block and coefficients sharing those rows are accessed.
    """
    if not 1 <= m <= grid.J1:
        raise IndexError(f"block {m} outside 1..{grid.J1}")
    beta = state.beta if beta is None else beta
    B = grid.block_columns(m - 1)
    K = design.K
    Kc = sparse.csc_array(K)[:, B]
    rows = np.unique(Kc.indices)
    Krows = K[rows]
    other = np.setdiff1d(np.unique(Krows.indices), B)
    A = Kc[rows].toarray()
    resid = data.y[rows] - data.X[rows] @ state.gamma
    if len(other):
        resid = resid - Krows[:, other] @ np.asarray(beta[other], dtype=float)
    alpha = state.shrink.alpha[B]
    Q = A.T @ A / state.sigma2 + np.diag(1.0 / alpha)
    cov = np.linalg.inv(Q)
    mean = cov @ (A.T @ resid) / state.sigma2
    return mean, cov, rows, other


def update_beta_block(m: int, data: Dataset, design: SparseDesign, grid: MultiresGrid,
                      state: ModelState, rng) -> np.ndarray:
    mean, cov, _, _ = block_conditional(m, data, design, grid, state)
    return mean + np.linalg.cholesky(cov) @ rng.standard_normal(len(mean))


def log_likelihood(data: Dataset, design: SparseDesign, state: ModelState) -> float:
    resid = data.y - data.X @ state.gamma - design.dot(state.beta)
    n = data.n
    return float(-0.5 * n * np.log(2 * np.pi * state.sigma2) - 0.5 * resid @ resid / state.sigma2)


def select_eta(data: Dataset, designs: dict, state: ModelState) -> int:
    """Bandwidth multiplier maximizing the data likelihood; ties go to the smallest."""
    best, best_ll = None, -np.inf
    for eta in sorted(designs):
        ll = log_likelihood(data, designs[eta], state)
        if ll > best_ll:
            best, best_ll = eta, ll
    state.eta = int(best)
    return state.eta


# ------------------------------------------------------------------- sampler


class GibbsSampler:
    """Holds designs, cached factorizations and the running residual.

    The residual ``y - X gamma - K_eta beta`` is kept current between updates
    so each block only touches its own rows.
    """

    def __init__(self, data: Dataset, grid: MultiresGrid, hyper: Hyperparams, *,
                 mode: str = "chromatic", workers: int = 1, freeze=frozenset(),
                 family: str = "gaussian"):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if family not in ("gaussian", "probit"):
            raise ConfigError(f"unknown family {family!r}")
        if data.locations.shape[1] != grid.d:
            raise DataError(f"locations are {data.locations.shape[1]}D, grid is {grid.d}D")
        self.data, self.grid, self.hyper = data, grid, hyper
        self.mode, self.workers, self.family = mode, int(workers), family
        self.freeze = frozenset(freeze)
        self.designs = {eta: build_design(data.locations, grid, eta)
                        for eta in range(1, int(hyper.h_eta) + 1)}
        self._systems: dict[int, BlockSystem] = {}
        self.xtx_chol = np.linalg.cholesky(data.X.T @ data.X)
        self.response = data.y.copy()
        self.resid = np.zeros(data.n)
        self._buf = np.empty(data.n)
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        self.jitter_events = 0

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def system(self, eta: int) -> BlockSystem:
        if eta not in self._systems:
            self._systems[eta] = build_block_system(self.designs[eta], self.grid)
        return self._systems[eta]

    # -- state

    def initial_state(self, rng: np.random.Generator) -> ModelState:
        X = self.data.X
        if self.family == "probit":
            from .probit import draw_latents
            self.response = draw_latents(np.zeros(self.data.n), self.data.y, rng)
        gamma = linalg.cho_solve((self.xtx_chol, True), X.T @ self.response)
        fit = self.response - X @ gamma
        if self.family == "probit":
            sigma2 = 1.0
        else:
            dof = max(self.data.n - self.data.p, 1)
            sigma2 = max(float(fit @ fit) / dof, 1e-12)
        state = ModelState(
            gamma=gamma, sigma2=sigma2, beta=np.zeros(self.grid.n_basis),
            shrink=shrinkage.initial_state(self.hyper.c, self.grid), eta=1,
        )
        self.attach(state)
        return state

    def attach(self, state: ModelState) -> None:
        """Recompute the running residual for an externally supplied state."""
        base = self.response - self.data.X @ state.gamma
        self._residual_into(state.eta, state.beta, base, self.resid)

    def _chunks(self):
        n = self.data.n
        return [(lo, min(lo + ROW_CHUNK, n)) for lo in range(0, n, ROW_CHUNK)]

    def _residual_into(self, eta, beta, base, out) -> float:
        K = self.designs[eta].K
        args = (K.indptr, K.indices, K.data, beta, base, out)
        chunks = self._chunks()
        if self._pool is not None and len(chunks) > 1:
            parts = list(self._pool.map(lambda c: _kernels.csr_residual(*args, c[0], c[1]), chunks))
        else:
            parts = [_kernels.csr_residual(*args, lo, hi) for lo, hi in chunks]
        return float(sum(parts))

    # -- updates

    def select_eta(self, state: ModelState) -> np.ndarray:
        base = self.response - self.data.X @ state.gamma
        ss = np.empty(len(self.designs))
        best = None
        for k, eta in enumerate(sorted(self.designs)):
            ss[k] = self._residual_into(eta, state.beta, base, self._buf)
            if best is None or ss[k] < ss[best]:
                best = k
                self.resid, self._buf = self._buf, self.resid
        state.eta = best + 1
        return -0.5 * self.data.n * np.log(2 * np.pi * state.sigma2) - 0.5 * ss / state.sigma2

    def update_beta(self, state: ModelState, Z: np.ndarray) -> None:
        sys = self.system(state.eta)
        status = np.zeros(self.grid.J1, dtype=np.int64)
        args = (sys.rows_ptr, sys.rows, sys.ent_ptr, sys.ent_col, sys.ent_val, sys.gram, sys.cols)
        beta, alpha = state.beta, state.shrink.alpha
        if self.mode == "jacobi":
            out = beta.copy()
            parts = np.array_split(sys.order, self.workers)
            run = lambda o: _kernels.jacobi(o, *args, beta, alpha, self.resid, state.sigma2, Z, out, status)
            if self._pool is not None:
                list(self._pool.map(run, parts))
            else:
                run(sys.order)
            state.beta = out
            self.attach(state)
        elif self.mode == "sequential" or self._pool is None:
            _kernels.sweep(sys.order, *args, beta, alpha, self.resid, state.sigma2, Z, status)
        else:
            for cls in sys.color_classes:
                parts = [p for p in np.array_split(cls, self.workers) if len(p)]
                futures = [self._pool.submit(_kernels.sweep, p, *args, beta, alpha, self.resid,
                                             state.sigma2, Z, status) for p in parts]
                for f in futures:
                    f.result()
        if np.any(status < 0):
            raise NumericalError(f"block precision not positive definite for blocks {np.flatnonzero(status < 0) + 1}")
        self.jitter_events += int(np.sum(status == 1))

    def update_gamma(self, state: ModelState, z: np.ndarray) -> None:
        X = self.data.X
        shift = linalg.cho_solve((self.xtx_chol, True), X.T @ self.resid)
        noise = linalg.solve_triangular(self.xtx_chol.T, z, lower=False) * np.sqrt(state.sigma2)
        new = state.gamma + shift + noise
        self.resid -= X @ (new - state.gamma)
        state.gamma = new

    def update_sigma2(self, state: ModelState, rng) -> None:
        shape = self.data.n / 2 + self.hyper.a_sigma
        rate = self.hyper.b_sigma + 0.5 * float(self.resid @ self.resid)
        state.sigma2 = float(1.0 / rng.gamma(shape, 1.0 / rate))

    def update_latents(self, state: ModelState, rng) -> None:
        from .probit import draw_latents
        linpred = self.response - self.resid
        z = draw_latents(linpred, self.data.y, rng)
        self.resid = z - linpred
        self.response = z

    def step(self, state: ModelState, t: int, seed: int) -> ModelState:
        """One full Gibbs iteration; all randomness comes from ``(seed, t)``."""
        rng = np.random.default_rng([seed, t + 1])
        Z = rng.standard_normal((self.grid.J1, self.grid.block_size))
        zg = rng.standard_normal(self.data.p)
        if self.family == "probit":
            self.update_latents(state, rng)
        if "eta" not in self.freeze and len(self.designs) > 1:
            self.select_eta(state)
        if "beta" not in self.freeze:
            self.update_beta(state, Z)
        if "gamma" not in self.freeze:
            self.update_gamma(state, zg)
        if self.family == "gaussian" and "sigma2" not in self.freeze:
            self.update_sigma2(state, rng)
        if "delta" not in self.freeze:
            shrinkage.update_all(state.beta, state.shrink, self.grid, rng)
        return state


def gibbs_iteration(sampler: GibbsSampler, state: ModelState, t: int, seed: int) -> ModelState:
    return sampler.step(state, t, seed)


def run_chain(data: Dataset, grid: MultiresGrid, hyper: Hyperparams, config: ChainConfig, *,
              family: str = "gaussian", init: ModelState | None = None,
              sampler: GibbsSampler | None = None, progress=None) -> ChainSamples:
    """Run the sampler and keep every ``thin``-th draw after ``burn_in``.

    Deterministic given ``config.seed``; the sequential and chromatic modes
    produce identical draws for any worker count.
    """
    own = sampler is None
    if own:
        sampler = GibbsSampler(data, grid, hyper, mode=config.mode, workers=config.workers,
                               freeze=config.freeze, family=family)
    try:
        if init is None:
            state = sampler.initial_state(np.random.default_rng([config.seed, 0]))
        else:
            state = init.copy()
            sampler.attach(state)
        chain = ChainSamples.empty(
            config.n_stored, data.p, grid.n_basis, grid.n_basis - grid.J1, config.n_iter,
            burn_in=config.burn_in, thin=config.thin, seed=config.seed, mode=config.mode,
            family=family,
        )
        l = 0
        for t in range(config.n_iter):
            t0 = time.perf_counter()
            sampler.step(state, t, config.seed)
            chain.iter_times[t] = time.perf_counter() - t0
            if config.keeps(t):
                chain.record(l, state, grid.J1)
                l += 1
            if progress is not None:
                progress(t, state)
        chain.jitter_events = sampler.jitter_events
        return chain
    finally:
        if own:
            sampler.close()
