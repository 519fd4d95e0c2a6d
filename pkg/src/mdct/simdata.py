"""Synthetic datasets: a piecewise 1D surface, Matern fields, binary probit data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special
from scipy.spatial.distance import cdist

from .errors import ConfigError, NumericalError
from .probit import BinaryDataset
from .sampler import Dataset

MAX_DENSE = 12000


@dataclass(frozen=True)
class MaternParams:
    theta1: float = 1.5
    theta2: float = 3.0
    nu: float = 0.5

    def __post_init__(self):
        if self.theta2 <= 0 or self.nu <= 0 or self.theta1 <= 0:
            raise ConfigError("Matern parameters must be positive")


@dataclass
class SimData:
    """A generated dataset with the true surface at its locations."""

    data: Dataset
    w0: np.ndarray
    gamma: np.ndarray
    noise_var: float = 0.0
    test: Dataset | None = None
    test_w0: np.ndarray | None = None


def w0_1d(s):
    """Piecewise test surface on [0, 10]; pieces are half-open, s = 10 in the last."""
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 10)) or np.any(np.isnan(s)):
        raise ValueError("w0_1d is defined on [0, 10]")
    wave = np.sin(2 * np.pi * s) * s
    out = np.where(s < 2, wave,
          np.where(s < 4, np.abs(np.sin(s - 3)) ** 3,
          np.where(s < 6, 5 * np.abs(s - 5), wave)))
    return out if out.ndim else float(out)


def matern(dist, params: MaternParams):
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0):
        raise ValueError("distances must be non-negative")
    t1, t2, nu = params.theta1, params.theta2, params.nu
    if nu == 0.5:
        out = t1 * np.exp(-t2 * dist)
    else:
        x = dist * t2
        with np.errstate(invalid="ignore"):
            out = t1 / (2 ** (nu - 1) * special.gamma(nu)) * x**nu * special.kv(nu, x)
        out = np.where(x == 0, t1, out)
    return out if out.ndim else float(out)


def matern_field(locations, params: MaternParams, rng) -> np.ndarray:
    """Draw a zero-mean Matern field by dense Cholesky factorization."""
    pts = np.asarray(locations, dtype=float)
    n = len(pts)
    if n > MAX_DENSE:
        raise ConfigError(f"dense Matern simulation is limited to n <= {MAX_DENSE}, got {n}")
    C = cdist(pts, pts)
    if params.nu == 0.5:
        C *= -params.theta2
        np.exp(C, out=C)
        C *= params.theta1
    else:
        C = matern(C, params)
    # entries this far below the diagonal carry no information in double precision,
    # and their products underflow to subnormals that make the factorization crawl
    C[C < 1e-20 * params.theta1] = 0.0
    z = rng.standard_normal(n)
    try:
        L = linalg.cholesky(C, lower=True, overwrite_a=False, check_finite=False)
    except linalg.LinAlgError:
        C[np.diag_indices(n)] += 1e-8 * params.theta1
        try:
            L = linalg.cholesky(C, lower=True, overwrite_a=True, check_finite=False)
        except linalg.LinAlgError as err:
            raise NumericalError("Matern covariance is not positive definite") from err
    del C
    return L @ z


def _design(n, rng):
    return np.column_stack([np.ones(n), rng.standard_normal(n)])


def _split(n, n_test, rng):
    perm = rng.permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def gen_1d(n: int = 20000, noise_sd: float = 0.1, gamma=(1.0, 1.0), seed: int = 0) -> SimData:
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, 10.0, n)
    X = _design(n, rng)
    g = np.asarray(gamma, dtype=float)
    w = w0_1d(s)
    y = X @ g + w + noise_sd * rng.standard_normal(n)
    return SimData(Dataset(y, X, s[:, None]), w, g, noise_sd**2)


def gen_2d(n: int = 10500, params: MaternParams = MaternParams(), noise_ratio: float = 20.0,
           gamma=(1.0, 1.0), seed: int = 0, n_test: int = 500) -> SimData:
    """Gaussian responses over a Matern field on the unit square.

    Noise variance is ``theta1 / noise_ratio``. ``n`` counts train and test
    points together.
    """
    if not 0 <= n_test < n:
        raise ConfigError("need 0 <= n_test < n")
    rng = np.random.default_rng(seed)
    S = rng.uniform(0.0, 1.0, (n, 2))
    X = _design(n, rng)
    g = np.asarray(gamma, dtype=float)
    w = matern_field(S, params, rng)
    noise_var = params.theta1 / noise_ratio
    y = X @ g + w + np.sqrt(noise_var) * rng.standard_normal(n)
    tr, te = _split(n, n_test, rng)
    return SimData(
        Dataset(y[tr], X[tr], S[tr]), w[tr], g, noise_var,
        test=Dataset(y[te], X[te], S[te]) if n_test else None,
        test_w0=w[te] if n_test else None,
    )


def gen_binary(n: int = 10500, params: MaternParams = MaternParams(), gamma=(0.0, 0.5),
               seed: int = 0, n_test: int = 500) -> SimData:
    """Probit responses ``y ~ Bernoulli(Phi(x'gamma + w0))`` over a Matern field."""
    if not 0 <= n_test < n:
        raise ConfigError("need 0 <= n_test < n")
    rng = np.random.default_rng(seed)
    S = rng.uniform(0.0, 1.0, (n, 2))
    X = _design(n, rng)
    g = np.asarray(gamma, dtype=float)
    w = matern_field(S, params, rng)
    p = special.ndtr(X @ g + w)
    y = (rng.uniform(size=n) < p).astype(float)
    tr, te = _split(n, n_test, rng)
    return SimData(
        BinaryDataset(y[tr], X[tr], S[tr]), w[tr], g, 1.0,
        test=BinaryDataset(y[te], X[te], S[te]) if n_test else None,
        test_w0=w[te] if n_test else None,
    )
