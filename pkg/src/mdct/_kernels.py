"""Compiled inner loops for the block Gibbs sweep.

All functions release the GIL so a thread pool can run blocks of one color
class concurrently. Block layout (built in ``sampler.BlockSystem``):

* ``rows_ptr[m]:rows_ptr[m+1]`` indexes ``rows``, the data rows touching block m
* ``ent_ptr[t]:ent_ptr[t+1]`` indexes the (local column, value) entries of row ``rows[t]``
* ``cols[m]`` are the global columns of block m, ``gram[m]`` is ``A'A``
"""

import numpy as np
from numba import njit

JITTER = 1e-10


@njit(cache=True, nogil=True)
def cholesky_lower(A, L):
    n = A.shape[0]
    for j in range(n):
        for i in range(j):
            L[i, j] = 0.0
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not (s > 0.0) or not np.isfinite(s):
            return False
        ljj = np.sqrt(s)
        L[j, j] = ljj
        for i in range(j + 1, n):
            t = A[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / ljj
    return True


@njit(cache=True, nogil=True)
def _forward(L, b, out):
    n = L.shape[0]
    for i in range(n):
        t = b[i]
        for k in range(i):
            t -= L[i, k] * out[k]
        out[i] = t / L[i, i]


@njit(cache=True, nogil=True)
def _backward_t(L, b, out):
    # solves L' x = b
    n = L.shape[0]
    for i in range(n - 1, -1, -1):
        t = b[i]
        for k in range(i + 1, n):
            t -= L[k, i] * out[k]
        out[i] = t / L[i, i]


@njit(cache=True, nogil=True)
def block_draw(m, rows_ptr, rows, ent_ptr, ent_col, ent_val, gram, cols,
               beta, alpha, e, sigma2, z, out_beta, update_resid):
    """Draw block ``m`` from its Gaussian conditional.

    ``e`` is the full residual ``y - X gamma - K beta``. Returns 0 on success,
    1 if jitter was needed, -1 if the precision matrix could not be factored.
    """
    q = cols.shape[1]
    g = np.zeros(q)
    for t in range(rows_ptr[m], rows_ptr[m + 1]):
        ei = e[rows[t]]
        for k in range(ent_ptr[t], ent_ptr[t + 1]):
            g[ent_col[k]] += ent_val[k] * ei
    old = np.empty(q)
    for a in range(q):
        old[a] = beta[cols[m, a]]
    G = gram[m]
    Q = np.empty((q, q))
    b = np.empty(q)
    for a in range(q):
        acc = g[a]
        for c in range(q):
            acc += G[a, c] * old[c]
            Q[a, c] = G[a, c] / sigma2
        b[a] = acc / sigma2
        Q[a, a] += 1.0 / alpha[cols[m, a]]
    L = np.empty((q, q))
    status = 0
    if not cholesky_lower(Q, L):
        tr = 0.0
        for a in range(q):
            tr += Q[a, a]
        for a in range(q):
            Q[a, a] += JITTER * tr / q
        if not cholesky_lower(Q, L):
            return -1
        status = 1
    y = np.empty(q)
    mu = np.empty(q)
    _forward(L, b, y)
    _backward_t(L, y, mu)
    noise = np.empty(q)
    _backward_t(L, z, noise)
    new = mu + noise
    for a in range(q):
        out_beta[cols[m, a]] = new[a]
    if update_resid:
        diff = new - old
        for t in range(rows_ptr[m], rows_ptr[m + 1]):
            acc = 0.0
            for k in range(ent_ptr[t], ent_ptr[t + 1]):
                acc += ent_val[k] * diff[ent_col[k]]
            e[rows[t]] -= acc
    return status


@njit(cache=True, nogil=True)
def sweep(order, rows_ptr, rows, ent_ptr, ent_col, ent_val, gram, cols,
          beta, alpha, e, sigma2, Z, status):
    """Update blocks in ``order`` one after another with the latest values."""
    for idx in range(order.shape[0]):
        m = order[idx]
        status[m] = block_draw(m, rows_ptr, rows, ent_ptr, ent_col, ent_val, gram, cols,
                               beta, alpha, e, sigma2, Z[m], beta, True)


@njit(cache=True, nogil=True)
def jacobi(order, rows_ptr, rows, ent_ptr, ent_col, ent_val, gram, cols,
           beta, alpha, e, sigma2, Z, out_beta, status):
    """Draw blocks in ``order`` against a frozen residual; results go to ``out_beta``."""
    for idx in range(order.shape[0]):
        m = order[idx]
        status[m] = block_draw(m, rows_ptr, rows, ent_ptr, ent_col, ent_val, gram, cols,
                               beta, alpha, e, sigma2, Z[m], out_beta, False)


@njit(cache=True, nogil=True)
def block_gram(rows_ptr, ent_ptr, ent_col, ent_val, q, gram):
    nb = rows_ptr.shape[0] - 1
    for m in range(nb):
        G = gram[m]
        for t in range(rows_ptr[m], rows_ptr[m + 1]):
            for k1 in range(ent_ptr[t], ent_ptr[t + 1]):
                a = ent_col[k1]
                va = ent_val[k1]
                for k2 in range(ent_ptr[t], ent_ptr[t + 1]):
                    G[a, ent_col[k2]] += va * ent_val[k2]


@njit(cache=True, nogil=True)
def csr_residual(indptr, indices, data, beta, base, out, lo, hi):
    """``out[i] = base[i] - K[i] . beta`` for rows ``lo..hi``; returns the sum of squares."""
    ss = 0.0
    for i in range(lo, hi):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * beta[indices[k]]
        v = base[i] - acc
        out[i] = v
        ss += v * v
    return ss
