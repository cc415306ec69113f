"""Compiled per-system Householder QR with column pivoting.

The vectorized numpy kernel in ``wls`` is the reference; this one produces
the same factorization one system at a time and is much faster for the
hundreds of thousands of small systems a CMF convergence study solves.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _qrcp_batch(At, bt, R, Qtb, perm):
    # At is (B, n, m) and bt is (B, K, m): columns are contiguous rows here
    B, n, m = At.shape
    K = bt.shape[1]
    steps = min(m, n)
    norms = np.empty(n)
    ref = np.empty(n)
    v = np.empty(m)
    for s in range(B):
        a = At[s]
        y = bt[s]
        for j in range(n):
            perm[s, j] = j
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc += a[j, i] * a[j, i]
            norms[j] = acc
            ref[j] = acc
        for k in range(steps):
            jbest = k
            best = norms[k]
            for j in range(k + 1, n):
                if norms[j] > best:
                    best = norms[j]
                    jbest = j
            if jbest != k:
                for i in range(m):
                    tmp = a[k, i]
                    a[k, i] = a[jbest, i]
                    a[jbest, i] = tmp
                tp = perm[s, k]
                perm[s, k] = perm[s, jbest]
                perm[s, jbest] = tp
                tn = norms[k]
                norms[k] = norms[jbest]
                norms[jbest] = tn
                tn = ref[k]
                ref[k] = ref[jbest]
                ref[jbest] = tn
            normx = 0.0
            for i in range(k, m):
                normx += a[k, i] * a[k, i]
            normx = np.sqrt(normx)
            alpha = -normx if a[k, k] >= 0 else normx
            vn2 = 0.0
            for i in range(k, m):
                v[i] = a[k, i]
            v[k] -= alpha
            for i in range(k, m):
                vn2 += v[i] * v[i]
            if vn2 > 0:
                beta = 2.0 / vn2
                for j in range(k, n):
                    acc = 0.0
                    for i in range(k, m):
                        acc += v[i] * a[j, i]
                    acc *= beta
                    for i in range(k, m):
                        a[j, i] -= v[i] * acc
                for c in range(K):
                    acc = 0.0
                    for i in range(k, m):
                        acc += v[i] * y[c, i]
                    acc *= beta
                    for i in range(k, m):
                        y[c, i] -= v[i] * acc
            for i in range(k + 1, m):
                a[k, i] = 0.0
            # downdate the remaining squared column norms; recompute after heavy cancellation
            for j in range(k + 1, n):
                norms[j] -= a[j, k] * a[j, k]
                if norms[j] <= 1e-8 * ref[j]:
                    acc = 0.0
                    for i in range(k + 1, m):
                        acc += a[j, i] * a[j, i]
                    norms[j] = acc
                    ref[j] = acc
        for i in range(steps):
            for j in range(i, n):
                R[s, i, j] = a[j, i]
            for c in range(K):
                Qtb[s, i, c] = y[c, i]


def _condition_batch(R, cond_limit, Rinv, rank, cond):
    # incremental exact 1-norm condition of the leading blocks of each R
    B, n, _ = R.shape
    for s in range(B):
        r = R[s]
        ri = Rinv[s]
        norm_r = 0.0
        norm_ri = 0.0
        rank[s] = n
        cond[s] = 1.0
        for k in range(n):
            d = r[k, k]
            if d == 0.0:
                rank[s] = k
                break
            colsum = 0.0
            for i in range(k):
                acc = 0.0
                for j in range(i, k):
                    acc += ri[i, j] * r[j, k]
                ri[i, k] = -acc / d
                colsum += abs(ri[i, k])
            colsum += 1.0 / abs(d)
            rsum = 0.0
            for i in range(k + 1):
                rsum += abs(r[i, k])
            nr = max(norm_r, rsum)
            nri = max(norm_ri, colsum)
            c = nr * nri
            if not (c <= cond_limit):
                for i in range(k):
                    ri[i, k] = 0.0
                rank[s] = k
                break
            ri[k, k] = 1.0 / d
            norm_r = nr
            norm_ri = nri
            cond[s] = c


if numba is not None:
    _qrcp_batch_compiled = numba.njit(cache=True, nogil=True)(_qrcp_batch)
    _condition_batch_compiled = numba.njit(cache=True, nogil=True)(_condition_batch)
else:  # pragma: no cover
    _qrcp_batch_compiled = None
    _condition_batch_compiled = None


def qrcp_compiled(A, b):
    """Same contract as ``wls._householder_qrcp``; ``None`` if numba is missing."""
    if _qrcp_batch_compiled is None:
        return None
    At = np.ascontiguousarray(np.swapaxes(np.asarray(A, dtype=np.float64), 1, 2))
    bt = np.ascontiguousarray(np.swapaxes(np.asarray(b, dtype=np.float64), 1, 2))
    B, n, m = At.shape
    R = np.zeros((B, n, n))
    Qtb = np.zeros((B, n, bt.shape[1]))
    perm = np.zeros((B, n), dtype=np.int64)
    _qrcp_batch_compiled(At, bt, R, Qtb, perm)
    return R, Qtb, perm


def condition_compiled(R, cond_limit):
    """Same contract as ``wls._incremental_condition``; ``None`` if numba is missing."""
    if _condition_batch_compiled is None:
        return None
    R = np.ascontiguousarray(R, dtype=np.float64)
    B, n, _ = R.shape
    Rinv = np.zeros_like(R)
    rank = np.zeros(B, dtype=np.int64)
    cond = np.ones(B)
    _condition_batch_compiled(R, float(cond_limit), Rinv, rank, cond)
    return rank, cond, Rinv
