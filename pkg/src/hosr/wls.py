"""Weighted least squares core.

Generalized Vandermonde assembly (point-based and Hermite-style) with
geometric scaling, Wendland weights, and a truncated QR factorization with
column pivoting.  Everything is vectorized over a leading batch axis so that
thousands of small local fits can be solved with a handful of numpy calls;
the single-system functions are thin wrappers around the batched kernels.

Monomials are represented by exponent tuples: ``(j, k)`` for the bivariate
surface basis ``u**j * v**k`` and ``(q,)`` for the univariate curve basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._kernels import condition_compiled, qrcp_compiled
from .errors import DegenerateStencilError, HosrError

DEFAULT_COND_LIMIT = 1e8

ROW_POSITION = "position"
ROW_GRAD_U = "grad_u"
ROW_GRAD_V = "grad_v"


# --------------------------------------------------------------------------
# monomial bases
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def monomial_exponents(degree: int, dim: int = 2) -> np.ndarray:
    """Exponents of the degree-``degree`` basis in graded order.

    For ``dim=2`` the order within total degree q is ``u**q, u**(q-1) v, ...,
    v**q``, matching ``1, u, v, u^2, uv, v^2`` for degree two.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if dim == 1:
        exps = [(q,) for q in range(degree + 1)]
    elif dim == 2:
        exps = [(q - k, k) for q in range(degree + 1) for k in range(q + 1)]
    else:
        raise ValueError("dim must be 1 or 2")
    arr = np.array(exps, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MonomialBasis2D:
    degree: int
    terms: tuple = field(init=False)
    count: int = field(init=False)

    def __post_init__(self):
        exps = monomial_exponents(self.degree, 2)
        object.__setattr__(self, "terms", tuple(tuple(int(x) for x in e) for e in exps))
        object.__setattr__(self, "count", len(exps))

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.degree, 2)


def basis_size(degree: int, dim: int = 2) -> int:
    if dim == 1:
        return degree + 1
    return (degree + 1) * (degree + 2) // 2


def _factor_closure(exps: np.ndarray) -> np.ndarray:
    """``out[s, t]`` is True when monomial s divides monomial t."""
    return np.all(exps[:, None, :] <= exps[None, :, :], axis=2)


def _power_table(x, top: int) -> np.ndarray:
    """``x**0 .. x**top`` stacked on a new last axis (repeated multiplication)."""
    out = np.empty(x.shape + (top + 1,))
    out[..., 0] = 1.0
    for k in range(1, top + 1):
        out[..., k] = out[..., k - 1] * x
    return out


def vandermonde(uv, exps: np.ndarray) -> np.ndarray:
    """Monomial values at ``uv`` (shape ``(..., dim)``) -> ``(..., n)``."""
    uv = np.asarray(uv, dtype=float)
    exps = np.asarray(exps)
    top = int(exps.max()) if exps.size else 0
    out = None
    for a in range(exps.shape[1]):
        col = _power_table(uv[..., a], top)[..., exps[:, a]]
        out = col if out is None else out * col
    return out


def vandermonde_derivative(uv, exps: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative of every monomial with respect to coordinate ``axis``."""
    uv = np.asarray(uv, dtype=float)
    exps = np.asarray(exps)
    top = int(exps.max()) if exps.size else 0
    out = None
    for a in range(exps.shape[1]):
        table = _power_table(uv[..., a], top)
        e = exps[:, a]
        if a == axis:
            col = table[..., np.maximum(e - 1, 0)] * e
        else:
            col = table[..., e]
        out = col if out is None else out * col
    return out


def evaluate_polynomial(coefficients, exps: np.ndarray, uv) -> np.ndarray:
    """Evaluate ``sum_t c_t * monomial_t(uv)``.

    ``coefficients`` may carry extra trailing axes (several right-hand sides).
    """
    V = vandermonde(uv, exps)
    return np.tensordot(V, np.asarray(coefficients), axes=([-1], [0]))


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------


def _wendland_31(r):
    s = np.maximum(0.0, 1.0 - r)
    return s**4 * (4.0 * r + 1.0)


def _wendland_42(r):
    s = np.maximum(0.0, 1.0 - r)
    return s**6 * (35.0 * r * r + 18.0 * r + 3.0)


def _wendland_53(r):
    s = np.maximum(0.0, 1.0 - r)
    return s**8 * (32.0 * r**3 + 25.0 * r * r + 8.0 * r + 1.0)


def wendland_weight(r, degree: int):
    """Compactly supported Wendland weight matched to the fitting degree.

    Degrees 1-2 use psi_{3,1}, 3-4 use psi_{4,2}, and 5 and up use
    psi_{5,3}; an odd degree shares the function of the next even degree.
    Accepts scalars or arrays; the result is zero for ``r >= 1``.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    even = degree + (degree % 2)
    if even <= 2:
        out = _wendland_31(r)
    elif even == 4:
        out = _wendland_42(r)
    else:
        out = _wendland_53(r)
    return out if out.ndim else float(out)


def inverse_distance_weight(dist, degree: int, eps: float = 0.1):
    """Safeguarded inverse distance weight ``1 / sqrt(d^2 + eps)^(p/2)``."""
    dist = np.asarray(dist, dtype=float)
    out = 1.0 / np.sqrt(dist * dist + eps) ** (degree / 2.0)
    return out if out.ndim else float(out)


def safeguard_theta(dir_i, dir_0):
    """``max(0, dir_i . dir_0)``; broadcasts over leading axes."""
    d = np.sum(np.asarray(dir_i, float) * np.asarray(dir_0, float), axis=-1)
    out = np.maximum(0.0, d)
    return out if np.ndim(out) else float(out)


def radius_factor(degree: int) -> float:
    if degree <= 2:
        return 1.15
    if degree <= 4:
        return 1.2
    return 1.25


def radius_rank(degree: int, dim: int = 2) -> int:
    """Rank k of the neighbour whose distance defines the stencil radius.

    ``ceil(1.5 * n)`` for ``n`` unknowns; for surfaces this is
    ``ceil(0.75 (p+1)(p+2))``.
    """
    if dim == 2:
        return math.ceil(0.75 * (degree + 1) * (degree + 2))
    return math.ceil(1.5 * (degree + 1))


def stencil_radius_rho(local_uv, degree: int, dim: int = 2) -> float:
    """Radius used to normalize distances inside the Wendland weight."""
    uv = np.atleast_2d(np.asarray(local_uv, dtype=float))
    if uv.size == 0:
        raise ValueError("empty stencil")
    dist = np.sort(np.linalg.norm(uv, axis=1))
    k = min(radius_rank(degree, dim), len(dist))
    return float(radius_factor(degree) * dist[k - 1])


def stencil_radius_batch(dist: np.ndarray, valid: np.ndarray, degree: int, dim: int = 2) -> np.ndarray:
    """Batched radius: ``dist`` and ``valid`` have shape ``(B, M)``."""
    d = np.where(valid, dist, np.inf)
    d = np.sort(d, axis=1)
    count = valid.sum(axis=1)
    k = np.minimum(radius_rank(degree, dim), np.maximum(count, 1))
    rho = d[np.arange(len(d)), k - 1] * radius_factor(degree)
    return np.where(np.isfinite(rho), rho, 0.0)


def compute_weights(dist, valid, theta, degree: int, scheme: str = "wendland", dim: int = 2):
    """Row weights ``theta * psi(|u| / rho)`` (or the inverse-distance variant)."""
    dist = np.asarray(dist, float)
    if scheme == "wendland":
        rho = stencil_radius_batch(dist, valid, degree, dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rho[:, None] > 0, dist / rho[:, None], 0.0)
        w = wendland_weight(r, degree)
    elif scheme == "invdist":
        w = inverse_distance_weight(dist, degree)
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return np.where(valid, w * theta, 0.0)


def hermite_gradients(normals_local):
    """Height-function gradients ``(-alpha/gamma, -beta/gamma)`` from frame-local normals.

    Returns ``(grads, usable)``; points whose normal has ``gamma <= 0``
    would fold the height function, so they are marked unusable and their
    gradient is set to zero.
    """
    n = np.asarray(normals_local, float)
    gamma = n[..., 2]
    usable = gamma > 0
    safe = np.where(usable, gamma, 1.0)
    grads = np.stack([-n[..., 0] / safe, -n[..., 1] / safe], axis=-1)
    grads = np.where(usable[..., None], grads, 0.0)
    return grads, usable


def curve_gradients(tangents_local):
    """Curve height derivatives ``(beta/alpha, gamma/alpha)``; usable iff alpha > 0."""
    t = np.asarray(tangents_local, float)
    alpha = t[..., 0]
    usable = alpha > 0
    safe = np.where(usable, alpha, 1.0)
    grads = np.stack([t[..., 1] / safe, t[..., 2] / safe], axis=-1)
    grads = np.where(usable[..., None], grads, 0.0)
    return grads, usable


# --------------------------------------------------------------------------
# batched assembly and solve
# --------------------------------------------------------------------------


def assemble_batch(uv, values, weights, h, degree, *, grads=None, grad_weights=None,
                   interpolatory=False, dim=None):
    """Assemble a stack of weighted, geometrically scaled Vandermonde systems.

    Parameters
    ----------
    uv : (B, M, d) local coordinates of the stencil points (unscaled).
    values : (B, M, K) heights (K right-hand sides share one matrix).
    weights : (B, M) position-row weights; zero marks padding or dropped rows.
    h : (B,) geometric length scale.
    grads : (B, M, d, K) optional derivative data; row for axis a holds
        d f / d u_a.
    grad_weights : (B, M) weights for the derivative rows.
    interpolatory : drop the constant column (c_0 = 0).

    Returns
    -------
    A : (B, R, n) with R = M (point) or M (1 + d) (Hermite)
    b : (B, R, K)
    exps : exponents of the columns of A
    """
    uv = np.asarray(uv, float)
    B, M, d = uv.shape
    if dim is not None and dim != d:
        raise ValueError("dimension mismatch")
    exps = monomial_exponents(degree, d)
    if interpolatory:
        exps = exps[1:]
    h = np.asarray(h, float).reshape(B, 1, 1)
    mu = uv / h
    w = np.asarray(weights, float)[:, :, None]
    blocks = [w * vandermonde(mu, exps)]
    rhs = [w * np.asarray(values, float)]
    if grads is not None:
        gw = np.asarray(grad_weights, float)[:, :, None]
        grads = np.asarray(grads, float)
        for a in range(d):
            blocks.append(gw * vandermonde_derivative(mu, exps, a))
            rhs.append(gw * h * grads[:, :, a, :])
    return np.concatenate(blocks, axis=1), np.concatenate(rhs, axis=1), exps


def _householder_qrcp(A, b):
    """Vectorized Householder QR with column pivoting.

    Returns ``R`` (B, n, n) upper triangular (zero-padded when R < n rows),
    ``Qtb`` (B, n, K) and ``perm`` (B, n).  Pivot: largest remaining column
    norm, first index on ties.
    """
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    B, m, n = A.shape
    perm = np.tile(np.arange(n), (B, 1))
    ar = np.arange(B)
    steps = min(m, n)
    for k in range(steps):
        sub = A[:, k:, k:]
        norms = np.einsum("bij,bij->bj", sub, sub)
        j = np.argmax(norms, axis=1) + k
        swap = j != k
        if np.any(swap):
            idx = ar[swap]
            jj = j[swap]
            colk = A[idx, :, k].copy()
            A[idx, :, k] = A[idx, :, jj]
            A[idx, :, jj] = colk
            pk = perm[idx, k].copy()
            perm[idx, k] = perm[idx, jj]
            perm[idx, jj] = pk
        x = A[:, k:, k]
        normx = np.sqrt(np.einsum("bi,bi->b", x, x))
        x0 = x[:, 0]
        alpha = -np.where(x0 >= 0, 1.0, -1.0) * normx
        v = x.copy()
        v[:, 0] -= alpha
        vn2 = np.einsum("bi,bi->b", v, v)
        beta = np.where(vn2 > 0, 2.0 / np.where(vn2 > 0, vn2, 1.0), 0.0)
        proj = np.einsum("bi,bij->bj", v, A[:, k:, k:]) * beta[:, None]
        A[:, k:, k:] -= v[:, :, None] * proj[:, None, :]
        projb = np.einsum("bi,bij->bj", v, b[:, k:, :]) * beta[:, None]
        b[:, k:, :] -= v[:, :, None] * projb[:, None, :]
        # exact zeros below the diagonal
        A[:, k + 1:, k] = 0.0
    R = np.zeros((B, n, n))
    r = min(m, n)
    R[:, :r, :] = np.triu(A[:, :r, :])
    Qtb = np.zeros((B, n, b.shape[2]))
    Qtb[:, :r, :] = b[:, :r, :]
    return R, Qtb, perm


def _incremental_condition(R, cond_limit):
    """Incremental 1-norm condition numbers of the leading blocks of ``R``.

    Maintains the inverse of the leading block column by column.  Returns
    ``(rank, cond, Rinv)`` where ``rank`` is the number of leading pivots
    kept before the estimate first exceeds ``cond_limit`` and ``cond`` is the
    condition number of the kept block.
    """
    B, n, _ = R.shape
    Rinv = np.zeros_like(R)
    rank = np.full(B, n)
    cond = np.ones(B)
    alive = np.ones(B, dtype=bool)
    norm_r = np.zeros(B)
    norm_ri = np.zeros(B)
    for k in range(n):
        diag = R[:, k, k]
        ok = alive & (diag != 0)
        safe = np.where(ok, diag, 1.0)
        col = -np.einsum("bij,bj->bi", Rinv[:, :k, :k], R[:, :k, k]) / safe[:, None]
        nr = np.maximum(norm_r, np.abs(R[:, : k + 1, k]).sum(axis=1))
        nri = np.maximum(norm_ri, np.abs(col).sum(axis=1) + 1.0 / np.abs(safe))
        c = nr * nri
        ok &= np.isfinite(c) & (c <= cond_limit)
        newly_dead = alive & ~ok
        rank[newly_dead] = k
        alive &= ok
        Rinv[alive, :k, k] = col[alive]
        Rinv[alive, k, k] = 1.0 / diag[alive]
        norm_r = np.where(alive, nr, norm_r)
        norm_ri = np.where(alive, nri, norm_ri)
        cond = np.where(alive, c, cond)
    return rank, cond, Rinv


def solve_batch(A, b, exps, cond_limit=DEFAULT_COND_LIMIT):
    """Truncated QRCP least-squares solve of a stack of systems.

    Returns ``(y, kept, cond)``: scaled solutions (B, n, K), a boolean mask
    of retained columns, and the condition number of the retained block.
    Systems whose every column is truncated have ``kept.any(axis=1) == False``
    and a zero solution.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    B, _, n = A.shape
    K = b.shape[2]
    divides = _factor_closure(np.asarray(exps))
    y = np.zeros((B, n, K))
    kept = np.zeros((B, n), dtype=bool)
    cond = np.ones(B)
    if B == 0:
        return y, kept, cond

    # fewer equations than unknowns (a stencil that exhausted its mesh):
    # lower the degree until the basis fits, then solve as usual
    deg = np.asarray(exps).sum(axis=1)
    rows = np.count_nonzero(np.any(A != 0, axis=2), axis=1)
    top = np.full(B, deg.max())
    for i in np.flatnonzero(rows < n):
        while top[i] > deg.min() and np.count_nonzero(deg <= top[i]) > rows[i]:
            top[i] -= 1
    short = top < deg.max()
    if np.any(short):
        for i in np.flatnonzero(short):
            cols = np.flatnonzero(deg <= top[i])
            yi, ki, ci = solve_batch(A[i:i + 1][:, :, cols], b[i:i + 1], np.asarray(exps)[cols], cond_limit)
            y[i, cols] = yi[0]
            kept[i, cols] = ki[0]
            cond[i] = ci[0]
        if np.all(short):
            return y, kept, cond
        rest = np.flatnonzero(~short)
        yr, kr, cr = solve_batch(A[rest], b[rest], exps, cond_limit)
        y[rest], kept[rest], cond[rest] = yr, kr, cr
        return y, kept, cond

    fast = qrcp_compiled(A, b)
    R, Qtb, perm = fast if fast is not None else _householder_qrcp(A, b)
    fast = condition_compiled(R, cond_limit)
    rank, c, Rinv = fast if fast is not None else _incremental_condition(R, cond_limit)
    ar = np.arange(B)
    pos_mask = np.arange(n)[None, :] < rank[:, None]
    dropped = np.zeros((B, n), dtype=bool)
    dropped[ar[:, None], perm] = ~pos_mask
    closed = (dropped.astype(np.int8) @ divides.astype(np.int8)) > 0
    simple = np.all(closed == dropped, axis=1)

    # leading block solve for systems whose truncation set is already closed
    if np.any(simple):
        idx = ar[simple]
        Qm = np.where(pos_mask[idx][:, :, None], Qtb[idx], 0.0)
        yp = np.einsum("bij,bjk->bik", Rinv[idx], Qm)
        ys = np.zeros_like(yp)
        ys[np.arange(len(idx))[:, None], perm[idx]] = yp
        y[idx] = ys
        kept[idx] = ~dropped[idx]
        cond[idx] = c[idx]

    # closure removed extra columns: re-solve on the reduced column set
    for i in ar[~simple]:
        cols = np.flatnonzero(~closed[i])
        while len(cols):
            yi, ki, ci = solve_batch(A[i : i + 1][:, :, cols], b[i : i + 1], np.asarray(exps)[cols], cond_limit)
            if ki[0].all():
                y[i, cols] = yi[0]
                kept[i, cols] = True
                cond[i] = ci[0]
                break
            cols = cols[ki[0]]
    return y, kept, cond


def unscale(y, exps, h):
    """Map scaled coefficients ``x_jk`` back to ``c_jk = x_jk / h**(j+k)``."""
    deg = np.asarray(exps).sum(axis=1)
    h = np.asarray(h, float).reshape(-1, 1, 1)
    return y / h ** deg[None, :, None]


# --------------------------------------------------------------------------
# single-system API
# --------------------------------------------------------------------------


@dataclass
class WlsSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    row_blocks: list
    terms: list
    h: float
    scale: np.ndarray
    degree: int
    interpolatory: bool = False

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.terms, dtype=np.int64).reshape(len(self.terms), -1)


@dataclass
class FitResult:
    coefficients: np.ndarray
    terms: list
    effective_degree: int
    truncated_terms: list
    condition_estimate: float

    def coefficient(self, *term):
        return self.coefficients[self.terms.index(tuple(term))]


def assemble_system(local_uv, heights, weights, degree, h, gradients=None, interpolatory=False):
    """Assemble one weighted, scaled system.

    ``gradients`` is an ``(m, 2)`` array of ``(f_u, f_v)`` data (for a
    Hermite fit ``(-alpha/gamma, -beta/gamma)``); rows containing NaN
    contribute position equations only.  Rows with zero weight are omitted.
    With ``interpolatory`` the constant term is fixed at zero, which turns
    the row of the point at the origin into an empty row that is dropped.
    """
    uv = np.atleast_2d(np.asarray(local_uv, float))
    m, d = uv.shape
    if h <= 0:
        raise ValueError("h must be positive")
    f = np.asarray(heights, float).reshape(m, -1)
    w = np.asarray(weights, float).reshape(m)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    g = gw = None
    if gradients is not None:
        g = np.asarray(gradients, float).reshape(m, d, -1)
        has = np.all(np.isfinite(g), axis=(1, 2))
        g = np.where(has[:, None, None], g, 0.0)
        gw = np.where(has, w, 0.0)
    A, b, exps = assemble_batch(uv[None], f[None], w[None], np.array([h]), degree,
                                grads=None if g is None else g[None],
                                grad_weights=None if gw is None else gw[None],
                                interpolatory=interpolatory)
    labels = [ROW_POSITION] * m
    row_w = [w]
    if g is not None:
        labels += [ROW_GRAD_U] * m
        row_w.append(gw)
        if d == 2:
            labels += [ROW_GRAD_V] * m
            row_w.append(gw)
    row_w = np.concatenate(row_w)
    keep = row_w > 0
    if interpolatory:
        keep &= np.any(A[0] != 0, axis=1)
    A, b = A[0][keep], b[0][keep]
    if A.shape[0] < 1:
        raise HosrError("system has no rows")
    terms = [tuple(int(x) for x in e) for e in exps]
    scale = 1.0 / float(h) ** exps.sum(axis=1)
    return WlsSystem(A, b if b.shape[1] > 1 else b[:, 0], [l for l, k in zip(labels, keep) if k],
                     terms, float(h), scale, degree, interpolatory)


def solve_truncated_qrcp(sys: WlsSystem, cond_limit: float = DEFAULT_COND_LIMIT) -> FitResult:
    """Solve an assembled system with truncated QRCP and unscale the result.

    The returned coefficients cover the full degree-p basis; fixed or
    truncated terms are exactly zero.
    """
    if cond_limit <= 1:
        raise ValueError("cond_limit must exceed 1")
    exps = sys.exponents
    b = sys.rhs.reshape(sys.rhs.shape[0], -1)
    y, kept, cond = solve_batch(sys.matrix[None], b[None], exps, cond_limit)
    if not kept[0].any():
        raise DegenerateStencilError("all columns truncated")
    c = y[0] * sys.scale[:, None]
    full_exps = monomial_exponents(sys.degree, exps.shape[1])
    full_terms = [tuple(int(x) for x in e) for e in full_exps]
    coeffs = np.zeros((len(full_terms), c.shape[1]))
    index = {t: i for i, t in enumerate(full_terms)}
    for t, val in zip(sys.terms, c):
        coeffs[index[t]] = val
    truncated = [t for t, k in zip(sys.terms, kept[0]) if not k]
    eff = max(sum(t) for t, k in zip(sys.terms, kept[0]) if k)
    if sys.rhs.ndim == 1:
        coeffs = coeffs[:, 0]
    return FitResult(coeffs, full_terms, int(eff), truncated, float(cond[0]))
