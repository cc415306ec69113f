"""Feature and boundary curve reconstruction.

A curve is handled as a list of smooth chains that end at corners (or at
the ends of an open curve).  At a vertex with unit tangent ``s`` the curve is
written locally as ``u -> (u, v(u), w(u))`` in the frame ``[s, a, b]``, and
both height components are fitted with one shared Vandermonde matrix.
Chain end points are never moved: their fits are interpolatory and CMF
queries that land exactly on them return the vertex itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import wls
from .errors import ConfigurationError, DegenerateStencilError, GeometryError
from .mesh import FeatureGraph, TriMesh, edge_key
from .surface import frame_axes, parse_method


@dataclass
class CurveChain:
    """A smooth polyline piece: positions, oriented unit tangents, closure flag."""

    points: np.ndarray
    closed: bool = False
    tangents: np.ndarray | None = None
    vertex_ids: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, float)
        if len(self.points) < 2:
            raise GeometryError("a chain needs at least two vertices")
        if self.tangents is None:
            self.tangents = estimate_tangents(self.points, self.closed)
        else:
            t = np.asarray(self.tangents, float)
            self.tangents = t / np.linalg.norm(t, axis=1, keepdims=True)
        if self.vertex_ids is not None:
            self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64)

    def __len__(self):
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.points) if self.closed else len(self.points) - 1

    def edge_ends(self, i):
        i = np.asarray(i)
        return i, (i + 1) % len(self.points)


def estimate_tangents(points, closed: bool = False) -> np.ndarray:
    """Unit tangents: average of the unit incident edge directions.

    The ends of an open chain get the one-sided direction of their only edge.
    """
    P = np.asarray(points, float)
    n = len(P)
    if n < 2:
        raise GeometryError("a chain needs at least two vertices")
    E = np.roll(P, -1, axis=0) - P if closed else P[1:] - P[:-1]
    L = np.linalg.norm(E, axis=1)
    if np.any(L == 0):
        raise GeometryError("zero-length chain edge")
    D = E / L[:, None]
    T = np.empty_like(P)
    if closed:
        T[:] = D + np.roll(D, 1, axis=0)
    else:
        T[0] = D[0]
        T[-1] = D[-1]
        T[1:-1] = D[1:] + D[:-1]
    nrm = np.linalg.norm(T, axis=1)
    if np.any(nrm == 0):
        raise GeometryError("chain folds back on itself")
    return T / nrm[:, None]


def split_at_corners(graph: FeatureGraph, vertices=None, tangents=None) -> list:
    """Smooth chains of a feature graph, cut at corners and junctions.

    Without ``vertices`` the result is a list of ``(vertex_ids, closed)``;
    with mesh positions it is a list of ``CurveChain``.  ``tangents`` may
    map a vertex id to its exact unit tangent (sign is fixed per chain).
    """
    chains = graph.chains
    if vertices is None:
        return [(list(c), closed) for c, closed in chains]
    out = []
    V = np.asarray(vertices, float)
    for ids, closed in chains:
        ids = np.asarray(ids, dtype=np.int64)
        T = None
        if tangents is not None:
            T = np.array([tangents[int(i)] for i in ids], float)
            est = estimate_tangents(V[ids], closed)
            T *= np.where(np.einsum("ij,ij->i", T, est) < 0, -1.0, 1.0)[:, None]
        out.append(CurveChain(V[ids], closed, T, ids))
    return out


def curve_frames(tangents) -> np.ndarray:
    """``(B, 3, 3)`` axes with columns ``[s, a, b]`` for unit tangents ``s``."""
    return frame_axes(tangents)[:, :, [2, 0, 1]]


@dataclass
class CurveFrame:
    origin: np.ndarray
    axes: np.ndarray


@dataclass
class CurveFitting:
    frame: CurveFrame
    coefficients: np.ndarray  # (p+1, 2): columns are the v and w heights
    effective_degree: int
    stencil: np.ndarray

    def heights(self, u):
        u = np.atleast_1d(np.asarray(u, float))
        V = wls.vandermonde(u[:, None], wls.monomial_exponents(len(self.coefficients) - 1, 1))
        return V @ self.coefficients

    def evaluate(self, x):
        """Point on the fitted curve at the local abscissa of ``x``."""
        loc = (np.atleast_2d(x) - self.frame.origin) @ self.frame.axes
        loc[:, 1:] = self.heights(loc[:, 0])
        return self.frame.origin + loc @ self.frame.axes.T


def initial_curve_ring(degree: int, hermite: bool) -> int:
    return math.ceil((degree + 1) / 4) if hermite else math.ceil((degree + 1) / 2)


def curve_stencil_is_enough(members: int, degree: int, hermite: bool) -> bool:
    return (2 * members if hermite else members) >= degree + 1


@dataclass
class CurveReconstructor:
    """Per-vertex curve fittings over a set of chains, with CMF/WALF queries."""

    chains: list
    degree: int
    method: str = "hcmf"
    interpolatory: bool = True
    cond_limit: float = wls.DEFAULT_COND_LIMIT
    weights: str = "wendland"
    chunk: int = 4096
    _coeffs: list | None = field(default=None, repr=False)
    _axes: list | None = field(default=None, repr=False)
    _stencils: list | None = field(default=None, repr=False)

    def __post_init__(self):
        self.averaging, self.hermite = parse_method(self.method)
        if self.degree < 1:
            raise ConfigurationError("degree must be >= 1")
        self.exps = wls.monomial_exponents(self.degree, 1)
        self._edge_index = {}
        for c, ch in enumerate(self.chains):
            if ch.vertex_ids is None:
                continue
            ids = ch.vertex_ids
            for i in range(ch.n_edges):
                a, b = int(ids[i]), int(ids[(i + 1) % len(ids)])
                self._edge_index[edge_key(a, b)] = (c, i, a)

    # -- stencils ------------------------------------------------------

    def vertex_stencil(self, chain: int, i: int) -> np.ndarray:
        ch = self.chains[chain]
        n = len(ch)
        ring = initial_curve_ring(self.degree, self.hermite)
        while True:
            if ch.closed:
                k = min(ring, n // 2)
                idx = (i + np.concatenate([[0], np.arange(-k, 0), np.arange(1, k + 1)])) % n
                idx = np.unique(idx)
                idx = np.concatenate([[i], idx[idx != i]])
                top = k >= n // 2
            else:
                lo, hi = max(0, i - ring), min(n - 1, i + ring)
                others = [j for j in range(lo, hi + 1) if j != i]
                idx = np.array([i] + others)
                top = lo == 0 and hi == n - 1
            if curve_stencil_is_enough(len(idx), self.degree, self.hermite) or top:
                return idx
            ring += 1

    @property
    def stencils(self) -> list:
        if self._stencils is None:
            self._stencils = [[self.vertex_stencil(c, i) for i in range(len(ch))]
                              for c, ch in enumerate(self.chains)]
        return self._stencils

    def is_fixed(self, chain: int, i) -> np.ndarray:
        """Chain end points (corners / open ends) are never moved."""
        ch = self.chains[chain]
        i = np.asarray(i)
        if ch.closed:
            return np.zeros(i.shape, bool)
        return (i == 0) | (i == len(ch) - 1)

    # -- fitting kernel -------------------------------------------------

    def fit_batch(self, origins, axes, points, tangents, h, interpolatory):
        """Batched fits; ``points``/``tangents`` are lists of (m_i, 3) arrays.

        Returns ``(coeffs (B, p+1, 2), kept (B, n_cols))``.
        """
        B = len(origins)
        coeffs = np.zeros((B, self.degree + 1, 2))
        ncol = self.degree + (0 if interpolatory else 1)
        kept = np.zeros((B, ncol), bool)
        for lo in range(0, B, self.chunk):
            hi = min(B, lo + self.chunk)
            c, k = self._fit_chunk(origins[lo:hi], axes[lo:hi], points[lo:hi], tangents[lo:hi],
                                   h[lo:hi], interpolatory)
            coeffs[lo:hi] = c
            kept[lo:hi] = k
        return coeffs, kept

    def _fit_chunk(self, origins, axes, points, tangents, h, interpolatory):
        lens = np.array([len(p) for p in points])
        M = lens.max()
        B = len(points)
        valid = np.arange(M)[None, :] < lens[:, None]
        P = np.zeros((B, M, 3))
        T = np.zeros((B, M, 3))
        P[valid] = np.concatenate(points)
        T[valid] = np.concatenate(tangents)
        loc = np.einsum("bmi,bij->bmj", P - origins[:, None, :], axes)
        tl = np.einsum("bmi,bij->bmj", T, axes)
        theta = np.maximum(0.0, tl[:, :, 0])
        w = wls.compute_weights(np.abs(loc[:, :, 0]), valid, theta, self.degree, self.weights, dim=1)
        grads = gw = None
        if self.hermite:
            g, usable = wls.curve_gradients(tl)
            grads = g[:, :, None, :]
            gw = w * usable
        A, b, exps = wls.assemble_batch(loc[:, :, :1], loc[:, :, 1:], w, h, self.degree,
                                        grads=grads, grad_weights=gw, interpolatory=interpolatory)
        y, kept, _ = wls.solve_batch(A, b, exps, self.cond_limit)
        if not np.all(kept.any(axis=1)):
            raise DegenerateStencilError("every column of a curve fit was truncated")
        c = wls.unscale(y, exps, h)
        if interpolatory:
            c = np.concatenate([np.zeros((B, 1, 2)), c], axis=1)
        return c, kept

    def _local_h(self, chain: int, i: int) -> float:
        ch = self.chains[chain]
        n = len(ch)
        lens = []
        if ch.closed or i > 0:
            lens.append(np.linalg.norm(ch.points[i] - ch.points[(i - 1) % n]))
        if ch.closed or i < n - 1:
            lens.append(np.linalg.norm(ch.points[(i + 1) % n] - ch.points[i]))
        return float(np.mean(lens))

    def _ensure_fits(self):
        if self._coeffs is not None:
            return
        self._coeffs, self._axes = [], []
        for c, ch in enumerate(self.chains):
            axes = curve_frames(ch.tangents)
            sts = self.stencils[c]
            h = np.array([self._local_h(c, i) for i in range(len(ch))])
            fixed = self.is_fixed(c, np.arange(len(ch)))
            coeffs = np.zeros((len(ch), self.degree + 1, 2))
            for interp, sel in ((self.interpolatory, ~fixed), (True, fixed)):
                idx = np.flatnonzero(sel)
                if len(idx) == 0:
                    continue
                co, _ = self.fit_batch(ch.points[idx], axes[idx], [ch.points[sts[i]] for i in idx],
                                       [ch.tangents[sts[i]] for i in idx], h[idx], interp)
                coeffs[idx] = co
            self._coeffs.append(coeffs)
            self._axes.append(axes)

    def vertex_fitting(self, chain: int, i: int) -> CurveFitting:
        self._ensure_fits()
        ch = self.chains[chain]
        axes = self._axes[chain][i]
        st = self.stencils[chain][i]
        interp = bool(self.interpolatory or self.is_fixed(chain, i))
        _, kept = self.fit_batch(ch.points[i:i + 1], axes[None], [ch.points[st]], [ch.tangents[st]],
                                 np.array([self._local_h(chain, i)]), interp)
        eff = int(np.max(np.flatnonzero(kept[0]))) + (1 if interp else 0)
        return CurveFitting(CurveFrame(ch.points[i].copy(), axes), self._coeffs[chain][i].copy(), eff, st)

    # -- queries ------------------------------------------------------

    def lift(self, chain: int, i, X):
        """Evaluate vertex i's fit at the local abscissa of each point of X."""
        self._ensure_fits()
        ch = self.chains[chain]
        x0 = ch.points[i]
        Q = self._axes[chain][i]
        loc = np.einsum("bi,bij->bj", X - x0, Q)
        V = wls.vandermonde(loc[:, :1], self.exps)
        loc[:, 1:] = np.einsum("bq,bqk->bk", V, self._coeffs[chain][i])
        return x0 + np.einsum("bij,bj->bi", Q, loc)

    def project(self, chain: int, edge, s, points=None):
        """Reconstructed points on edges ``edge`` (i -> i+1) at parameters ``s``."""
        ch = self.chains[chain]
        edge = np.atleast_1d(np.asarray(edge, dtype=np.int64))
        s = np.atleast_1d(np.asarray(s, float))
        if np.any((s < 0) | (s > 1)):
            raise ValueError("edge parameter must lie in [0, 1]")
        i, j = ch.edge_ends(edge)
        if points is None:
            points = (1 - s)[:, None] * ch.points[i] + s[:, None] * ch.points[j]
        points = np.atleast_2d(np.asarray(points, float))
        if self.averaging == "walf":
            out = (1 - s)[:, None] * self.lift(chain, i, points) + s[:, None] * self.lift(chain, j, points)
        else:
            out = self._project_cmf(chain, i, j, s, points)
        # chain ends are exact
        at_i = (s == 0) & self.is_fixed(chain, i)
        at_j = (s == 1) & self.is_fixed(chain, j)
        out[at_i] = ch.points[i[at_i]]
        out[at_j] = ch.points[j[at_j]]
        return out

    def _project_cmf(self, chain, i, j, s, points):
        ch = self.chains[chain]
        t = (1 - s)[:, None] * ch.tangents[i] + s[:, None] * ch.tangents[j]
        axes = curve_frames(t)
        sts = self.stencils[chain]
        unions = [np.unique(np.concatenate([sts[a], sts[b]])) for a, b in zip(i, j)]
        h = np.array([0.5 * (self._local_h(chain, a) + self._local_h(chain, b)) for a, b in zip(i, j)])
        coeffs, _ = self.fit_batch(points, axes, [ch.points[u] for u in unions],
                                   [ch.tangents[u] for u in unions], h, interpolatory=False)
        return points + coeffs[:, 0, 0:1] * axes[:, :, 1] + coeffs[:, 0, 1:2] * axes[:, :, 2]

    def locate_edge(self, a: int, b: int):
        """``(chain, edge, reversed)`` for mesh vertices ``a``-``b``."""
        try:
            chain, e, start = self._edge_index[edge_key(a, b)]
        except KeyError:
            raise ConfigurationError(f"edge ({a}, {b}) is not on a reconstructed chain") from None
        return chain, e, start != a

    def project_mesh_edge(self, a: int, b: int, s):
        """Points at parameter ``s`` measured from vertex ``a`` toward ``b``."""
        chain, e, rev = self.locate_edge(a, b)
        s = np.atleast_1d(np.asarray(s, float))
        return self.project(chain, np.full(len(s), e), 1 - s if rev else s)


def chains_from_mesh(mesh: TriMesh, tangents=None) -> list:
    return split_at_corners(mesh.feature, mesh.vertices, tangents)


def fit_curve_vertex(chain: CurveChain, v: int, degree: int, hermite: bool, tangents=None,
                     interpolatory: bool = True) -> CurveFitting:
    """Fit at vertex ``v`` (an index into the chain)."""
    if tangents is not None:
        chain = CurveChain(chain.points, chain.closed, tangents, chain.vertex_ids)
    rec = CurveReconstructor([chain], degree, "hwalf" if hermite else "walf", interpolatory)
    return rec.vertex_fitting(0, v)


def project_point_curve(chain: CurveChain, edge, s: float, method: str, degree: int, hermite: bool | None = None,
                        interpolatory: bool = True):
    """Single-edge query; ``edge`` is the chain edge index or a vertex pair ``(i, i+1)``."""
    averaging, herm = parse_method(method)
    if hermite is not None:
        herm = hermite
    if isinstance(edge, (tuple, list)):
        a, b = edge
        n = len(chain)
        if (a + 1) % n == b:
            e, ss = a, s
        elif (b + 1) % n == a:
            e, ss = b, 1 - s
        else:
            raise ValueError("vertices are not adjacent on the chain")
    else:
        e, ss = int(edge), s
    rec = CurveReconstructor([chain], degree, ("h" if herm else "") + averaging, interpolatory)
    return rec.project(0, [e], [ss])[0]
