"""Surface reconstruction: normals, local frames, stencils, vertex fittings
and the four projection methods (CMF, WALF and their Hermite variants).

A vertex lying on a feature curve belongs to several smooth patches.  Every
(vertex, patch) pair is a *node* of the mesh; normals, stencils and fittings
are all stored per node, so the two sides of a sharp crease never mix.

Single-query functions (``fit_vertex``, ``project_point_cmf``, ...) are
convenient for tests and small meshes.  Convergence studies go through
``SurfaceReconstructor``, which builds all stencils at once, caches vertex
fittings and solves CMF queries in batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import wls
from .errors import ConfigurationError, DegenerateStencilError, GeometryError
from .mesh import Stencil, TriMesh, k_ring_vertices

POINT_RINGS = {1: 1.0, 2: 1.5, 3: 2.0, 4: 2.5, 5: 3.0, 6: 3.5}
HERMITE_RINGS = {1: 1.0, 2: 1.0, 3: 1.0, 4: 1.0, 5: 1.5, 6: 2.0}

_METHODS = {
    "cmf": ("cmf", False),
    "walf": ("walf", False),
    "hcmf": ("cmf", True),
    "hwalf": ("walf", True),
}

NORMAL_SOURCES = ("auto", "oracle", "mesh", "obj", "estimate")


def parse_method(name: str):
    """Map ``CMF``, ``h-walf``, ``H_CMF``... to ``(averaging, hermite)``."""
    key = name.lower().replace("-", "").replace("_", "")
    if key not in _METHODS:
        raise ConfigurationError(f"unknown method {name!r}")
    return _METHODS[key]


@dataclass(frozen=True)
class MethodConfig:
    method: str = "hwalf"
    degree: int = 2
    normals_source: str = "auto"
    interpolatory: bool = True
    cond_limit: float = wls.DEFAULT_COND_LIMIT
    weights: str = "wendland"

    def __post_init__(self):
        averaging, hermite = parse_method(self.method)
        object.__setattr__(self, "method", ("h" if hermite else "") + averaging)
        if self.degree < 1:
            raise ConfigurationError("degree must be >= 1")
        if self.normals_source not in NORMAL_SOURCES:
            raise ConfigurationError(f"unknown normals source {self.normals_source!r}")
        if self.weights not in ("wendland", "invdist"):
            raise ConfigurationError(f"unknown weight scheme {self.weights!r}")
        if self.cond_limit <= 1:
            raise ConfigurationError("cond_limit must exceed 1")

    @property
    def hermite(self) -> bool:
        return self.method.startswith("h")

    @property
    def averaging(self) -> str:
        return self.method.lstrip("h")

    def with_method(self, method: str) -> "MethodConfig":
        return replace(self, method=method)


# ----------------------------------------------------------------------
# frames and normals
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LocalFrame:
    origin: np.ndarray
    axes: np.ndarray  # columns s, t, m

    def to_local(self, X):
        return (np.asarray(X, float) - self.origin) @ self.axes

    def to_global(self, uvw):
        return self.origin + np.asarray(uvw, float) @ self.axes.T


def frame_axes(normals) -> np.ndarray:
    """Batched frame completion: ``(B, 3)`` unit normals to ``(B, 3, 3)`` axes.

    The helper axis is the canonical axis least aligned with the normal;
    ties go to the highest index, so a z normal yields ``s = x, t = y``.
    """
    m = np.atleast_2d(np.asarray(normals, float))
    nrm = np.linalg.norm(m, axis=1)
    if np.any(nrm == 0) or not np.all(np.isfinite(nrm)):
        raise ValueError("zero or non-finite normal")
    m = m / nrm[:, None]
    idx = 2 - np.argmin(np.abs(m)[:, ::-1], axis=1)
    e = np.eye(3)[idx]
    s = np.cross(e, m)
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    t = np.cross(m, s)
    return np.stack([s, t, m], axis=2)


def build_local_frame(x0, m0) -> LocalFrame:
    return LocalFrame(np.asarray(x0, float).copy(), frame_axes(np.asarray(m0, float)[None])[0])


def estimate_vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Area-weighted average of incident face normals, one per mesh node.

    Rows follow ``mesh.node_vertex`` / ``mesh.node_patch``, so a vertex on a
    crease gets one normal for each side.  Vertices without faces have no
    node and therefore no normal.
    """
    acc = np.zeros((mesh.n_nodes, 3))
    fn = mesh.face_normals
    for c in range(3):
        np.add.at(acc, mesh.face_nodes[:, c], fn)
    nrm = np.linalg.norm(acc, axis=1)
    if np.any(nrm == 0):
        raise GeometryError("a vertex has faces whose normals cancel")
    return acc / nrm[:, None]


def resolve_normals(mesh: TriMesh, source: str = "auto", surface=None) -> np.ndarray:
    """Per-node normals from the oracle, the mesh file, or face averaging."""
    if source == "auto":
        source = "oracle" if surface is not None else ("mesh" if mesh.vertex_normals is not None else "estimate")
    if source == "oracle":
        if surface is None:
            raise ConfigurationError("oracle normals need an analytic surface")
        return surface.node_normals(mesh)
    if source in ("mesh", "obj"):
        if mesh.vertex_normals is None:
            raise ConfigurationError("mesh has no vertex normals")
        return mesh.vertex_normals[mesh.node_vertex]
    if source == "estimate":
        return estimate_vertex_normals(mesh)
    raise ConfigurationError(f"unknown normals source {source!r}")


# ----------------------------------------------------------------------
# stencils
# ----------------------------------------------------------------------


def initial_ring(degree: int, hermite: bool) -> float:
    table = HERMITE_RINGS if hermite else POINT_RINGS
    if degree in table:
        return table[degree]
    return table[6] + 0.5 * (degree - 6)


def stencil_is_enough(members: int, degree: int, hermite: bool) -> bool:
    n = wls.basis_size(degree)
    if hermite:
        return 3 * members >= 1.5 * n
    return members >= n


def select_stencil(mesh: TriMesh, v: int, degree: int, hermite: bool, patch=None, max_ring: float = 8.0) -> Stencil:
    ring = initial_ring(degree, hermite)
    while True:
        st = k_ring_vertices(mesh, v, ring, patch)
        if stencil_is_enough(len(st.members), degree, hermite) or ring >= max_ring:
            return st
        ring += 0.5


# ----------------------------------------------------------------------
# single-vertex fitting
# ----------------------------------------------------------------------


@dataclass
class VertexFitting:
    frame: LocalFrame
    fit: wls.FitResult
    stencil: Stencil
    degree_requested: int
    hermite: bool

    def height(self, uv):
        return wls.evaluate_polynomial(self.fit.coefficients, wls.monomial_exponents(self.degree_requested),
                                       np.atleast_2d(uv))

    def evaluate(self, x):
        """Lift ``x`` onto the fitted surface along this frame's normal."""
        loc = self.frame.to_local(np.atleast_2d(x))
        loc[:, 2] = self.height(loc[:, :2])
        return self.frame.to_global(loc)


def _local_rows(points, normals, frame, hermite):
    loc = frame.to_local(points)
    grads = None
    usable = np.ones(len(points), bool)
    if hermite:
        grads, usable = wls.hermite_gradients(normals @ frame.axes)
        grads = np.where(usable[:, None], grads, np.nan)
    return loc, grads, usable


def fit_vertex(mesh: TriMesh, v: int, cfg: MethodConfig, normals=None, patch=None, surface=None) -> VertexFitting:
    """Fit the local height function at vertex ``v`` (on ``patch`` if on a crease)."""
    if normals is None:
        normals = resolve_normals(mesh, cfg.normals_source, surface)
    st = select_stencil(mesh, v, cfg.degree, cfg.hermite, patch)
    node_ids = np.array([mesh.node_of(int(u), st.patch) for u in st.members])
    center = node_ids[0]
    frame = build_local_frame(mesh.vertices[v], normals[center])
    pts = mesh.vertices[st.members]
    nrm = normals[node_ids]
    loc, grads, _ = _local_rows(pts, nrm, frame, cfg.hermite)
    dist = np.linalg.norm(loc[:, :2], axis=1)
    theta = wls.safeguard_theta(nrm, frame.axes[:, 2])
    w = wls.compute_weights(dist[None], np.ones((1, len(dist)), bool), np.atleast_1d(theta)[None],
                            cfg.degree, cfg.weights)[0]
    h = float(mesh.node_edge_length[center])
    sys = wls.assemble_system(loc[:, :2], loc[:, 2], w, cfg.degree, h, gradients=grads,
                              interpolatory=cfg.interpolatory)
    fit = wls.solve_truncated_qrcp(sys, cfg.cond_limit)
    return VertexFitting(frame, fit, st, cfg.degree, cfg.hermite)


# ----------------------------------------------------------------------
# batched reconstruction
# ----------------------------------------------------------------------


def _pad(members):
    lens = np.fromiter((len(m) for m in members), dtype=np.int64, count=len(members))
    M = int(lens.max()) if len(lens) else 0
    idx = np.zeros((len(members), M), dtype=np.int64)
    valid = np.arange(M)[None, :] < lens[:, None]
    if len(members):
        idx[valid] = np.concatenate(members)
    return idx, valid


@dataclass
class SurfaceReconstructor:
    """Batched CMF/WALF reconstruction over a fixed mesh and configuration."""

    mesh: TriMesh
    cfg: MethodConfig
    normals: np.ndarray | None = None
    surface: object = None
    chunk: int = 2048
    _stencils: list | None = field(default=None, repr=False)
    _vertex_coeffs: np.ndarray | None = field(default=None, repr=False)
    _vertex_axes: np.ndarray | None = field(default=None, repr=False)
    _unions: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.normals is None:
            self.normals = resolve_normals(self.mesh, self.cfg.normals_source, self.surface)
        self.normals = np.asarray(self.normals, float)
        if self.normals.shape != (self.mesh.n_nodes, 3):
            raise ConfigurationError("normals must have one row per mesh node")
        self.exps = wls.monomial_exponents(self.cfg.degree)

    # -- stencils ------------------------------------------------------

    @property
    def stencils(self) -> list:
        if self._stencils is None:
            p, herm = self.cfg.degree, self.cfg.hermite
            start = initial_ring(p, herm)
            self._stencils = self.mesh.node_stencils(
                start, lambda m: stencil_is_enough(m, p, herm), max_ring=start + 3.0)
        return self._stencils

    def union_stencil(self, nodes) -> np.ndarray:
        key = tuple(sorted(int(n) for n in nodes))
        out = self._unions.get(key)
        if out is None:
            st = self.stencils
            out = np.unique(np.concatenate([st[n].nodes for n in key]))
            self._unions[key] = out
        return out

    # -- the batched fitting kernel -----------------------------------

    def fit_batch(self, origins, axes, members, h, interpolatory):
        """Fit heights in many local frames at once.

        ``members`` is a list of node-index arrays.  Returns unscaled
        coefficients over the full degree-p basis, shape ``(B, n)``.
        """
        B = len(origins)
        out = np.zeros((B, len(self.exps)))
        for lo in range(0, B, self.chunk):
            hi = min(B, lo + self.chunk)
            out[lo:hi] = self._fit_chunk(origins[lo:hi], axes[lo:hi], members[lo:hi], h[lo:hi], interpolatory)
        return out

    def _fit_chunk(self, origins, axes, members, h, interpolatory):
        cfg = self.cfg
        idx, valid = _pad(members)
        X = self.mesh.vertices[self.mesh.node_vertex[idx]]
        loc = np.einsum("bmi,bij->bmj", X - origins[:, None, :], axes)
        nrm = self.normals[idx]
        theta = np.maximum(0.0, np.einsum("bmi,bi->bm", nrm, axes[:, :, 2]))
        dist = np.linalg.norm(loc[:, :, :2], axis=2)
        w = wls.compute_weights(dist, valid, theta, cfg.degree, cfg.weights)
        grads = gw = None
        if cfg.hermite:
            g, usable = wls.hermite_gradients(np.einsum("bmi,bij->bmj", nrm, axes))
            grads = g[..., None]
            gw = w * usable
        A, b, exps = wls.assemble_batch(loc[:, :, :2], loc[:, :, 2:3], w, h, cfg.degree,
                                        grads=grads, grad_weights=gw, interpolatory=interpolatory)
        y, kept, _ = wls.solve_batch(A, b, exps, cfg.cond_limit)
        if not np.all(kept.any(axis=1)):
            raise DegenerateStencilError("every column of a local fit was truncated")
        c = wls.unscale(y, exps, h)[:, :, 0]
        if interpolatory:
            c = np.concatenate([np.zeros((len(c), 1)), c], axis=1)
        return c

    # -- vertex fittings (WALF) ---------------------------------------

    def _ensure_vertex_fits(self):
        if self._vertex_coeffs is not None:
            return
        mesh = self.mesh
        axes = frame_axes(self.normals)
        origins = mesh.vertices[mesh.node_vertex]
        members = [s.nodes for s in self.stencils]
        self._vertex_axes = axes
        self._vertex_coeffs = self.fit_batch(origins, axes, members, mesh.node_edge_length,
                                             self.cfg.interpolatory)

    @property
    def vertex_coefficients(self) -> np.ndarray:
        self._ensure_vertex_fits()
        return self._vertex_coeffs

    def lift_with_vertex_fit(self, nodes, points):
        """Map each point onto the fitted surface of the matching node's fit."""
        self._ensure_vertex_fits()
        x0 = self.mesh.vertices[self.mesh.node_vertex[nodes]]
        Q = self._vertex_axes[nodes]
        loc = np.einsum("bi,bij->bj", points - x0, Q)
        f = np.einsum("be,be->b", self._vertex_coeffs[nodes],
                      wls.vandermonde(loc[:, None, :2], self.exps)[:, 0, :])
        loc[:, 2] = f
        return x0 + np.einsum("bij,bj->bi", Q, loc)

    # -- queries ------------------------------------------------------

    def _prepare(self, tri, xi, points):
        tri = np.atleast_1d(np.asarray(tri, dtype=np.int64))
        xi = np.atleast_2d(np.asarray(xi, float))
        if xi.shape != (len(tri), 3):
            raise ValueError("need one barycentric triple per triangle")
        nodes = self.mesh.face_nodes[tri]
        if points is None:
            points = np.einsum("bj,bji->bi", xi, self.mesh.vertices[self.mesh.triangles[tri]])
        return tri, xi, nodes, np.atleast_2d(np.asarray(points, float))

    def project_walf(self, tri, xi, points=None):
        tri, xi, nodes, points = self._prepare(tri, xi, points)
        out = np.zeros_like(points)
        for j in range(3):
            out += xi[:, j:j + 1] * self.lift_with_vertex_fit(nodes[:, j], points)
        return out

    def project_cmf(self, tri, xi, points=None):
        tri, xi, nodes, points = self._prepare(tri, xi, points)
        m = np.einsum("bj,bji->bi", xi, self.normals[nodes])
        axes = frame_axes(m)
        h = self.mesh.node_edge_length[nodes].mean(axis=1)
        members = []
        for k in range(len(tri)):
            use = nodes[k][xi[k] > 0]
            members.append(self.union_stencil(use if len(use) else nodes[k]))
        c = self.fit_batch(points, axes, members, h, interpolatory=False)
        return points + c[:, :1] * axes[:, :, 2]

    def project(self, tri, xi, points=None):
        if self.cfg.averaging == "walf":
            return self.project_walf(tri, xi, points)
        return self.project_cmf(tri, xi, points)


def project_point_cmf(mesh: TriMesh, tri: int, bary, cfg: MethodConfig, normals=None, reconstructor=None):
    rec = reconstructor or SurfaceReconstructor(mesh, cfg, normals)
    return rec.project_cmf([tri], [bary])[0]


def project_point_walf(mesh: TriMesh, tri: int, bary, cfg: MethodConfig, normals=None, reconstructor=None):
    rec = reconstructor or SurfaceReconstructor(mesh, cfg, normals)
    return rec.project_walf([tri], [bary])[0]
