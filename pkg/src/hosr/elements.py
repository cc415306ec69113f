"""Degree-p parametric triangles and G0 high-order meshes.

Reference triangle: corners (0,0), (1,0), (0,1) with natural coordinates
``(xi, eta)`` and barycentrics ``(1 - xi - eta, xi, eta)``.  Node sets are
ordered corners, then edges 0->1, 1->2, 2->0 (each walked from its first
corner), then interior nodes.

High-order meshes are built level by level.  Each element follows a chain
of intermediate degrees (e.g. 6 <- 4 <- 2 <- 1 for iterative feature-aware
placement); at every level the nodes of the finer element are interpolated
from the coarser one and projected, feature-edge nodes onto the feature
curve and all others onto the surface.  Edge nodes are stored once per mesh
edge, so neighbouring elements share them exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import wls
from .errors import ConfigurationError, NodeSetError
from .mesh import TriMesh

STRATEGIES = ("nonfap", "fap", "ifap")

_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def natural_to_barycentric(xi) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(xi, float))
    return np.stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]], axis=1)


# ----------------------------------------------------------------------
# node sets and shape functions
# ----------------------------------------------------------------------


class NodeSet:
    """Natural coordinates of the nodes of a degree-p triangle."""

    def __init__(self, degree: int, natural_coords, family: str = "equispaced"):
        if degree < 1:
            raise NodeSetError("degree must be >= 1")
        self.degree = int(degree)
        self.family = family
        pts = np.asarray(natural_coords, float)
        n = wls.basis_size(degree)
        if pts.shape != (n, 2):
            raise NodeSetError(f"degree {degree} needs {n} nodes, got {len(pts)}")
        self.natural_coords, self.edge_params = _canonical_order(pts, degree)

    @property
    def count(self) -> int:
        return len(self.natural_coords)

    @property
    def n_interior(self) -> int:
        return self.count - 3 * self.degree

    @property
    def interior_coords(self) -> np.ndarray:
        return self.natural_coords[3 * self.degree:]

    def edge_slice(self, k: int) -> slice:
        return slice(3 + k * (self.degree - 1), 3 + (k + 1) * (self.degree - 1))

    @cached_property
    def _inverse(self) -> np.ndarray:
        exps = wls.monomial_exponents(self.degree)
        V = wls.vandermonde(_centered(self.natural_coords), exps)
        cond = np.linalg.cond(V)
        if not np.isfinite(cond) or cond > 1e12:
            raise NodeSetError(f"node Vandermonde is ill-conditioned (cond {cond:.3g})")
        return np.linalg.inv(V)

    def __repr__(self):
        return f"NodeSet(degree={self.degree}, family={self.family!r})"


def _canonical_order(pts, p, tol=1e-10):
    lam = natural_to_barycentric(pts)
    if np.any(lam < -tol):
        raise NodeSetError("node outside the reference triangle")
    on_edge = lam < tol  # on_edge[:, c] is True on the edge opposite corner c
    corners = []
    for c in range(3):
        hit = np.flatnonzero(np.abs(lam[:, c] - 1.0) < tol)
        if len(hit) != 1:
            raise NodeSetError(f"reference corner {c} missing or duplicated")
        corners.append(hit[0])
    used = set(corners)
    edges = []
    params = []
    for k in range(3):
        a, b = k, (k + 1) % 3
        opposite = 3 - a - b
        idx = [i for i in np.flatnonzero(on_edge[:, opposite]) if i not in used]
        if len(idx) != p - 1:
            raise NodeSetError(f"edge {k} has {len(idx)} interior nodes, expected {p - 1}")
        t = lam[idx, b]
        order = np.argsort(t)
        edges.append(np.asarray(idx)[order])
        params.append(t[order])
        used.update(idx)
    params = np.array(params)
    if p > 1:
        if np.max(np.abs(params - params[0])) > tol:
            raise NodeSetError("edge node parameters differ between edges")
        if np.max(np.abs(params[0] + params[0][::-1] - 1.0)) > tol:
            raise NodeSetError("edge node parameters are not symmetric")
    interior = [i for i in range(len(pts)) if i not in used]
    order = np.concatenate([corners] + edges + [np.asarray(interior, dtype=int)]).astype(int)
    out = pts[order].copy()
    out[:3] = _CORNERS
    return out, (params[0] if p > 1 else np.zeros(0))


def node_natural_coords(degree: int, family: str = "equispaced", path=None) -> NodeSet:
    """Equispaced nodes ``(j/p, k/p)``, or a table read from ``path``."""
    if family == "equispaced":
        p = degree
        pts = [(j / p, k / p) for k in range(p + 1) for j in range(p + 1 - k)]
        return NodeSet(degree, pts, "equispaced")
    if family == "table":
        if path is None:
            raise NodeSetError("table family needs a node-table file")
        ns = load_node_table(path)
        if ns.degree != degree:
            raise NodeSetError(f"table is for degree {ns.degree}, not {degree}")
        return ns
    raise NodeSetError(f"unknown node family {family!r}")


def load_node_table(path) -> NodeSet:
    """Read ``degree n`` then n lines ``xi eta``; checks symmetry."""
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        degree, n = int(rows[0][0]), int(rows[0][1])
        pts = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    except (IndexError, ValueError) as exc:
        raise NodeSetError(f"{path}: malformed node table") from exc
    if len(pts) != n:
        raise NodeSetError(f"{path}: header says {n} nodes, found {len(pts)}")
    ns = NodeSet(degree, pts, "table")
    lam = natural_to_barycentric(ns.natural_coords)
    rotated = lam[:, [1, 2, 0]]
    d = np.linalg.norm(lam[:, None, :] - rotated[None, :, :], axis=2).min(axis=0)
    if d.max() > 1e-10:
        raise NodeSetError(f"{path}: node set is not rotationally symmetric")
    return ns


# Monomials about the centroid, doubled, keep the node Vandermonde well
# conditioned (about 9e3 instead of 5e5 at degree 6).
_CENTER_SCALE = 2.0


def _centered(xi):
    return _CENTER_SCALE * (np.asarray(xi, float) - 1.0 / 3.0)


def lagrange_shape(node_set: NodeSet, xi):
    """Shape function values ``(m, n)`` and gradients ``(m, n, 2)`` at ``xi``."""
    z = _centered(np.atleast_2d(np.asarray(xi, float)))
    exps = wls.monomial_exponents(node_set.degree)
    C = node_set._inverse
    N = wls.vandermonde(z, exps) @ C
    dN = np.stack([_CENTER_SCALE * (wls.vandermonde_derivative(z, exps, a) @ C) for a in range(2)], axis=-1)
    return N, dN


def lagrange_1d(params, t) -> np.ndarray:
    """1-D Lagrange basis on nodes ``params`` evaluated at ``t``: ``(len(t), len(params))``."""
    params = np.asarray(params, float)
    t = np.atleast_1d(np.asarray(t, float))
    out = np.ones((len(t), len(params)))
    for j, pj in enumerate(params):
        for k, pk in enumerate(params):
            if k != j:
                out[:, j] *= (t - pk) / (pj - pk)
    return out


@dataclass
class ParametricElement:
    degree: int
    node_set: NodeSet
    node_positions: np.ndarray

    def evaluate(self, xi):
        return evaluate_element(self, xi)


def evaluate_element(elem: ParametricElement, xi):
    """Positions ``(m, 3)`` and Jacobians ``(m, 3, 2)`` at natural coordinates ``xi``."""
    N, dN = lagrange_shape(elem.node_set, xi)
    X = np.asarray(elem.node_positions, float)
    return N @ X, np.einsum("mna,ni->mia", dN, X)


def inverse_area_measure(elem: ParametricElement, xi) -> np.ndarray:
    """``1 / sqrt(det(J^T J))``; infinite (with a warning) where J is singular."""
    _, J = evaluate_element(elem, xi)
    G = np.einsum("mia,mib->mab", J, J)
    det = G[:, 0, 0] * G[:, 1, 1] - G[:, 0, 1] * G[:, 1, 0]
    scale = np.einsum("mia,mia->m", J, J) ** 2
    singular = det <= 1e-28 * np.maximum(scale, 1e-300)
    out = np.empty(len(det))
    out[~singular] = 1.0 / np.sqrt(det[~singular])
    out[singular] = np.inf
    if np.any(singular):
        warnings.warn("singular parameterization: Jacobian is rank deficient", RuntimeWarning, stacklevel=2)
    return out


def lattice_points(degree: int) -> np.ndarray:
    """Equispaced natural coordinates of a degree-``degree`` lattice (21 points for 5)."""
    return np.array([(j / degree, k / degree) for k in range(degree + 1) for j in range(degree + 1 - k)])


# ----------------------------------------------------------------------
# intermediate degrees
# ----------------------------------------------------------------------


def ifa_intermediate_degree(p: int) -> int:
    """``2 ** (ceil(log2 p) - 1)``."""
    if p < 2:
        raise ValueError("degree must be >= 2")
    return 2 ** (math.ceil(math.log2(p)) - 1)


def ifa_chain(p: int, strategy: str) -> list:
    """Intermediate degrees used below degree ``p``, finest first, ending at 1."""
    strategy = strategy.lower()
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    if p <= 1:
        return []
    if strategy == "nonfap" or p == 2:
        return [1]
    if strategy == "fap":
        return [2, 1]
    chain = []
    q = p
    while q > 1:
        q = ifa_intermediate_degree(q)
        chain.append(q)
    return chain


def default_strategy(p: int) -> str:
    return "ifap" if p >= 4 else "fap"


# ----------------------------------------------------------------------
# projectors
# ----------------------------------------------------------------------


class OracleProjector:
    """Projection onto the exact surface (per patch side) and feature curve."""

    def __init__(self, surface, mesh: TriMesh):
        self.surface = surface
        self.mesh = mesh
        self._caps = surface.patch_caps(mesh)

    def surface_points(self, tri, bary, points):
        caps = self._caps[self.mesh.face_patch[np.asarray(tri)]]
        return self.surface.project_to_surface(points, caps)

    def feature_points(self, a, b, t, points):
        return self.surface.project_to_feature(points)


class ReconstructionProjector:
    """Projection through the configured surface and curve reconstructions."""

    def __init__(self, mesh: TriMesh, cfg, surface=None, normals=None, tangents=None, surface_recon=None):
        from .curve import CurveReconstructor, chains_from_mesh
        from .surface import SurfaceReconstructor

        self.mesh = mesh
        self.cfg = cfg
        self.surface_recon = surface_recon or SurfaceReconstructor(mesh, cfg, normals, surface)
        self.curve_recon = None
        if mesh.feature:
            if tangents is None and surface is not None and cfg.normals_source in ("auto", "oracle") \
                    and hasattr(surface, "feature_tangents"):
                tangents = surface.feature_tangents(mesh)
            chains = chains_from_mesh(mesh, tangents)
            self.curve_recon = CurveReconstructor(chains, cfg.degree, cfg.method, cfg.interpolatory,
                                                  cfg.cond_limit, cfg.weights)

    def surface_points(self, tri, bary, points):
        return self.surface_recon.project(tri, bary, points)

    def feature_points(self, a, b, t, points):
        if self.curve_recon is None:
            raise ConfigurationError("feature edge without a curve reconstruction")
        out = np.empty_like(points)
        rec = self.curve_recon
        loc = [rec.locate_edge(int(x), int(y)) for x, y in zip(a, b)]
        chain = np.array([c for c, _, _ in loc])
        edge = np.array([e for _, e, _ in loc])
        s = np.where([r for _, _, r in loc], 1.0 - t, t)
        for c in np.unique(chain):
            sel = chain == c
            out[sel] = rec.project(int(c), edge[sel], s[sel], points[sel])
        return out


# ----------------------------------------------------------------------
# high-order mesh
# ----------------------------------------------------------------------


@dataclass
class HighOrderMesh:
    base: TriMesh
    degree: int
    node_set: NodeSet
    nodes: np.ndarray
    face_node_ids: np.ndarray  # (F, n) in node-set order
    built_faces: np.ndarray
    strategy: str = "ifap"
    feature_faces: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def element(self, f: int) -> ParametricElement:
        return ParametricElement(self.degree, self.node_set, self.nodes[self.face_node_ids[f]])

    def evaluate(self, faces, xi):
        """Positions of each face in ``faces`` at the natural points ``xi`` -> ``(F, m, 3)``."""
        N, _ = lagrange_shape(self.node_set, xi)
        X = self.nodes[self.face_node_ids[np.asarray(faces)]]
        return np.einsum("mn,fni->fmi", N, X)

    def to_dict(self) -> dict:
        p = self.degree
        faces = []
        for f in self.built_faces:
            ids = self.face_node_ids[f]
            faces.append({
                "corner_ids": [int(i) for i in ids[:3]],
                "edge_node_ids": [[int(i) for i in ids[self.node_set.edge_slice(k)]] for k in range(3)],
                "face_node_ids": [int(i) for i in ids[3 * p:]],
            })
        return {
            "degree": p,
            "strategy": self.strategy,
            "vertices": self.base.vertices.tolist(),
            "faces": faces,
            "nodes": self.nodes.tolist(),
            "feature_edges": sorted([int(a), int(b)] for a, b in self.base.feature.feature_edges),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")


class _Builder:
    def __init__(self, mesh: TriMesh, p: int, projector, strategy: str, node_family="equispaced", node_table=None):
        self.mesh = mesh
        self.p = p
        self.projector = projector
        self.strategy = strategy.lower()
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {strategy!r}")
        self.family = node_family
        self.table = node_table
        self._sets = {}

    def node_set(self, d: int) -> NodeSet:
        if d not in self._sets:
            if d == self.p and self.family == "table":
                self._sets[d] = node_natural_coords(d, "table", self.table)
            else:
                self._sets[d] = node_natural_coords(d)
        return self._sets[d]

    def run(self, faces):
        mesh, p = self.mesh, self.p
        faces = np.unique(np.asarray(faces, dtype=np.int64))
        fe = mesh.face_edges
        feat_face = np.any(mesh.is_feature_edge[fe], axis=1)
        special = faces[feat_face[faces]]
        plain = faces[~feat_face[faces]]
        chain = [p] + ifa_chain(p, self.strategy)
        special_edges = np.unique(fe[special].ravel()) if len(special) else np.zeros(0, np.int64)
        all_edges = np.unique(fe[faces].ravel())
        plain_edges = np.setdiff1d(all_edges, special_edges)

        # degree-1 data
        edge_store = {1: {}}
        face_store = {1: {}}
        E = mesh.edges
        levels = sorted(set(chain))
        for d in levels:
            edge_store.setdefault(d, {})
            face_store.setdefault(d, {})
        lin_edges = np.stack([mesh.vertices[E[:, 0]], mesh.vertices[E[:, 1]]], axis=1)
        # special elements climb the whole chain
        for q, d in zip(levels[:-1], levels[1:]):
            self._edge_step(special_edges, q, d, edge_store, lin_edges)
            self._face_step(special, q, d, edge_store, face_store)
        # plain elements go straight from the linear triangle
        if p > 1:
            self._edge_step(plain_edges, 1, p, edge_store, lin_edges)
            self._face_step(plain, 1, p, edge_store, face_store)
        return self._assemble(faces, special, edge_store, face_store)

    # -- one refinement level -----------------------------------------

    def _edge_nodes(self, store, lin_edges, q, edges):
        if q == 1:
            return lin_edges[edges]
        return np.stack([store[q][int(e)] for e in edges])

    def _edge_step(self, edges, q, d, store, lin_edges):
        if len(edges) == 0 or d == 1:
            return
        mesh = self.mesh
        src = self._edge_nodes(store, lin_edges, q, edges)  # (B, q+1, 3)
        tq = np.concatenate([[0.0], self.node_set(q).edge_params, [1.0]]) if q > 1 else np.array([0.0, 1.0])
        td = self.node_set(d).edge_params
        L = lagrange_1d(tq, td)  # (d-1, q+1)
        P = np.einsum("kj,bji->bki", L, src)
        B, k = len(edges), len(td)
        a = mesh.edges[edges, 0]
        b = mesh.edges[edges, 1]
        t = np.tile(td, B)
        pts = P.reshape(-1, 3)
        out = np.empty_like(pts)
        feat = np.repeat(mesh.is_feature_edge[edges], k)
        if np.any(feat):
            out[feat] = self.projector.feature_points(np.repeat(a, k)[feat], np.repeat(b, k)[feat], t[feat], pts[feat])
        if np.any(~feat):
            host = mesh.edge_faces[edges, 0]
            tri = mesh.triangles[host]
            bary = np.zeros((B, 3))
            bary_t = np.zeros((B * k, 3))
            ia = np.argmax(tri == a[:, None], axis=1)
            ib = np.argmax(tri == b[:, None], axis=1)
            rows = np.arange(B * k)
            bary_t[rows, np.repeat(ia, k)] = 1.0 - t
            bary_t[rows, np.repeat(ib, k)] = t
            del bary
            sel = ~feat
            out[sel] = self.projector.surface_points(np.repeat(host, k)[sel], bary_t[sel], pts[sel])
        out = out.reshape(B, k, 3)
        ends = self.mesh.vertices
        for i, e in enumerate(edges):
            store[d][int(e)] = np.concatenate([ends[a[i]][None], out[i], ends[b[i]][None]])

    def _element_nodes(self, f, d, edge_store, face_store):
        """Full degree-d node array of face f (needs edges and interior at degree d)."""
        mesh = self.mesh
        ns = self.node_set(d)
        tri = mesh.triangles[f]
        X = np.empty((ns.count, 3))
        X[:3] = mesh.vertices[tri]
        if d == 1:
            return X
        for k in range(3):
            u, v = tri[k], tri[(k + 1) % 3]
            e = mesh.edge_index(u, v)
            nodes = edge_store[d][e][1:-1]
            if mesh.edges[e, 0] != u:
                nodes = nodes[::-1]
            X[ns.edge_slice(k)] = nodes
        X[3 * d:] = face_store[d][int(f)]
        return X

    def _face_step(self, faces, q, d, edge_store, face_store):
        if len(faces) == 0 or d == 1:
            return
        nsd = self.node_set(d)
        if nsd.n_interior == 0:
            for f in faces:
                face_store[d][int(f)] = np.zeros((0, 3))
            return
        Xq = np.stack([self._element_nodes(f, q, edge_store, face_store) for f in faces])
        N, _ = lagrange_shape(self.node_set(q), nsd.interior_coords)
        P = np.einsum("kn,fni->fki", N, Xq)
        k = nsd.n_interior
        bary = np.tile(natural_to_barycentric(nsd.interior_coords), (len(faces), 1))
        out = self.projector.surface_points(np.repeat(faces, k), bary, P.reshape(-1, 3)).reshape(len(faces), k, 3)
        for i, f in enumerate(faces):
            face_store[d][int(f)] = out[i]

    # -- final numbering -----------------------------------------------

    def _assemble(self, faces, special, edge_store, face_store):
        mesh, p = self.mesh, self.p
        ns = self.node_set(p)
        V, nE, nF = mesh.n_vertices, mesh.n_edges, mesh.n_faces
        ne, ni = p - 1, ns.n_interior
        nodes = np.full((V + nE * ne + nF * ni, 3), np.nan)
        nodes[:V] = mesh.vertices
        ids = np.full((nF, ns.count), -1, dtype=np.int64)
        for e, X in edge_store[p].items():
            nodes[V + e * ne: V + (e + 1) * ne] = X[1:-1]
        base_f = V + nE * ne
        for f, X in face_store[p].items():
            nodes[base_f + f * ni: base_f + (f + 1) * ni] = X
        for f in faces:
            tri = mesh.triangles[f]
            ids[f, :3] = tri
            for k in range(3):
                u, v = tri[k], tri[(k + 1) % 3]
                e = mesh.edge_index(u, v)
                run = V + e * ne + np.arange(ne)
                ids[f, ns.edge_slice(k)] = run if mesh.edges[e, 0] == u else run[::-1]
            ids[f, 3 * p:] = base_f + f * ni + np.arange(ni)
        return HighOrderMesh(mesh, p, ns, nodes, ids, faces, self.strategy, special)


def build_high_order_mesh(mesh: TriMesh, p: int, cfg=None, strategy: str | None = None, *, projector=None,
                          surface=None, faces=None, node_family: str = "equispaced", node_table=None,
                          normals=None) -> HighOrderMesh:
    """Place the nodes of every (or the selected) degree-p element.

    ``projector`` defaults to the configured reconstruction; pass an
    ``OracleProjector`` to project onto the exact geometry instead.
    """
    if p < 1:
        raise ConfigurationError("degree must be >= 1")
    strategy = strategy or default_strategy(p)
    if projector is None:
        if cfg is None:
            raise ConfigurationError("need a method configuration or a projector")
        projector = ReconstructionProjector(mesh, cfg, surface, normals)
    b = _Builder(mesh, p, projector, strategy, node_family, node_table)
    return b.run(np.arange(mesh.n_faces) if faces is None else faces)


def feature_incident_faces(mesh: TriMesh) -> np.ndarray:
    return np.flatnonzero(np.any(mesh.is_feature_edge[mesh.face_edges], axis=1))


def build_feature_aware_element(mesh: TriMesh, tri: int, p: int, projector, strategy: str) -> ParametricElement:
    """One element built with the given intermediate-node strategy."""
    hom = _Builder(mesh, p, projector, strategy).run([tri])
    return hom.element(tri)
