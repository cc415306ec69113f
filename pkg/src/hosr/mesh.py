"""Triangle mesh container with half-edge connectivity and feature graph.

Feature edges split the surface into smooth *patches* (connected face sets
that do not cross a feature edge).  A vertex lying on a feature belongs to
several patches; each ``(vertex, patch)`` pair is a *node*, and all stencil
queries work on nodes so that neighbourhoods never cross a feature curve.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GeometryError, ParseError, TopologyError


def edge_key(i, j):
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class FeatureGraph:
    """Tagged feature edges and corners; chains are derived on demand."""

    feature_edges: frozenset = field(default_factory=frozenset)
    corners: frozenset = field(default_factory=frozenset)

    @classmethod
    def from_iterables(cls, edges=(), corners=()):
        return cls(frozenset(edge_key(*e) for e in edges), frozenset(int(c) for c in corners))

    def __bool__(self):
        return bool(self.feature_edges)

    def adjacency(self):
        adj = {}
        for a, b in sorted(self.feature_edges):
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return adj

    def chain_breaks(self):
        """Vertices where chains are cut: corners and non-degree-2 vertices."""
        adj = self.adjacency()
        return set(self.corners) | {v for v, nb in adj.items() if len(nb) != 2}

    @cached_property
    def chains(self):
        """Maximal simple paths (or cycles) of feature edges between breaks.

        Each chain is ``(vertices, closed)``; a closed chain lists every
        vertex once, with the edge back to the first vertex implied.
        """
        adj = self.adjacency()
        breaks = self.chain_breaks()
        used = set()
        chains = []
        for start in sorted(breaks):
            for nb in sorted(adj.get(start, ())):
                if edge_key(start, nb) in used:
                    continue
                path = [start]
                prev, cur = start, nb
                used.add(edge_key(prev, cur))
                while cur not in breaks:
                    path.append(cur)
                    nxt = [w for w in sorted(adj[cur]) if edge_key(cur, w) not in used]
                    if not nxt:
                        break
                    prev, cur = cur, nxt[0]
                    used.add(edge_key(prev, cur))
                path.append(cur)
                chains.append((path, False))
        # remaining edges form corner-free cycles
        for a, b in sorted(self.feature_edges):
            if edge_key(a, b) in used:
                continue
            path = [a]
            prev, cur = a, b
            used.add(edge_key(a, b))
            while cur != a:
                path.append(cur)
                nxt = [w for w in sorted(adj[cur]) if edge_key(cur, w) not in used]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                used.add(edge_key(prev, cur))
            chains.append((path, cur == a))
        return chains


@dataclass
class Stencil:
    center: object
    ring: float
    members: np.ndarray
    patch: int = 0
    nodes: np.ndarray | None = None

    def __len__(self):
        return len(self.members)


class TriMesh:
    """Immutable triangle mesh.

    Parameters
    ----------
    vertices : (V, 3) array_like
    triangles : (F, 3) array_like of vertex indices, counterclockwise.
    vertex_normals : optional (V, 3) unit normals.
    feature : optional FeatureGraph; boundary edges are always added.
    """

    def __init__(self, vertices, triangles, vertex_normals=None, feature=None):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        nv = len(self.vertices)
        t = self.triangles
        if t.size and (t.min() < 0 or t.max() >= nv):
            raise TopologyError("triangle references an out-of-range vertex")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise TopologyError("triangle with repeated vertex")
        if vertex_normals is not None:
            n = np.array(vertex_normals, dtype=float).reshape(-1, 3)
            if len(n) != nv:
                raise ValueError("vertex_normals must have one entry per vertex")
            norms = np.linalg.norm(n, axis=1)
            if np.any(norms == 0):
                raise GeometryError("zero vertex normal")
            n = n / norms[:, None]
            n.setflags(write=False)
            vertex_normals = n
        self.vertex_normals = vertex_normals
        self._build_connectivity()
        feature = feature or FeatureGraph()
        for e in feature.feature_edges:
            if e not in self.edge_lookup:
                raise TopologyError(f"feature edge {e} is not a mesh edge")
        boundary = {tuple(int(x) for x in self.edges[e]) for e in np.flatnonzero(self.edge_face_count == 1)}
        self.feature = FeatureGraph(frozenset(feature.feature_edges) | frozenset(boundary), feature.corners)

    # ------------------------------------------------------------------
    # connectivity
    # ------------------------------------------------------------------

    def _build_connectivity(self):
        t = self.triangles
        nf = len(t)
        nv = len(self.vertices)
        origin = t.reshape(-1)
        dest = t[:, [1, 2, 0]].reshape(-1)
        lo = np.minimum(origin, dest)
        hi = np.maximum(origin, dest)
        keys = lo * nv + hi
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            bad = uniq[counts > 2][0]
            raise TopologyError(f"non-manifold edge ({bad // nv}, {bad % nv}) has {counts.max()} incident faces")
        self.edges = np.stack([uniq // nv, uniq % nv], axis=1)
        self.edge_face_count = counts
        he_edge = inverse.reshape(-1)
        self.face_edges = he_edge.reshape(nf, 3)
        # half-edge arrays: half-edge 3f+c runs t[f,c] -> t[f,(c+1)%3]
        nhe = 3 * nf
        self.he_origin = origin
        self.he_next = (np.arange(nhe) // 3) * 3 + (np.arange(nhe) % 3 + 1) % 3
        twin = np.full(nhe, -1, dtype=np.int64)
        order = np.argsort(he_edge, kind="stable")
        se = he_edge[order]
        pair = np.flatnonzero(se[1:] == se[:-1])
        a, b = order[pair], order[pair + 1]
        if np.any(origin[a] == origin[b]):
            raise TopologyError("inconsistent triangle orientation across an edge")
        twin[a] = b
        twin[b] = a
        self.he_twin = twin
        self.he_edge = he_edge
        ef = np.full((len(uniq), 2), -1, dtype=np.int64)
        faces_of_he = np.arange(nhe) // 3
        first = np.ones(nhe, dtype=bool)
        first[order[pair + 1]] = False
        ef[he_edge[first], 0] = faces_of_he[first]
        ef[he_edge[~first], 1] = faces_of_he[~first]
        self.edge_faces = ef
        self.edge_lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(self.edges)}
        # vertex -> incident faces (CSR)
        vf = sp.csr_matrix((np.ones(3 * nf, dtype=np.int8), (t.reshape(-1), np.repeat(np.arange(nf), 3))),
                           shape=(nv, nf))
        self._vf_indptr = vf.indptr
        self._vf_indices = vf.indices

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def vertex_faces(self, v):
        return self._vf_indices[self._vf_indptr[v]:self._vf_indptr[v + 1]]

    def edge_index(self, i, j):
        return self.edge_lookup[edge_key(i, j)]

    @cached_property
    def is_feature_edge(self):
        mask = np.zeros(self.n_edges, dtype=bool)
        for e in self.feature.feature_edges:
            mask[self.edge_lookup[e]] = True
        return mask

    @cached_property
    def face_normals(self):
        """Unnormalized face normals (length = twice the area)."""
        v = self.vertices[self.triangles]
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    @cached_property
    def unit_face_normals(self):
        n = self.face_normals
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def face_patch(self):
        """Patch id of every face (components across non-feature edges)."""
        inner = (self.edge_face_count == 2) & ~self.is_feature_edge
        f = self.edge_faces[inner]
        g = sp.coo_matrix((np.ones(len(f)), (f[:, 0], f[:, 1])), shape=(self.n_faces, self.n_faces))
        _, labels = connected_components(g, directed=False)
        return labels

    @cached_property
    def _nodes(self):
        t = self.triangles
        pv = np.stack([t.reshape(-1), np.repeat(self.face_patch, 3)], axis=1)
        keys = pv[:, 0] * (self.face_patch.max() + 1 if self.n_faces else 1) + pv[:, 1]
        uniq, inv = np.unique(keys, return_inverse=True)
        first = np.zeros(len(uniq), dtype=np.int64)
        first[inv[::-1]] = np.arange(len(inv))[::-1]
        node_vertex = pv[first, 0]
        node_patch = pv[first, 1]
        return node_vertex, node_patch, inv.reshape(-1, 3)

    @property
    def node_vertex(self):
        return self._nodes[0]

    @property
    def node_patch(self):
        return self._nodes[1]

    @property
    def face_nodes(self):
        return self._nodes[2]

    @property
    def n_nodes(self):
        return len(self.node_vertex)

    def node_of(self, v, patch):
        nodes = np.flatnonzero((self.node_vertex == v) & (self.node_patch == patch))
        if len(nodes) == 0:
            raise KeyError((v, patch))
        return int(nodes[0])

    def vertex_patches(self, v):
        return sorted({int(self.face_patch[f]) for f in self.vertex_faces(v)})

    def face_neighbors(self, f):
        """Faces sharing a non-feature edge with face ``f``."""
        out = []
        for e in self.face_edges[f]:
            if self.is_feature_edge[e]:
                continue
            for g in self.edge_faces[e]:
                if g >= 0 and g != f:
                    out.append(int(g))
        return out

    @cached_property
    def feature_vertices(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        for a, b in self.feature.feature_edges:
            mask[a] = mask[b] = True
        return mask

    def mean_edge_length(self):
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return float(np.linalg.norm(d, axis=1).mean())

    @cached_property
    def node_edge_length(self):
        """Mean length of the edges incident on each node's vertex."""
        d = np.linalg.norm(self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]], axis=1)
        tot = np.bincount(self.edges.ravel(), weights=np.repeat(d, 2), minlength=self.n_vertices)
        cnt = np.bincount(self.edges.ravel(), minlength=self.n_vertices)
        per_vertex = tot / np.maximum(cnt, 1)
        return per_vertex[self.node_vertex]

    def with_feature(self, feature):
        return TriMesh(self.vertices, self.triangles, self.vertex_normals, feature)

    def with_normals(self, normals):
        return TriMesh(self.vertices, self.triangles, normals, self.feature)

    # ------------------------------------------------------------------
    # bulk neighbourhoods
    # ------------------------------------------------------------------

    @cached_property
    def _node_face(self):
        fn = self.face_nodes
        nf = self.n_faces
        return sp.csr_matrix((np.ones(3 * nf), (fn.reshape(-1), np.repeat(np.arange(nf), 3))),
                             shape=(self.n_nodes, nf))

    @cached_property
    def _face_adjacency(self):
        inner = (self.edge_face_count == 2) & ~self.is_feature_edge
        f = self.edge_faces[inner]
        rows = np.concatenate([f[:, 0], f[:, 1], np.arange(self.n_faces)])
        cols = np.concatenate([f[:, 1], f[:, 0], np.arange(self.n_faces)])
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_faces, self.n_faces))

    def ring_levels(self, max_ring):
        """Half-ring level at which each node first enters every node's neighbourhood.

        Returns a sparse ``(N, N)`` matrix whose entry ``(i, j)`` is
        ``2 * ring`` (so 2 means ring 1, 3 means ring 1.5) and the diagonal
        holds a tiny placeholder for ring 0.
        """
        M = self._node_face
        A1 = (M @ M.T).tocsr()
        A1.data[:] = 1.0
        H = (M @ self._face_adjacency @ M.T).tocsr()
        H.data[:] = 1.0
        n = self.n_nodes
        R = {0: sp.identity(n, format="csr")}
        steps = int(round(2 * max_ring))
        for s in range(2, steps + 1):
            if s % 2 == 0:
                P = R[s - 2] @ A1
            else:
                P = R[s - 3] @ H
            P = P.tocsr()
            P.data[:] = 1.0
            R[s] = P
        level = sp.csr_matrix((n, n))
        covered = sp.csr_matrix((n, n))
        for s in sorted(R):
            new = R[s] - R[s].multiply(covered)
            new.eliminate_zeros()
            level = level + new * (s if s else 0.5)
            covered = ((covered + R[s]) > 0).astype(float)
        return level.tocsr()

    def node_stencils(self, initial_ring, enough, max_ring=8.0):
        """Adaptive stencils for every node.

        ``initial_ring`` is a ring size and ``enough(m)`` decides whether
        ``m`` members suffice; rings grow by 0.5 until it does (or until
        ``max_ring``).  Returns a list of Stencil with vertex members.
        """
        top = max_ring
        levels = self.ring_levels(top)
        out = []
        indptr, indices, data = levels.indptr, levels.indices, levels.data
        nv = self.node_vertex
        for i in range(self.n_nodes):
            cols = indices[indptr[i]:indptr[i + 1]]
            lev = data[indptr[i]:indptr[i + 1]]
            lev = np.where(lev == 0.5, 0, lev)
            order = np.lexsort((nv[cols], lev))
            cols, lev = cols[order], lev[order]
            ring = initial_ring
            while True:
                m = int(np.count_nonzero(lev <= 2 * ring))
                if enough(m) or ring >= top:
                    break
                ring += 0.5
            sel = cols[lev <= 2 * ring]
            out.append(Stencil(int(nv[i]), ring, nv[sel], int(self.node_patch[i]), sel))
        return out


# ----------------------------------------------------------------------
# single-vertex queries
# ----------------------------------------------------------------------


def _resolve_patch(mesh, v, patch):
    patches = mesh.vertex_patches(v)
    if patch is None:
        if len(patches) != 1:
            raise ValueError(f"vertex {v} lies on {len(patches)} patches; choose one")
        return patches[0]
    if patch not in patches:
        raise ValueError(f"vertex {v} is not on patch {patch}")
    return patch


def k_ring_vertices(mesh: TriMesh, v: int, ring: float, patch=None) -> Stencil:
    """Vertices of the k-ring (or k.5-ring) neighbourhood of ``v`` within one patch."""
    if ring < 1 or abs(2 * ring - round(2 * ring)) > 1e-12:
        raise ValueError("ring must be 1, 1.5, 2, ...")
    patch = _resolve_patch(mesh, v, patch)
    fp = mesh.face_patch

    def faces_of(vertices):
        out = set()
        for w in vertices:
            out.update(int(f) for f in mesh.vertex_faces(w) if fp[f] == patch)
        return out

    def verts_of(faces):
        return {int(x) for f in faces for x in mesh.triangles[f]}

    order = [int(v)]
    seen = {int(v)}
    current = {int(v)}  # k-ring for integer k, starting at k=0
    k = 0.0
    while k + 1 <= ring + 1e-12:
        if k + 1.5 <= ring + 1e-12 and abs(ring - (k + 1.5)) < 1e-12:
            f1 = faces_of(current)
            f15 = set(f1)
            for f in f1:
                f15.update(mesh.face_neighbors(f))
            layer = verts_of(f1)
            new1 = sorted(layer - seen)
            order += new1
            seen |= set(new1)
            new15 = sorted(verts_of(f15) - seen)
            order += new15
            seen |= set(new15)
            break
        nxt = verts_of(faces_of(current))
        new = sorted(nxt - seen)
        order += new
        seen |= set(new)
        current = nxt
        k += 1
    return Stencil(int(v), float(ring), np.array(order, dtype=np.int64), patch)


def barycentric_coordinates(mesh: TriMesh, tri: int, x) -> np.ndarray:
    """Barycentric coordinates of the projection of ``x`` onto the plane of ``tri``."""
    a, b, c = mesh.vertices[mesh.triangles[tri]]
    return barycentric_in_triangle(a, b, c, x)


def barycentric_in_triangle(a, b, c, x):
    e1 = b - a
    e2 = c - a
    d = np.asarray(x, float) - a
    g11, g12, g22 = e1 @ e1, e1 @ e2, e2 @ e2
    det = g11 * g22 - g12 * g12
    if det <= 1e-300 or det <= 1e-14 * g11 * g22:
        raise GeometryError("degenerate triangle")
    r1, r2 = e1 @ d, e2 @ d
    l2 = (g22 * r1 - g12 * r2) / det
    l3 = (g11 * r2 - g12 * r1) / det
    return np.array([1.0 - l2 - l3, l2, l3])


# ----------------------------------------------------------------------
# features
# ----------------------------------------------------------------------


def detect_features(mesh: TriMesh, dihedral_deg: float = 30.0) -> FeatureGraph:
    """Tag edges whose incident face normals differ by more than ``dihedral_deg``.

    Boundary edges are always tagged.  Corners are chain endpoints, vertices
    with three or more feature edges, and chain vertices where the polyline
    turns by more than the same angle.
    """
    if not 0 < dihedral_deg < 180:
        raise ValueError("dihedral_deg must lie in (0, 180)")
    n = mesh.unit_face_normals
    inner = mesh.edge_face_count == 2
    ef = mesh.edge_faces
    cosang = np.ones(mesh.n_edges)
    cosang[inner] = np.einsum("ij,ij->i", n[ef[inner, 0]], n[ef[inner, 1]])
    sharp = inner & (cosang < math.cos(math.radians(dihedral_deg)))
    tagged = sharp | ~inner
    edges = [tuple(int(x) for x in mesh.edges[e]) for e in np.flatnonzero(tagged)]
    g = FeatureGraph.from_iterables(edges)
    corners = set()
    cos_turn = math.cos(math.radians(dihedral_deg))
    for v, nb in g.adjacency().items():
        if len(nb) != 2:
            corners.add(v)
            continue
        d1 = mesh.vertices[v] - mesh.vertices[nb[0]]
        d2 = mesh.vertices[nb[1]] - mesh.vertices[v]
        c = d1 @ d2 / (np.linalg.norm(d1) * np.linalg.norm(d2))
        if c < cos_turn:
            corners.add(v)
    return FeatureGraph(g.feature_edges, frozenset(corners))


# ----------------------------------------------------------------------
# refinement
# ----------------------------------------------------------------------


def uniform_refine(mesh: TriMesh, projector=None) -> TriMesh:
    """Split every triangle 1->4 at edge midpoints.

    ``projector`` is either a callable mapping an ``(E, 3)`` array of
    midpoints to projected points, or an object with a
    ``project_new_vertices(points, on_feature, side_points)`` method that
    also receives which midpoints lie on feature edges and a point inside an
    incident face (to pick a side of a sharp feature).
    """
    V = mesh.n_vertices
    e = mesh.edges
    mid = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    feat = mesh.is_feature_edge
    if projector is not None:
        if hasattr(projector, "project_new_vertices"):
            f0 = mesh.edge_faces[:, 0]
            side = mesh.vertices[mesh.triangles[f0]].mean(axis=1)
            mid = projector.project_new_vertices(mid, feat, side)
        else:
            mid = np.asarray(projector(mid), float)
    verts = np.vstack([mesh.vertices, mid])
    t = mesh.triangles
    fe = mesh.face_edges + V  # midpoint of edge (t[c], t[c+1])
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    mab, mbc, mca = fe[:, 0], fe[:, 1], fe[:, 2]
    tris = np.stack([
        np.stack([a, mab, mca], axis=1),
        np.stack([mab, b, mbc], axis=1),
        np.stack([mca, mbc, c], axis=1),
        np.stack([mab, mbc, mca], axis=1),
    ], axis=1).reshape(-1, 3)
    new_edges = []
    for k in np.flatnonzero(feat):
        i, j = mesh.edges[k]
        m = V + k
        new_edges += [(i, m), (m, j)]
    feature = FeatureGraph.from_iterables(new_edges, mesh.feature.corners)
    return TriMesh(verts, tris, None, feature)


# ----------------------------------------------------------------------
# I/O
# ----------------------------------------------------------------------


def _parse_index(tok, n, path, lineno):
    s = tok.split("/")[0]
    try:
        i = int(s)
    except ValueError:
        raise ParseError(f"bad index {tok!r}", lineno, path) from None
    if i < 0:
        i = n + i + 1
    return i - 1


def read_feature_tags(path):
    """Parse a tag file: ``e i j`` (or ``i j``) for edges, ``c i`` for corners; 1-based."""
    edges, corners = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "c" and len(tok) == 2:
                    corners.append(int(tok[1]) - 1)
                elif tok[0] == "e" and len(tok) == 3:
                    edges.append((int(tok[1]) - 1, int(tok[2]) - 1))
                elif len(tok) == 2:
                    edges.append((int(tok[0]) - 1, int(tok[1]) - 1))
                else:
                    raise ValueError
            except ValueError:
                raise ParseError(f"malformed tag record {line!r}", lineno, path) from None
    return FeatureGraph.from_iterables(edges, corners)


def write_feature_tags(feature: FeatureGraph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in sorted(feature.feature_edges):
            fh.write(f"e {a + 1} {b + 1}\n")
        for c in sorted(feature.corners):
            fh.write(f"c {c + 1}\n")


def load_obj(path, feature_tags=None) -> TriMesh:
    """Read a Wavefront OBJ triangle mesh (``v``, ``vn``, ``f`` records).

    ``feature_tags`` is a tag-file path or a ``FeatureGraph``.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    verts, normals, faces, face_lines = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            tag = tok[0]
            try:
                if tag == "v":
                    if len(tok) < 4:
                        raise ValueError
                    verts.append([float(x) for x in tok[1:4]])
                elif tag == "vn":
                    if len(tok) != 4:
                        raise ValueError
                    normals.append([float(x) for x in tok[1:4]])
                elif tag == "f":
                    if len(tok) != 4:
                        raise ParseError("only triangular faces are supported", lineno, path)
                    faces.append([_parse_index(x, len(verts), path, lineno) for x in tok[1:]])
                    face_lines.append(lineno)
                elif tag in {"vt", "o", "g", "s", "usemtl", "mtllib", "l"}:
                    continue
                else:
                    raise ParseError(f"unknown record {tag!r}", lineno, path)
            except ValueError:
                raise ParseError(f"malformed {tag!r} record", lineno, path) from None
    if not faces:
        raise ParseError("no faces", None, path)
    for f, lineno in zip(faces, face_lines):
        if min(f) < 0 or max(f) >= len(verts):
            raise ParseError("face index out of range", lineno, path)
    vn = None
    if normals:
        if len(normals) != len(verts):
            raise ParseError("vn records must be per-vertex", None, path)
        vn = normals
    feature = feature_tags
    if feature_tags is not None and not isinstance(feature_tags, FeatureGraph):
        feature = read_feature_tags(feature_tags)
    return TriMesh(verts, faces, vn, feature)


def write_obj(mesh: TriMesh, path, normals=True):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in mesh.vertices:
            fh.write("v %r %r %r\n" % tuple(float(c) for c in x))
        if normals and mesh.vertex_normals is not None:
            for n in mesh.vertex_normals:
                fh.write("vn %r %r %r\n" % tuple(float(c) for c in n))
        for t in mesh.triangles:
            fh.write("f %d %d %d\n" % tuple(int(i) + 1 for i in t))
