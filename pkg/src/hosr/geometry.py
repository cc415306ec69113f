"""Analytic test geometries with closest-point oracles and mesh generators.

Surfaces: sphere, double sphere (union of two intersecting spheres, whose
intersection circle is a sharp concave feature) and torus.  Curves: conical
helix, circle and polyline.  All closest-point queries are vectorized; the
scalar ``closest_point_*`` functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguityError, ConfigurationError
from .mesh import FeatureGraph, TriMesh, uniform_refine


@dataclass
class ClosestPointResult:
    point: np.ndarray
    distance: float
    normal_or_tangent: np.ndarray
    on_feature: bool = False
    parameter: float | None = None


def _unit(v, axis=-1):
    return v / np.linalg.norm(v, axis=axis, keepdims=True)


def _orthonormal_pair(a):
    """Two unit vectors completing ``a`` to a right-handed frame."""
    a = _unit(np.asarray(a, float))
    e = np.eye(3)[np.argmin(np.abs(a))]
    e1 = _unit(np.cross(e, a))
    e2 = np.cross(a, e1)
    return e1, e2


# ----------------------------------------------------------------------
# surfaces
# ----------------------------------------------------------------------


class AnalyticSurface:
    kind = "surface"
    has_features = False

    def closest_points(self, X):
        """Vectorized closest points: returns (points, distances, normals, on_feature)."""
        raise NotImplementedError

    def distance(self, X):
        return self.closest_points(np.atleast_2d(X))[1]

    def normal(self, X, cap=None):
        raise NotImplementedError

    def generate_mesh(self, level: int) -> TriMesh:
        raise NotImplementedError

    def patch_caps(self, mesh: TriMesh):
        """Cap id of every patch of ``mesh`` (0 for single-piece surfaces)."""
        return np.zeros(mesh.face_patch.max() + 1, dtype=int)

    def node_normals(self, mesh: TriMesh):
        """Exact one-sided normals at every mesh node."""
        caps = self.patch_caps(mesh)[mesh.node_patch]
        X = mesh.vertices[mesh.node_vertex]
        return self.normal(X, caps)

    def project_new_vertices(self, points, on_feature, side_points):
        return self.closest_points(points)[0]

    def project_to_surface(self, X, cap=None):
        """Projection used for element nodes; defaults to the closest point."""
        return self.closest_points(np.atleast_2d(X))[0]

    def project_to_feature(self, X):
        raise ConfigurationError(f"{self.kind} has no feature curve")


@dataclass
class Sphere(AnalyticSurface):
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    kind = "sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(self.center, float)

    def closest_points(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        d = X - self.center
        r = np.linalg.norm(d, axis=1)
        if np.any(r == 0):
            raise AmbiguityError("query at the sphere center")
        n = d / r[:, None]
        return self.center + self.radius * n, np.abs(r - self.radius), n, np.zeros(len(X), bool)

    def normal(self, X, cap=None):
        X = np.asarray(X, float)
        return _unit(X - self.center)

    def generate_mesh(self, level: int) -> TriMesh:
        if level < 1:
            raise ValueError("level must be >= 1")
        mesh = icosahedron()
        mesh = TriMesh(self.center + self.radius * mesh.vertices, mesh.triangles)
        for _ in range(level + 1):
            mesh = uniform_refine(mesh, self)
        return mesh


@dataclass
class Torus(AnalyticSurface):
    major_R: float = 1.0
    minor_r: float = 0.3
    kind = "torus"
    base_major: int = 50
    base_minor: int = 18
    jitter: float = 0.2
    mesh_seed: int = 0

    def __post_init__(self):
        if self.major_R <= 0 or self.minor_r <= 0 or self.minor_r >= self.major_R:
            raise ValueError("torus needs 0 < r < R")
        if not 0 <= self.jitter < 0.5:
            raise ValueError("jitter must lie in [0, 0.5)")

    def closest_points(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        rho = np.hypot(X[:, 0], X[:, 1])
        if np.any(rho == 0):
            raise AmbiguityError("query on the torus axis")
        q = np.stack([X[:, 0] / rho * self.major_R, X[:, 1] / rho * self.major_R, np.zeros(len(X))], axis=1)
        d = X - q
        dn = np.linalg.norm(d, axis=1)
        if np.any(dn == 0):
            raise AmbiguityError("query on the torus core circle")
        n = d / dn[:, None]
        return q + self.minor_r * n, np.abs(dn - self.minor_r), n, np.zeros(len(X), bool)

    def normal(self, X, cap=None):
        return self.closest_points(X)[2]

    def point(self, theta, phi):
        theta = np.asarray(theta, float)
        phi = np.asarray(phi, float)
        w = self.major_R + self.minor_r * np.cos(phi)
        return np.stack([w * np.cos(theta), w * np.sin(theta), self.minor_r * np.sin(phi)], axis=-1)

    def generate_mesh(self, level: int) -> TriMesh:
        """Perturbed base grid refined 1->4 with closest-point projection.

        The base vertices are shifted by up to ``jitter`` cells in parameter
        space (fixed seed), so stencils are not perfectly symmetric. With
        ``jitter=0`` each level is the structured grid at half spacing.
        """
        if level < 1:
            raise ValueError("level must be >= 1")
        if self.jitter == 0:
            return self._grid_mesh(self.base_major * 2 ** (level - 1), self.base_minor * 2 ** (level - 1), 0.0)
        mesh = self._grid_mesh(self.base_major, self.base_minor, self.jitter)
        for _ in range(level - 1):
            mesh = uniform_refine(mesh, self)
        return mesh

    def _grid_mesh(self, nu: int, nv: int, jitter: float) -> TriMesh:
        i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
        u, v = i.ravel().astype(float), j.ravel().astype(float)
        if jitter:
            rng = np.random.default_rng(self.mesh_seed)
            u = u + rng.uniform(-jitter, jitter, u.size)
            v = v + rng.uniform(-jitter, jitter, v.size)
        verts = self.point(2 * math.pi * u / nu, 2 * math.pi * v / nv)

        def vid(a, b):
            return (a % nu) * nv + (b % nv)

        a, b = i.ravel(), j.ravel()
        v00, v10, v11, v01 = vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)
        # split each quad along its shorter diagonal
        d0 = np.linalg.norm(verts[v00] - verts[v11], axis=1)
        d1 = np.linalg.norm(verts[v10] - verts[v01], axis=1)
        alt = (d1 < d0)[:, None]
        t0 = np.where(alt, np.stack([v00, v10, v01], 1), np.stack([v00, v10, v11], 1))
        t1 = np.where(alt, np.stack([v10, v11, v01], 1), np.stack([v00, v11, v01], 1))
        return _orient_outward(TriMesh(verts, np.concatenate([t0, t1])), self)


@dataclass
class DoubleSphere(AnalyticSurface):
    """Outer boundary of the union of two intersecting spheres."""

    c1: tuple = (0.0, 0.0, 0.0)
    c2: tuple = (0.5, 0.0, 0.0)
    r1: float = 1.0
    r2: float = 1.0
    kind = "double_sphere"
    has_features = True
    base_circle: int = 26

    def __post_init__(self):
        self.c1 = np.asarray(self.c1, float)
        self.c2 = np.asarray(self.c2, float)
        d = np.linalg.norm(self.c2 - self.c1)
        if self.r1 <= 0 or self.r2 <= 0:
            raise ValueError("radii must be positive")
        if not (abs(self.r1 - self.r2) < d < self.r1 + self.r2):
            raise ValueError("spheres do not intersect in a circle")
        self.axis = (self.c2 - self.c1) / d
        self.s1 = (d * d + self.r1**2 - self.r2**2) / (2 * d)
        self.circle_center = self.c1 + self.s1 * self.axis
        self.circle_radius = math.sqrt(self.r1**2 - self.s1**2)
        self.e1, self.e2 = _orthonormal_pair(self.axis)

    @property
    def circle(self):
        return Circle(self.circle_center, self.axis, self.circle_radius)

    def _axial(self, X):
        return (X - self.circle_center) @ self.axis

    def _sphere(self, cap):
        return (self.c1, self.r1) if cap == 0 else (self.c2, self.r2)

    def cap_of(self, X):
        """0 on the side of sphere 1 (behind the circle plane), 1 otherwise."""
        return (self._axial(np.atleast_2d(X)) > 0).astype(int)

    def closest_points(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        n_pts = len(X)
        best_d = np.full(n_pts, np.inf)
        best_p = np.zeros((n_pts, 3))
        best_n = np.zeros((n_pts, 3))
        on_feat = np.zeros(n_pts, bool)
        for cap, sign in ((0, -1.0), (1, 1.0)):
            c, r = self._sphere(cap)
            d = X - c
            dn = np.linalg.norm(d, axis=1)
            if np.any(dn == 0):
                raise AmbiguityError("query at a sphere center")
            n = d / dn[:, None]
            p = c + r * n
            retained = sign * self._axial(p) >= -1e-15
            dist = np.abs(dn - r)
            better = retained & (dist < best_d)
            best_d[better] = dist[better]
            best_p[better] = p[better]
            best_n[better] = n[better]
        # intersection circle
        ax = self._axial(X)
        inplane = X - self.circle_center - ax[:, None] * self.axis
        rn = np.linalg.norm(inplane, axis=1)
        flat = rn == 0
        dirv = np.where(flat[:, None], self.e1, inplane / np.where(flat, 1.0, rn)[:, None])
        pc = self.circle_center + self.circle_radius * dirv
        dc = np.linalg.norm(X - pc, axis=1)
        better = dc < best_d
        if np.any(better & flat):
            raise AmbiguityError("query on the axis of the intersection circle")
        best_d[better] = dc[better]
        best_p[better] = pc[better]
        on_feat[better] = True
        if np.any(better):
            # unit direction toward the query (normal of the distance field)
            diff = X[better] - pc[better]
            dd = np.linalg.norm(diff, axis=1)
            fallback = dirv[better]
            best_n[better] = np.where(dd[:, None] > 0, diff / np.where(dd > 0, dd, 1.0)[:, None], fallback)
        return best_p, best_d, best_n, on_feat

    def normal(self, X, cap=None):
        X = np.atleast_2d(np.asarray(X, float))
        if cap is None:
            ax = self._axial(X)
            tol = 1e-9
            if np.any(np.abs(ax) <= tol):
                raise AmbiguityError("normal requested on the feature circle without a cap id")
            cap = (ax > 0).astype(int)
        cap = np.broadcast_to(np.asarray(cap), (len(X),))
        out = np.empty_like(X)
        for k in (0, 1):
            sel = cap == k
            c, _ = self._sphere(k)
            out[sel] = _unit(X[sel] - c)
        return out

    def patch_caps(self, mesh: TriMesh):
        npatch = mesh.face_patch.max() + 1
        caps = np.zeros(npatch, dtype=int)
        cent = mesh.vertices[mesh.triangles].mean(axis=1)
        side = self.cap_of(cent)
        for p in range(npatch):
            caps[p] = int(np.round(side[mesh.face_patch == p].mean()))
        return caps

    def project_to_feature(self, X):
        return self.circle.closest_points(np.atleast_2d(X))[0]

    def project_to_surface(self, X, cap=None):
        """Radial projection onto the sphere of ``cap`` (closest point if no cap)."""
        X = np.atleast_2d(np.asarray(X, float))
        if cap is None:
            return self.closest_points(X)[0]
        cap = np.broadcast_to(np.asarray(cap), (len(X),))
        out = np.empty_like(X)
        for k in (0, 1):
            sel = cap == k
            c, r = self._sphere(k)
            out[sel] = c + r * _unit(X[sel] - c)
        return out

    def feature_tangents(self, mesh: TriMesh) -> dict:
        """Exact unit tangents of the circle at every feature vertex."""
        verts = np.flatnonzero(mesh.feature_vertices)
        X = mesh.vertices[verts]
        radial = _unit(X - self.circle_center - np.outer(self._axial(X), self.axis))
        T = np.cross(self.axis, radial)
        return {int(v): T[i] for i, v in enumerate(verts)}

    def project_new_vertices(self, points, on_feature, side_points):
        out = np.array(points, float)
        caps = self.cap_of(side_points)
        for k in (0, 1):
            sel = (~on_feature) & (caps == k)
            c, r = self._sphere(k)
            out[sel] = c + r * _unit(out[sel] - c)
        if np.any(on_feature):
            out[on_feature] = self.project_to_feature(out[on_feature])
        return out

    def _cap_rings(self, cap, n_circle):
        """Vertices and triangles of one cap in polar coordinates about its pole."""
        c, r = self._sphere(cap)
        pole_dir = -self.axis if cap == 0 else self.axis
        s = self.s1 if cap == 0 else np.linalg.norm(self.c2 - self.c1) - self.s1
        # polar angle of the circle measured from the pole
        theta_max = math.acos(-s / r) if cap == 0 else math.acos(-s / r)
        h = 2 * math.pi * self.circle_radius / n_circle
        N = max(1, int(round(r * theta_max / h)))
        dtheta = theta_max / N
        rings = [np.array([0.0])]
        phis = [np.array([0.0])]
        for k in range(1, N + 1):
            if k == N:
                n_k = n_circle
                ph = 2 * math.pi * np.arange(n_k) / n_k
            else:
                th = k * dtheta
                n_k = max(6, int(round(2 * math.pi * math.sin(th) / dtheta)))
                ph = 2 * math.pi * (np.arange(n_k) + 0.5 * (k % 2)) / n_k
            rings.append(np.full(n_k, k * dtheta))
            phis.append(ph)
        pts = []
        for th, ph in zip(rings, phis):
            radial = np.cos(ph)[:, None] * self.e1 + np.sin(ph)[:, None] * self.e2
            pts.append(c + r * (np.cos(th)[:, None] * pole_dir + np.sin(th)[:, None] * radial))
        # circle ring placed exactly on the shared circle
        ph = phis[-1]
        pts[-1] = self.circle_center + self.circle_radius * (np.cos(ph)[:, None] * self.e1 + np.sin(ph)[:, None] * self.e2)
        offsets = np.cumsum([0] + [len(p) for p in pts])
        tris = []
        for k in range(1, len(pts)):
            tris += _zip_rings(offsets[k - 1], phis[k - 1], offsets[k], phis[k])
        return np.vstack(pts), np.array(tris), offsets[-2], n_circle

    def generate_mesh(self, level: int) -> TriMesh:
        if level < 1:
            raise ValueError("level must be >= 1")
        n_circle = self.base_circle
        v0, t0, circ0, nc = self._cap_rings(0, n_circle)
        v1, t1, circ1, _ = self._cap_rings(1, n_circle)
        # merge: cap-1 circle vertices map onto cap-0 circle vertices
        n0 = len(v0)
        remap = np.arange(len(v1)) + n0
        remap[circ1:circ1 + nc] = np.arange(circ0, circ0 + nc)
        keep = np.ones(len(v1), bool)
        keep[circ1:circ1 + nc] = False
        # compact indices of the kept cap-1 vertices
        new_index = np.cumsum(keep) - 1 + n0
        remap = np.where(keep, new_index, remap)
        verts = np.vstack([v0, v1[keep]])
        t0 = _orient_faces(v0, t0, v0[t0].mean(axis=1) - self.c1)
        t1 = _orient_faces(v1, t1, v1[t1].mean(axis=1) - self.c2)
        tris = np.vstack([t0, remap[t1]])
        circle = [(circ0 + i, circ0 + (i + 1) % nc) for i in range(nc)]
        mesh = TriMesh(verts, tris, None, FeatureGraph.from_iterables(circle))
        for _ in range(level - 1):
            mesh = uniform_refine(mesh, self)
        return mesh


def _zip_rings(oa, pa, ob, pb):
    """Triangulate the band between two concentric rings of azimuths."""
    na, nb = len(pa), len(pb)
    if na == 1:
        return [(oa, ob + j, ob + (j + 1) % nb) for j in range(nb)]
    # unwrap ring B so that it starts at the azimuth nearest the first point of A
    rel = (pb - pa[0] + math.pi) % (2 * math.pi) - math.pi
    j0 = int(np.argmin(np.abs(rel)))
    bang = pa[0] + rel[j0] + (pb[(j0 + np.arange(nb)) % nb] - pb[j0]) % (2 * math.pi)
    bang = np.append(bang, bang[0] + 2 * math.pi)
    aang = np.append(pa, pa[0] + 2 * math.pi)
    i = j = 0
    tris = []
    while i < na or j < nb:
        a_cur, a_next = oa + i % na, oa + (i + 1) % na
        b_cur, b_next = ob + (j0 + j) % nb, ob + (j0 + j + 1) % nb
        if j >= nb or (i < na and aang[i + 1] <= bang[j + 1]):
            tris.append((a_cur, a_next, b_cur))
            i += 1
        else:
            tris.append((a_cur, b_next, b_cur))
            j += 1
    return tris


def _orient_faces(verts, tris, outward):
    v = verts[tris]
    n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    flip = np.einsum("ij,ij->i", n, outward) < 0
    tris = tris.copy()
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _orient_outward(mesh: TriMesh, surf: AnalyticSurface) -> TriMesh:
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    _, _, n, _ = surf.closest_points(cent)
    if np.einsum("ij,ij->i", mesh.face_normals, n).mean() < 0:
        return TriMesh(mesh.vertices, mesh.triangles[:, [0, 2, 1]], mesh.vertex_normals, mesh.feature)
    return mesh


def icosahedron() -> TriMesh:
    g = (1 + math.sqrt(5)) / 2
    v = np.array([[-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
                  [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
                  [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1]], float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return TriMesh(v, f)


# ----------------------------------------------------------------------
# curves
# ----------------------------------------------------------------------


class AnalyticCurve:
    def closest_points(self, X):
        raise NotImplementedError


@dataclass
class ConicalHelix(AnalyticCurve):
    t0: float = 0.0
    t1: float = 2 * math.pi
    freq: float = 6.0
    samples: int = 4096
    kind = "helix"

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("empty parameter range")

    def position(self, t):
        t = np.asarray(t, float)
        w = self.freq
        return np.stack([t * np.cos(w * t), t * np.sin(w * t), t], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, float)
        w = self.freq
        c, s = np.cos(w * t), np.sin(w * t)
        return np.stack([c - w * t * s, s + w * t * c, np.ones_like(t)], axis=-1)

    def second_derivative(self, t):
        t = np.asarray(t, float)
        w = self.freq
        c, s = np.cos(w * t), np.sin(w * t)
        return np.stack([-2 * w * s - w * w * t * c, 2 * w * c - w * w * t * s, np.zeros_like(t)], axis=-1)

    def tangent(self, t):
        return _unit(self.derivative(t))

    def _newton(self, X, t, lo, hi):
        """Bracketed Newton on g(t) = r'(t).(r(t) - x), vectorized over queries."""
        for _ in range(200):
            r = self.position(t) - X
            d1 = self.derivative(t)
            g = np.einsum("ij,ij->i", d1, r)
            scale = np.linalg.norm(d1, axis=1) * (1.0 + np.linalg.norm(X, axis=1))
            done = np.abs(g) <= 1e-15 * scale
            if np.all(done):
                break
            hi = np.where(g > 0, t, hi)
            lo = np.where(g < 0, t, lo)
            dg = np.einsum("ij,ij->i", self.second_derivative(t), r) + np.einsum("ij,ij->i", d1, d1)
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = t - g / dg
            bad = ~np.isfinite(tn) | (dg <= 0) | (tn <= lo) | (tn >= hi)
            tn = np.where(bad, 0.5 * (lo + hi), tn)
            stalled = (hi - lo) <= 4e-16 * np.maximum(1.0, np.abs(t))
            t = np.where(done | stalled, t, tn)
            if np.all(done | stalled):
                break
        return t

    def closest_param(self, x):
        t = self.closest_points(np.asarray(x, float)[None])[3][0]
        return float(t), float(np.linalg.norm(self.position(t) - x))

    def closest_points(self, X, candidates: int = 3, chunk: int = 512):
        """Dense sampling, then Newton from the best few local minima of each query."""
        X = np.atleast_2d(np.asarray(X, float))
        ts = np.linspace(self.t0, self.t1, self.samples)
        dt = ts[1] - ts[0]
        S = self.position(ts)
        S2 = np.einsum("ij,ij->i", S, S)
        out_t = np.empty(len(X))
        for lo_q in range(0, len(X), chunk):
            Xc = X[lo_q:lo_q + chunk]
            d2 = S2[None, :] - 2.0 * Xc @ S.T + np.einsum("ij,ij->i", Xc, Xc)[:, None]
            left = np.concatenate([np.full((len(Xc), 1), np.inf), d2[:, :-1]], axis=1)
            right = np.concatenate([d2[:, 1:], np.full((len(Xc), 1), np.inf)], axis=1)
            d2m = np.where((d2 <= left) & (d2 <= right), d2, np.inf)
            k = min(candidates, d2m.shape[1])
            cand = np.argpartition(d2m, k - 1, axis=1)[:, :k]
            cand_ok = np.isfinite(np.take_along_axis(d2m, cand, axis=1))
            cand = np.where(cand_ok, cand, np.argmin(d2, axis=1)[:, None])
            t0 = ts[cand].ravel()
            Xr = np.repeat(Xc, k, axis=0)
            t = self._newton(Xr, t0, np.maximum(self.t0, t0 - dt), np.minimum(self.t1, t0 + dt))
            d = np.linalg.norm(self.position(t) - Xr, axis=1).reshape(-1, k)
            out_t[lo_q:lo_q + chunk] = t.reshape(-1, k)[np.arange(len(Xc)), np.argmin(d, axis=1)]
        P = self.position(out_t)
        return P, np.linalg.norm(X - P, axis=1), self.tangent(out_t), out_t

    def distance(self, X):
        return self.closest_points(X)[1]


@dataclass
class Circle(AnalyticCurve):
    center: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)
    radius: float = 1.0
    kind = "circle"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(self.center, float)
        self.axis = _unit(np.asarray(self.axis, float))

    def closest_points(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        d = X - self.center
        inplane = d - (d @ self.axis)[:, None] * self.axis
        rn = np.linalg.norm(inplane, axis=1)
        if np.any(rn == 0):
            raise AmbiguityError("query on the circle axis")
        radial = inplane / rn[:, None]
        P = self.center + self.radius * radial
        T = np.cross(self.axis, radial)
        return P, np.linalg.norm(X - P, axis=1), T, None

    def tangent_at(self, X):
        return self.closest_points(X)[2]

    def distance(self, X):
        return self.closest_points(X)[1]


@dataclass
class Polyline(AnalyticCurve):
    points: np.ndarray = None
    closed: bool = False
    kind = "polyline"

    def __post_init__(self):
        self.points = np.asarray(self.points, float)
        if len(self.points) < 2:
            raise ValueError("polyline needs two points")

    def closest_points(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        A = self.points
        B = np.roll(A, -1, axis=0) if self.closed else A[1:]
        A = A if self.closed else A[:-1]
        AB = B - A
        L2 = np.einsum("ij,ij->i", AB, AB)
        t = np.clip(((X[:, None, :] - A[None]) * AB[None]).sum(-1) / L2, 0, 1)
        P = A[None] + t[..., None] * AB[None]
        d = np.linalg.norm(X[:, None, :] - P, axis=2)
        k = np.argmin(d, axis=1)
        ar = np.arange(len(X))
        return P[ar, k], d[ar, k], _unit(AB[k]), None

    def distance(self, X):
        return self.closest_points(X)[1]


# ----------------------------------------------------------------------
# scalar wrappers and generators
# ----------------------------------------------------------------------


def closest_point_surface(surf: AnalyticSurface, x) -> ClosestPointResult:
    p, d, n, f = surf.closest_points(np.asarray(x, float)[None])
    return ClosestPointResult(p[0], float(d[0]), n[0], bool(f[0]))


def closest_point_curve(curve: AnalyticCurve, x) -> ClosestPointResult:
    p, d, t, par = curve.closest_points(np.asarray(x, float)[None])
    return ClosestPointResult(p[0], float(d[0]), t[0], False, None if par is None else float(par[0]))


def surface_normal(surf: AnalyticSurface, x, cap=None) -> np.ndarray:
    x = np.asarray(x, float)
    _, dist, _, _ = surf.closest_points(x[None])
    if dist[0] > 1e-9:
        raise ValueError("point is not on the surface")
    return surf.normal(x[None], None if cap is None else np.array([cap]))[0]


def generate_mesh(surf: AnalyticSurface, level: int) -> TriMesh:
    return surf.generate_mesh(level)


def helix_polyline(level: int, helix: ConicalHelix | None = None):
    """Uniform-parameter samples of the conical helix: ``(positions, tangents, t)``."""
    if level < 1:
        raise ValueError("level must be >= 1")
    helix = helix or ConicalHelix()
    n = 256 * 2 ** (level - 1)
    t = np.linspace(helix.t0, helix.t1, n)
    return helix.position(t), helix.tangent(t), t


def parse_geometry(spec: str):
    """Parse ``sphere:r=1``, ``torus:R=1,r=0.3[,jitter=0.2]``, ``double_sphere`` or ``helix``."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigurationError(f"bad geometry parameter {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ConfigurationError(f"bad geometry value {item!r}") from None
    name = name.strip().lower()
    if name == "sphere":
        return Sphere(radius=params.get("r", 1.0))
    if name == "torus":
        return Torus(params.get("R", 1.0), params.get("r", 0.3), jitter=params.get("jitter", 0.2))
    if name == "double_sphere":
        return DoubleSphere()
    if name == "helix":
        return ConicalHelix()
    raise ConfigurationError(f"unknown geometry {name!r}")
