import numpy as np
import pytest
from builders import cube_mesh, grid_center, grid_mesh

from hosr.geometry import Sphere, Torus
from hosr.mesh import detect_features, TriMesh
from hosr.surface import (MethodConfig, SurfaceReconstructor, build_local_frame, estimate_vertex_normals,
                          fit_vertex, frame_axes, initial_ring, parse_method, project_point_cmf,
                          project_point_walf, resolve_normals, select_stencil)
from hosr.errors import ConfigurationError


def test_frame_completion_for_z():
    Q = frame_axes([0.0, 0.0, 1.0])[0]
    np.testing.assert_allclose(Q[:, 0], [1, 0, 0])
    np.testing.assert_allclose(Q[:, 1], [0, 1, 0])


def test_frames_orthonormal_and_right_handed():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(200, 3))
    m = np.vstack([m, [[0, 0, -1.0]]])
    Q = frame_axes(m)
    eye = np.einsum("bji,bjk->bik", Q, Q)
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(3), eye.shape), atol=1e-15)
    np.testing.assert_allclose(np.linalg.det(Q), 1.0, atol=1e-14)


def test_local_frame_round_trip():
    f = build_local_frame([1.0, 2.0, 3.0], [0.3, -0.2, 0.9])
    X = np.array([[0.5, 0.1, -2.0]])
    np.testing.assert_allclose(f.to_global(f.to_local(X)), X, atol=1e-15)


def test_method_names():
    assert parse_method("H-CMF") == ("cmf", True)
    assert parse_method("walf") == ("walf", False)
    with pytest.raises(ConfigurationError):
        parse_method("mls")


def test_table_ring_sizes():
    assert [initial_ring(p, False) for p in range(2, 7)] == [1.5, 2, 2.5, 3, 3.5]
    assert [initial_ring(p, True) for p in range(2, 7)] == [1, 1, 1, 1.5, 2]


def test_hermite_corner_of_grid_keeps_one_ring():
    # grid corner 0 has valence 3, so 4 one-ring members; 3 * 4 >= 1.5 * 6
    m = grid_mesh()
    st = select_stencil(m, 0, 2, True)
    assert st.ring == 1
    assert len(st.members) == 4


def test_point_stencil_grows_when_too_small():
    m = grid_mesh()
    st = select_stencil(m, 0, 4, False)
    assert len(st.members) >= 15
    assert st.ring >= 2.5


def test_planar_normals_exact():
    m = grid_mesh()
    n = estimate_vertex_normals(m)
    np.testing.assert_array_equal(n, np.tile([0.0, 0.0, 1.0], (m.n_nodes, 1)))


def test_estimated_normals_improve_under_refinement():
    s = Sphere()
    errs = []
    for level in (1, 2):
        m = s.generate_mesh(level)
        n = estimate_vertex_normals(m)
        exact = m.vertices[m.node_vertex]
        errs.append(np.arccos(np.clip(np.einsum("ij,ij->i", n, exact), -1, 1)).max())
    assert errs[1] < errs[0]


def test_cube_corner_has_three_normals():
    m = cube_mesh(2)
    m = m.with_feature(detect_features(m, 30.0))
    n = estimate_vertex_normals(m)
    corner = int(np.flatnonzero(np.all(m.vertices == 0, axis=1))[0])
    got = sorted(tuple(np.round(n[m.node_of(corner, p)], 12)) for p in m.vertex_patches(corner))
    assert got == sorted([(-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, -1.0)])


def test_mesh_normals_source_requires_normals():
    with pytest.raises(ConfigurationError):
        resolve_normals(grid_mesh(), "mesh")


@pytest.mark.parametrize("method", ["walf", "hwalf"])
@pytest.mark.parametrize("degree", [1, 2, 4])
def test_plane_fit_is_flat(method, degree):
    m = grid_mesh()
    f = fit_vertex(m, grid_center(), MethodConfig(method, degree))
    np.testing.assert_allclose(f.fit.coefficients, 0.0, atol=1e-12)


def test_sphere_quadratic_coefficients_converge():
    # local height of the unit sphere: -(u^2 + v^2) / 2 - (u^2 + v^2)^2 / 8 - ...
    errs = []
    for level in (2, 3, 4):
        m = Sphere().generate_mesh(level)
        c = fit_vertex(m, 0, MethodConfig("walf", 2), surface=Sphere()).fit.coefficients
        assert abs(c[4]) <= 1e-12
        errs.append(max(abs(c[3] + 0.5), abs(c[5] + 0.5)))
    assert errs[-1] < 2e-4
    for a, b in zip(errs, errs[1:]):
        assert a / b > 3.5


def test_hermite_paraboloid_reproduced():
    height = lambda x, y: x**2 + y**2  # noqa: E731

    def normals(P):
        n = np.stack([-2 * P[:, 0], -2 * P[:, 1], np.ones(len(P))], axis=1)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    c0 = 4 * 0.1
    m = grid_mesh(spacing=0.1, height=lambda x, y: height(x - c0, y - c0),
                  normals=lambda P: normals(P - [c0, c0, 0]))
    f = fit_vertex(m, grid_center(), MethodConfig("hwalf", 2, normals_source="mesh"))
    np.testing.assert_allclose(f.fit.coefficients, [0, 0, 0, 1, 0, 1], atol=1e-10)


def test_cmf_at_vertex_returns_vertex():
    m = grid_mesh(height=lambda x, y: 0.0 * x)
    x = project_point_cmf(m, 10, [1.0, 0.0, 0.0], MethodConfig("cmf", 2))
    np.testing.assert_allclose(x, m.vertices[m.triangles[10, 0]], atol=1e-12)


def test_cmf_improves_sphere_centroid():
    s = Sphere()
    m = s.generate_mesh(1)
    rec = SurfaceReconstructor(m, MethodConfig("cmf", 2), surface=s)
    c = m.vertices[m.triangles[:20]].mean(axis=1)
    x = rec.project_cmf(np.arange(20), np.full((20, 3), 1 / 3))
    assert np.all(s.distance(x) < s.distance(c))


def test_cmf_edge_mismatch_shrinks():
    # CMF is not G0 across edges, but the gap closes at high order
    t = Torus()
    gaps = []
    for level in (1, 2):
        m = t.generate_mesh(level)
        rec = SurfaceReconstructor(m, MethodConfig("hcmf", 2), surface=t)
        e = np.arange(0, m.n_edges, 7)
        f0, f1 = m.edge_faces[e, 0], m.edge_faces[e, 1]
        a, b = m.edges[e, 0], m.edges[e, 1]

        def bary(faces):
            tri = m.triangles[faces]
            return 0.5 * (tri == a[:, None]) + 0.5 * (tri == b[:, None])

        gaps.append(np.abs(rec.project_cmf(f0, bary(f0)) - rec.project_cmf(f1, bary(f1))).max())
    assert gaps[1] < gaps[0] / 4


@pytest.mark.parametrize("method", ["walf", "hwalf"])
def test_walf_vertex_is_exact(method):
    t = Torus()
    m = t.generate_mesh(1)
    x = project_point_walf(m, 5, [1.0, 0.0, 0.0], MethodConfig(method, 4), normals=t.node_normals(m))
    np.testing.assert_array_equal(x, m.vertices[m.triangles[5, 0]])


@pytest.mark.parametrize("method", ["walf", "hwalf"])
def test_walf_shared_edges_agree(method):
    t = Torus()
    m = t.generate_mesh(1)
    rec = SurfaceReconstructor(m, MethodConfig(method, 4), surface=t)
    rng = np.random.default_rng(7)
    e = rng.integers(0, m.n_edges, 1000)
    s = rng.uniform(0, 1, 1000)
    a, b = m.edges[e, 0], m.edges[e, 1]

    def query(faces):
        tri = m.triangles[faces]
        return (1 - s)[:, None] * (tri == a[:, None]) + s[:, None] * (tri == b[:, None])

    f0, f1 = m.edge_faces[e, 0], m.edge_faces[e, 1]
    x0 = rec.project_walf(f0, query(f0))
    x1 = rec.project_walf(f1, query(f1))
    assert np.abs(x0 - x1).max() <= 1e-12


def test_hwalf_sphere_quartic_decay():
    s = Sphere()
    errs = []
    for level in (1, 2):
        m = s.generate_mesh(level)
        rec = SurfaceReconstructor(m, MethodConfig("hwalf", 4), surface=s)
        x = rec.project_walf(np.arange(m.n_faces), np.full((m.n_faces, 3), 1 / 3))
        errs.append(s.distance(x).max())
    assert errs[0] / errs[1] >= 2**4 * 0.8


def test_normals_shape_checked():
    m = grid_mesh()
    with pytest.raises(ConfigurationError):
        SurfaceReconstructor(m, MethodConfig("walf", 2), normals=np.zeros((3, 3)))


def test_crease_stencils_stay_on_their_side():
    m = cube_mesh(4)
    m = m.with_feature(detect_features(m, 30.0))
    rec = SurfaceReconstructor(m, MethodConfig("hwalf", 2))
    for node, st in enumerate(rec.stencils):
        assert np.all(m.node_patch[st.nodes] == m.node_patch[node])


def test_cube_face_reconstruction_is_flat():
    m = cube_mesh(4)
    m = m.with_feature(detect_features(m, 30.0))
    rec = SurfaceReconstructor(m, MethodConfig("hwalf", 2))
    rng = np.random.default_rng(2)
    xi = rng.dirichlet([1, 1, 1], m.n_faces)
    x = rec.project_walf(np.arange(m.n_faces), xi)
    flat = np.einsum("bj,bji->bi", xi, m.vertices[m.triangles])
    np.testing.assert_allclose(x, flat, atol=1e-12)


def test_degenerate_patch_does_not_crash():
    # a strip of collinear-ish vertices forces truncation instead of a failure
    V = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0.5, 1e-9, 0], [1.5, 1e-9, 0]]
    m = TriMesh(V, [[0, 1, 3], [1, 2, 4], [1, 4, 3]])
    rec = SurfaceReconstructor(m, MethodConfig("walf", 2))
    out = rec.project_walf([2], [[1 / 3] * 3])
    assert np.all(np.isfinite(out))
