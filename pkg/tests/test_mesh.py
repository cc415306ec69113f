import numpy as np
import pytest
from builders import cube_mesh, grid_center, grid_mesh, single_triangle, tetrahedron
from hypothesis import given
from hypothesis import strategies as st

from hosr.errors import ParseError, TopologyError
from hosr.geometry import DoubleSphere, Sphere, Torus, icosahedron
from hosr.mesh import (FeatureGraph, TriMesh, barycentric_coordinates, detect_features, k_ring_vertices, load_obj,
                       read_feature_tags, uniform_refine, write_feature_tags, write_obj)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_single_triangle_obj(tmp_path):
    p = _write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    m = load_obj(p)
    assert m.n_edges == 3
    assert np.all(m.edge_face_count == 1)
    assert len(m.feature.feature_edges) == 3  # boundary edges are tagged


def test_tetrahedron_edges():
    m = tetrahedron()
    assert m.n_edges == 6
    assert np.all(m.edge_face_count == 2)


def test_obj_with_slashes_and_normals(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 2\nvn 0 0 1\nvn 0 0 1\nf 1//1 2//2 3//3\n"
    m = load_obj(_write(tmp_path / "n.obj", text))
    np.testing.assert_allclose(m.vertex_normals, [[0, 0, 1]] * 3)


def test_obj_bad_index_reports_line(tmp_path):
    p = _write(tmp_path / "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n")
    with pytest.raises(ParseError) as exc:
        load_obj(p)
    assert "4" in str(exc.value)


def test_missing_obj(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_obj(str(tmp_path / "nope.obj"))


def test_non_manifold_rejected():
    V = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
    with pytest.raises(TopologyError):
        TriMesh(V, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])


def test_torus_round_trip(tmp_path):
    m = Torus().generate_mesh(1)
    p = str(tmp_path / "torus.obj")
    write_obj(m, p)
    back = load_obj(p)
    np.testing.assert_array_equal(back.triangles, m.triangles)
    np.testing.assert_array_equal(back.vertices, m.vertices)


def test_feature_tag_round_trip(tmp_path):
    g = FeatureGraph.from_iterables([(0, 1), (1, 2)], [0])
    p = str(tmp_path / "tags.txt")
    write_feature_tags(g, p)
    assert read_feature_tags(p) == g


def test_feature_tag_parse_error(tmp_path):
    with pytest.raises(ParseError):
        read_feature_tags(_write(tmp_path / "t.txt", "e 1 2\nx y z w\n"))


def test_one_ring_of_grid_vertex():
    m = grid_mesh()
    v = grid_center()
    st1 = k_ring_vertices(m, v, 1)
    assert len(st1.members) == 7
    assert st1.members[0] == v
    assert len(set(st1.members.tolist())) == 7


def test_one_and_half_ring_of_grid_vertex():
    m = grid_mesh()
    st15 = k_ring_vertices(m, grid_center(), 1.5)
    # hand count: 6 one-ring vertices plus one opposite vertex across each of the 6 outer edges
    assert len(st15.members) == 13


def test_two_ring_of_grid_vertex():
    m = grid_mesh()
    assert len(k_ring_vertices(m, grid_center(), 2).members) == 19


def test_ring_must_be_half_integer():
    with pytest.raises(ValueError):
        k_ring_vertices(grid_mesh(), 0, 1.25)


def test_mean_one_ring_on_torus():
    m = Torus().generate_mesh(1)
    sizes = [len(k_ring_vertices(m, v, 1).members) for v in range(m.n_vertices)]
    assert 6.3 <= np.mean(sizes) <= 7.3


def test_cube_features():
    g = detect_features(cube_mesh(3), 30.0)
    assert len(g.chains) == 12
    assert len(g.corners) == 8


def test_smooth_torus_has_no_features():
    m = Torus().generate_mesh(1)
    n = m.unit_face_normals[m.edge_faces]
    cosang = np.einsum("ei,ei->e", n[:, 0], n[:, 1])
    assert np.degrees(np.arccos(cosang.min())) < 30.0
    assert not detect_features(m, 30.0)


def test_double_sphere_crease_is_shallower_than_thirty_degrees():
    # the concave crease opens by 2 atan(0.25 / sqrt(0.9375)) = 28.96 degrees
    m = DoubleSphere().generate_mesh(1)
    assert not detect_features(m, 30.0)


def test_double_sphere_feature_is_one_circle():
    ds = DoubleSphere()
    m = ds.generate_mesh(1)
    g = detect_features(m, 15.0)
    chains = g.chains
    assert len(chains) == 1 and chains[0][1]
    verts = np.array(chains[0][0])
    np.testing.assert_allclose(m.vertices[verts, 0], 0.25, atol=1e-12)
    assert g.feature_edges == m.feature.feature_edges


def test_patch_restricted_stencils_on_cube():
    m = cube_mesh(3).with_feature(detect_features(cube_mesh(3), 30.0))
    for v in range(m.n_vertices):
        for patch in m.vertex_patches(v):
            st_ = k_ring_vertices(m, v, 2, patch)
            faces = [f for u in st_.members for f in m.vertex_faces(u) if m.face_patch[f] == patch]
            assert faces, "every member touches the chosen patch"


def test_uniform_refine_counts():
    m = icosahedron()
    r = uniform_refine(m)
    assert r.n_vertices == m.n_vertices + m.n_edges
    assert r.n_faces == 4 * m.n_faces


def test_refine_with_sphere_projection():
    r = uniform_refine(icosahedron(), Sphere())
    np.testing.assert_allclose(np.linalg.norm(r.vertices, axis=1), 1.0, atol=1e-14)


def test_double_sphere_refinement_ratio():
    ds = DoubleSphere()
    a, b = ds.generate_mesh(1).n_vertices, ds.generate_mesh(2).n_vertices
    assert b / a == pytest.approx(4.0, rel=0.02)


def test_barycentric_coordinates():
    m = single_triangle()
    np.testing.assert_allclose(barycentric_coordinates(m, 0, m.vertices[0]), [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(barycentric_coordinates(m, 0, m.vertices.mean(axis=0)), [1 / 3] * 3, atol=1e-15)
    mid = 0.5 * (m.vertices[1] + m.vertices[2])
    np.testing.assert_allclose(barycentric_coordinates(m, 0, mid), [0, 0.5, 0.5], atol=1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
def test_barycentric_reconstructs_point(a, b):
    if a + b > 1:
        a, b = 1 - a, 1 - b
    m = TriMesh([[0.3, 0.1, 0.2], [1.4, 0.2, 0.0], [0.1, 1.2, 0.5]], [[0, 1, 2]])
    x = (1 - a - b) * m.vertices[0] + a * m.vertices[1] + b * m.vertices[2]
    xi = barycentric_coordinates(m, 0, x)
    assert xi.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(xi @ m.vertices, x, atol=1e-12)


def test_crease_vertex_has_one_node_per_side():
    m = cube_mesh(2).with_feature(detect_features(cube_mesh(2), 30.0))
    corner = int(np.flatnonzero(np.all(m.vertices == 0, axis=1))[0])
    assert len(m.vertex_patches(corner)) == 3
