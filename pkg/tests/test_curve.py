import math

import numpy as np
import pytest
from builders import cube_mesh

from hosr.curve import (CurveChain, CurveReconstructor, chains_from_mesh, estimate_tangents, fit_curve_vertex,
                        initial_curve_ring, project_point_curve, split_at_corners)
from hosr.errors import GeometryError
from hosr.geometry import Circle, ConicalHelix
from hosr.harness import RunConfig, convergence_rate, curve_level_errors, error_l2_norm
from hosr.mesh import FeatureGraph, detect_features


def circle_chain(n, radius=1.0, phase=0.0):
    a = phase + 2 * math.pi * np.arange(n) / n
    P = radius * np.stack([np.cos(a), np.sin(a), np.zeros(n)], axis=1)
    T = np.stack([-np.sin(a), np.cos(a), np.zeros(n)], axis=1)
    return CurveChain(P, True), T


def test_straight_line_tangents():
    d = np.array([1.0, 2.0, -0.5])
    P = np.outer(np.linspace(0, 3, 9) ** 1.3, d)
    np.testing.assert_allclose(estimate_tangents(P), np.tile(d / np.linalg.norm(d), (9, 1)), atol=1e-15)


def test_regular_polygon_tangents_perpendicular_to_radius():
    ch, _ = circle_chain(24)
    np.testing.assert_allclose(np.einsum("ij,ij->i", ch.tangents, ch.points), 0.0, atol=1e-14)


def test_tangent_error_is_second_order_on_graded_samples():
    errs = []
    for n in (40, 80, 160):
        k = np.arange(n) / n
        a = 2 * math.pi * (k + 0.05 * np.sin(2 * math.pi * k))
        P = np.stack([np.cos(a), np.sin(a), np.zeros(n)], axis=1)
        T = estimate_tangents(P, closed=True)
        exact = np.stack([-np.sin(a), np.cos(a), np.zeros(n)], axis=1)
        errs.append(np.linalg.norm(np.cross(T, exact), axis=1).max())
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_zero_length_edge_rejected():
    with pytest.raises(GeometryError):
        estimate_tangents([[0, 0, 0], [0, 0, 0], [1, 0, 0]])


def test_closed_circle_is_one_cyclic_chain():
    n = 12
    g = FeatureGraph.from_iterables([(i, (i + 1) % n) for i in range(n)])
    chains = split_at_corners(g)
    assert len(chains) == 1
    assert chains[0][1] is True
    assert sorted(chains[0][0]) == list(range(n))


def test_l_chain_splits_at_corner():
    g = FeatureGraph.from_iterables([(0, 1), (1, 2), (2, 3), (3, 4)], [2])
    chains = split_at_corners(g)
    assert len(chains) == 2
    ends = [{c[0], c[-1]} for c, _ in chains]
    assert all(2 in e for e in ends)


def test_l_chain_corner_gets_one_tangent_per_leg():
    V = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [2, 1, 0], [2, 2, 0]], float)
    g = FeatureGraph.from_iterables([(0, 1), (1, 2), (2, 3), (3, 4)], [2])
    chains = split_at_corners(g, V)
    at_corner = []
    for ch in chains:
        k = int(np.flatnonzero(ch.vertex_ids == 2)[0])
        at_corner.append(np.abs(ch.tangents[k]))
    assert sorted(map(tuple, at_corner)) == [(0.0, 1.0, 0.0), (1.0, 0.0, 0.0)]


def test_line_fit_is_zero():
    P = np.outer(np.linspace(-1, 1, 7), [0.3, 0.4, 0.5])
    f = fit_curve_vertex(CurveChain(P), 3, 4, hermite=False)
    np.testing.assert_allclose(f.coefficients, 0.0, atol=1e-12)


def test_parabola_hermite_reproduction():
    u = np.linspace(-0.4, 0.4, 9)
    P = np.stack([u, u**2, np.zeros_like(u)], axis=1)
    T = np.stack([np.ones_like(u), 2 * u, np.zeros_like(u)], axis=1)
    f = fit_curve_vertex(CurveChain(P, False, T), 4, 2, hermite=True)
    np.testing.assert_allclose(f.frame.axes[:, 0], [1, 0, 0])
    v_axis = f.frame.axes[:, 1]
    # the height along the axis carrying y is u^2; the other height vanishes
    y_col = int(np.argmax(np.abs(f.frame.axes[1, 1:])))
    expect = np.zeros((3, 2))
    expect[2, y_col] = 1.0 / f.frame.axes[1, 1 + y_col]
    np.testing.assert_allclose(f.coefficients, expect, atol=1e-10)
    assert abs(v_axis @ [0, 0, 1]) in (0.0, 1.0)


def test_curve_ring_rules():
    assert initial_curve_ring(4, True) == 2
    assert initial_curve_ring(4, False) == 3
    assert initial_curve_ring(2, True) == 1


def test_helix_hermite_stencil():
    h = ConicalHelix()
    t = np.linspace(0, 2 * math.pi, 256)
    rec = CurveReconstructor([CurveChain(h.position(t), False, h.tangent(t))], 4, "hcmf")
    assert len(rec.vertex_stencil(0, 100)) == 5


@pytest.mark.parametrize("method", ["walf", "hwalf"])
def test_walf_edge_start_is_vertex(method):
    ch, T = circle_chain(32)
    ch = CurveChain(ch.points, True, T)
    x = project_point_curve(ch, 5, 0.0, method, 4)
    np.testing.assert_allclose(x, ch.points[5], atol=1e-14)


@pytest.mark.parametrize("method", ["cmf", "hcmf"])
def test_cmf_open_chain_ends_are_fixed(method):
    h = ConicalHelix()
    t = np.linspace(0, 1, 40)
    ch = CurveChain(h.position(t), False, h.tangent(t))
    np.testing.assert_array_equal(project_point_curve(ch, 0, 0.0, method, 4), ch.points[0])
    np.testing.assert_array_equal(project_point_curve(ch, 38, 1.0, method, 4), ch.points[-1])


def test_vertex_pair_orientation():
    ch, T = circle_chain(16)
    a = project_point_curve(ch, (3, 4), 0.25, "walf", 2)
    b = project_point_curve(ch, (4, 3), 0.75, "walf", 2)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_circle_midpoint_quadratic():
    circle = Circle()
    errs = []
    for n in (16, 32, 64):
        ch, _ = circle_chain(n, phase=0.1)
        x = project_point_curve(ch, 0, 0.5, "walf", 2)
        flat = 0.5 * (ch.points[0] + ch.points[1])
        d = circle.distance(x[None])[0]
        assert d < circle.distance(flat[None])[0]
        errs.append(d)
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) > 3.5


def test_helix_hcmf_quartic_rate():
    cfg = RunConfig(geometry="helix", method="hcmf", degree=4, levels=3)
    norms, counts = [], []
    for level in (1, 2, 3):
        e, n = curve_level_errors(ConicalHelix(), level, cfg)
        norms.append(error_l2_norm(e))
        counts.append(n)
    assert convergence_rate(norms, counts, 1) >= 4.5


@pytest.mark.parametrize("method", ["cmf", "walf", "hcmf", "hwalf"])
def test_cube_chains_meet_at_corners(method):
    m = cube_mesh(3)
    m = m.with_feature(detect_features(m, 30.0))
    chains = chains_from_mesh(m)
    rec = CurveReconstructor(chains, 4, method)
    corners = set(m.feature.corners)
    for c, ch in enumerate(chains):
        for edge, s, end in ((0, 0.0, 0), (ch.n_edges - 1, 1.0, -1)):
            vid = int(ch.vertex_ids[end])
            assert vid in corners
            x = rec.project(c, [edge], [s])[0]
            assert np.abs(x - m.vertices[vid]).max() <= 1e-13


def test_mesh_edge_lookup():
    m = cube_mesh(2)
    m = m.with_feature(detect_features(m, 30.0))
    rec = CurveReconstructor(chains_from_mesh(m), 2, "walf")
    a, b = next(iter(m.feature.feature_edges))
    x = rec.project_mesh_edge(a, b, [0.0, 1.0])
    np.testing.assert_allclose(x, m.vertices[[a, b]], atol=1e-14)
