import json
import math

import jsonschema
import numpy as np
import pytest
from builders import grid_mesh

from hosr.cli import main
from hosr.errors import ConfigurationError
from hosr.harness import (EDGE_SAMPLES, TRIANGLE_SAMPLES, ConvergenceReport, LevelResult, RunConfig,
                          cmd_convergence, cmd_reconstruct, convergence_rate, error_l2_norm, load_schema)
from hosr.mesh import write_obj


def test_norm_examples():
    assert error_l2_norm([3.0, 4.0]) == pytest.approx(5 / math.sqrt(2))
    assert error_l2_norm(np.zeros(7)) == 0.0
    for n in (1, 5, 100):
        assert error_l2_norm(np.full(n, -2.5)) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        error_l2_norm([])


def test_rate_examples():
    assert convergence_rate([32.0, 1.0], [1, 4], 2) == pytest.approx(5.0)
    assert convergence_rate([16.0, 1.0], [1, 2], 1) == pytest.approx(4.0)
    assert convergence_rate([1.0, 1.0], [1, 4], 2) == 0.0
    assert math.isinf(convergence_rate([1.0, 0.0], [1, 4], 2))
    with pytest.raises(ValueError):
        convergence_rate([1.0], [1], 2)


@pytest.mark.parametrize("p", [1, 2, 4, 6])
def test_synthetic_rate_recovered(p):
    n = np.array([898, 3592, 14368])
    h = 1 / np.sqrt(n)
    assert abs(convergence_rate(3.7 * h ** (p + 1), n, 2) - (p + 1)) <= 1e-10


def test_sample_rules():
    b = TRIANGLE_SAMPLES[12]
    assert b.shape == (12, 3)
    np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-14)
    assert np.all(b > 0)
    np.testing.assert_allclose(EDGE_SAMPLES[4], 1 - EDGE_SAMPLES[4][::-1], atol=1e-15)


def test_saturated_report_in_json():
    rep = ConvergenceReport([LevelResult(1, 10, 1e-3, 2e-3), LevelResult(2, 40, 0.0, 0.0)], 2)
    d = rep.to_dict()
    assert d["rate"] is None and d["saturated"]
    jsonschema.validate(d, load_schema("convergence_report"))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(method="mls")
    with pytest.raises(ConfigurationError):
        RunConfig(degree=0)
    with pytest.raises(ConfigurationError):
        RunConfig(strategy="bogus")
    with pytest.raises(ConfigurationError):
        load_schema("nothing")


def test_csv_is_deterministic_and_plot_ready(tmp_path):
    paths = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        cmd_convergence(RunConfig(geometry="torus", method="hwalf", degree=2, levels=2, output_csv=str(out)))
        paths.append(out)
    a, b = (p.read_bytes() for p in paths)
    assert a == b
    assert b"\r" not in a
    lines = a.decode().splitlines()
    assert lines[0] == "level,n,err_l2,err_max"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert rows[0][2] >= rows[1][2] and rows[0][3] >= rows[1][3]
    report = json.loads((tmp_path / "run1.json").read_text())
    jsonschema.validate(report, load_schema("convergence_report"))


def test_sphere_quadratic_superconvergence():
    rep = cmd_convergence(RunConfig(geometry="sphere", method="hwalf", degree=2, levels=3))
    assert rep.rate >= 3.5
    assert all(a >= b for a, b in zip(rep.norms, rep.norms[1:]))


def test_torus_hermite_beats_point_cmf():
    norms = {}
    for method in ("hcmf", "cmf"):
        norms[method] = cmd_convergence(RunConfig(geometry="torus", method=method, degree=4, levels=1)).norms[-1]
    assert norms["hcmf"] <= 0.5 * norms["cmf"]


def test_helix_sextic_rate():
    rep = cmd_convergence(RunConfig(geometry="helix", method="hcmf", degree=6, levels=3))
    assert [r.n for r in rep.levels] == [256, 512, 1024]
    assert rep.rate >= 6.0


def test_feature_region_sampling():
    rep = cmd_convergence(RunConfig(geometry="double_sphere", method="hwalf", degree=2, levels=1,
                                    region="feature", evaluation="elements"))
    assert rep.levels[0].err_l2 > 0


def test_reconstruct_summary():
    hom, summary = cmd_reconstruct(RunConfig(geometry="torus", method="hwalf", degree=2))
    assert "nodes=" in summary
    assert len(hom.nodes) == hom.base.n_vertices + hom.base.n_edges


# ----------------------------------------------------------------------
# command line
# ----------------------------------------------------------------------


def test_cli_missing_input(tmp_path, capsys):
    missing = tmp_path / "absent.obj"
    rc = main(["reconstruct", "--in", str(missing), "--degree", "2", "--out", str(tmp_path / "o.json")])
    assert rc == 2
    assert str(missing) in capsys.readouterr().err


def test_cli_usage_error(capsys):
    assert main(["convergence", "--geom", "torus"]) == 2
    assert main(["reconstruct", "--in", "x.obj", "--out", "y.json", "--method", "mls"]) == 2


def test_cli_unknown_geometry(tmp_path, capsys):
    rc = main(["convergence", "--geom", "cone", "--out", str(tmp_path / "c.csv")])
    assert rc == 2
    assert "cone" in capsys.readouterr().err


def test_cli_reconstruct_torus_json_matches_schema(tmp_path):
    out = tmp_path / "torus.json"
    rc = main(["reconstruct", "--in", "torus:R=1,r=0.3", "--level", "1", "--degree", "2",
               "--method", "hwalf", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, load_schema("high_order_mesh"))
    assert doc["degree"] == 2
    n = len(doc["nodes"])
    for f in doc["faces"]:
        ids = f["corner_ids"] + sum(f["edge_node_ids"], []) + f["face_node_ids"]
        assert max(ids) < n


def test_cli_plane_obj_stays_planar(tmp_path):
    obj = tmp_path / "plane.obj"
    write_obj(grid_mesh(5, 5, spacing=0.2), str(obj))
    out = tmp_path / "plane.json"
    rc = main(["reconstruct", "--in", str(obj), "--degree", "4", "--method", "hcmf", "--normals", "estimate",
               "--out", str(out)])
    assert rc == 0
    nodes = np.array(json.loads(out.read_text())["nodes"])
    # 36 vertices, 85 edges with 3 nodes each, 50 faces with 3 interior nodes each
    assert len(nodes) == 36 + 3 * 85 + 3 * 50
    assert np.abs(nodes[:, 2]).max() <= 1e-12


def test_cli_obj_with_feature_tags(tmp_path):
    from builders import cube_mesh

    from hosr.mesh import detect_features, write_feature_tags

    cube = cube_mesh(2)
    obj, tags = tmp_path / "cube.obj", tmp_path / "cube.tags"
    write_obj(cube, str(obj))
    write_feature_tags(detect_features(cube, 30.0), str(tags))
    out = tmp_path / "cube.json"
    rc = main(["reconstruct", "--in", str(obj), "--features", str(tags), "--degree", "2", "--method", "walf",
               "--normals", "estimate", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert len(doc["feature_edges"]) == 24
    nodes = np.array(doc["nodes"])
    # a cube is piecewise flat, so every node stays on the unit cube surface
    on_face = np.any(np.isclose(nodes, 0.0, atol=1e-12) | np.isclose(nodes, 1.0, atol=1e-12), axis=1)
    assert on_face.all()


def test_cli_convergence_writes_reports(tmp_path, capsys):
    csv_path = tmp_path / "helix.csv"
    rc = main(["convergence", "--geom", "helix", "--degree", "2", "--method", "cmf", "--levels", "2",
               "--out", str(csv_path)])
    assert rc == 0
    assert "rate" in capsys.readouterr().out
    doc = json.loads(csv_path.with_suffix(".json").read_text())
    jsonschema.validate(doc, load_schema("convergence_report"))
    assert doc["dimension"] == 1
