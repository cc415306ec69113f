"""Reconstruction runs and convergence studies with CSV/JSON reports."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from importlib import resources
from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import CurveChain, CurveReconstructor
from .elements import build_high_order_mesh, default_strategy, feature_incident_faces, natural_to_barycentric
from .errors import ConfigurationError
from .geometry import AnalyticCurve, AnalyticSurface, helix_polyline, parse_geometry
from .mesh import detect_features, load_obj, read_feature_tags
from .surface import MethodConfig, SurfaceReconstructor, parse_method

# Barycentric abscissae of the symmetric 12-point degree-6 triangle rule
# (Dunavant 1985); only the locations are used.
_D6_A = (0.873821971016996, 0.063089014491502)
_D6_B = (0.501426509658179, 0.249286745170910)
_D6_C = (0.636502499121399, 0.310352451033785, 0.053145049844816)


def _triangle_samples_12() -> np.ndarray:
    a, b = _D6_A
    c, d = _D6_B
    x, y, z = _D6_C
    rows = [(a, b, b), (b, a, b), (b, b, a), (c, d, d), (d, c, d), (d, d, c),
            (x, y, z), (x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)]
    return np.array(rows)


TRIANGLE_SAMPLES = {
    1: np.array([[1 / 3, 1 / 3, 1 / 3]]),
    12: _triangle_samples_12(),
}

# Gauss-Legendre points on [0, 1] for curve edges
EDGE_SAMPLES = {k: 0.5 * (np.polynomial.legendre.leggauss(k)[0] + 1.0) for k in (1, 2, 3, 4, 6)}


def error_l2_norm(e) -> float:
    """Root mean square of the pointwise errors."""
    e = np.asarray(e, float).ravel()
    if e.size == 0:
        raise ValueError("error vector is empty")
    return float(np.sqrt(np.mean(e * e)))


def convergence_rate(norms, counts, d: int) -> float:
    """``d * ln(e_1 / e_k) / ln(n_k / n_1)`` over the first and last level.

    Returns ``inf`` (saturated) when an error is zero or negative.
    """
    norms = np.asarray(norms, float)
    counts = np.asarray(counts, float)
    if len(norms) < 2 or len(norms) != len(counts):
        raise ValueError("need at least two levels with matching counts")
    if counts[-1] <= counts[0]:
        raise ValueError("point counts must increase")
    if norms[0] <= 0 or norms[-1] <= 0:
        return math.inf
    return d * math.log(norms[0] / norms[-1]) / math.log(counts[-1] / counts[0])


@dataclass
class RunConfig:
    geometry: str = "sphere"
    method: str = "hwalf"
    degree: int = 2
    strategy: str | None = None
    levels: int = 3
    start_level: int = 1
    normals_source: str = "auto"
    samples: int = 12
    evaluation: str = "direct"  # "direct" point projection or "elements"
    region: str = "all"  # "all" or "feature" (feature-incident faces only)
    cond_limit: float = 1e8
    weights: str = "wendland"
    interpolatory: bool = True
    seed: int | None = None
    input_path: str | None = None
    features_path: str | None = None
    dihedral: float | None = None
    output_csv: str | None = None
    output_json: str | None = None
    output_mesh: str | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigurationError("levels must be >= 1")
        if not 1 <= self.degree <= 8:
            raise ConfigurationError("degree must lie in [1, 8]")
        parse_method(self.method)
        if self.strategy is not None and self.strategy.lower() not in ("nonfap", "fap", "ifap"):
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.evaluation not in ("direct", "elements"):
            raise ConfigurationError(f"unknown evaluation mode {self.evaluation!r}")
        if self.region not in ("all", "feature"):
            raise ConfigurationError(f"unknown region {self.region!r}")

    def method_config(self) -> MethodConfig:
        return MethodConfig(self.method, self.degree, self.normals_source, self.interpolatory,
                            self.cond_limit, self.weights)


@dataclass
class LevelResult:
    level: int
    n: int
    err_l2: float
    err_max: float
    seconds: float = 0.0


@dataclass
class ConvergenceReport:
    levels: list
    dimension: int
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def norms(self):
        return [r.err_l2 for r in self.levels]

    @property
    def counts(self):
        return [r.n for r in self.levels]

    @property
    def rate(self):
        if len(self.levels) < 2:
            return None
        return convergence_rate(self.norms, self.counts, self.dimension)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "n", "err_l2", "err_max"])
            for r in self.levels:
                w.writerow([r.level, r.n, repr(float(r.err_l2)), repr(float(r.err_max))])

    def to_dict(self) -> dict:
        rate = self.rate
        return {
            "levels": [asdict(r) for r in self.levels],
            "rate": None if rate is None or math.isinf(rate) else rate,
            "saturated": rate is not None and math.isinf(rate),
            "dimension": self.dimension,
            "config": self.config,
            "wall_time": self.wall_time,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


# ----------------------------------------------------------------------
# single levels
# ----------------------------------------------------------------------


def surface_level_errors(surface: AnalyticSurface, mesh, cfg: RunConfig, *, reconstructor=None) -> np.ndarray:
    """Oracle distances of reconstructed sample points on one mesh."""
    if cfg.samples not in TRIANGLE_SAMPLES:
        raise ConfigurationError(f"unsupported per-face sample count {cfg.samples}")
    bary = TRIANGLE_SAMPLES[cfg.samples]
    faces = np.arange(mesh.n_faces) if cfg.region == "all" else feature_incident_faces(mesh)
    if len(faces) == 0:
        raise ConfigurationError("no faces to sample")
    mcfg = cfg.method_config()
    if cfg.evaluation == "direct":
        rec = reconstructor or SurfaceReconstructor(mesh, mcfg, surface=surface)
        tri = np.repeat(faces, len(bary))
        X = rec.project(tri, np.tile(bary, (len(faces), 1)))
    else:
        strategy = cfg.strategy or default_strategy(cfg.degree)
        hom = build_high_order_mesh(mesh, cfg.degree, mcfg, strategy, surface=surface, faces=faces)
        X = hom.evaluate(faces, bary[:, 1:]).reshape(-1, 3)
    return surface.closest_points(X)[1]


def curve_level_errors(curve: AnalyticCurve, level: int, cfg: RunConfig, samples_per_edge: int = 4):
    """Oracle distances on a reconstructed helix polyline; returns ``(errors, n_vertices)``."""
    P, T, _ = helix_polyline(level, curve)
    tangents = T if cfg.normals_source in ("auto", "oracle") else None
    chain = CurveChain(P, False, tangents)
    rec = CurveReconstructor([chain], cfg.degree, cfg.method, cfg.interpolatory, cfg.cond_limit, cfg.weights)
    s = EDGE_SAMPLES[samples_per_edge]
    edges = np.repeat(np.arange(chain.n_edges), len(s))
    X = rec.project(0, edges, np.tile(s, chain.n_edges))
    return curve.closest_points(X)[1], len(P)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_convergence(cfg: RunConfig) -> ConvergenceReport:
    """Run every refinement level and write the CSV/JSON reports if requested."""
    geom = parse_geometry(cfg.geometry)
    t0 = time.perf_counter()
    results = []
    is_curve = isinstance(geom, AnalyticCurve)
    for level in range(cfg.start_level, cfg.start_level + cfg.levels):
        tl = time.perf_counter()
        if is_curve:
            err, n = curve_level_errors(geom, level, cfg)
        else:
            mesh = geom.generate_mesh(level)
            err = surface_level_errors(geom, mesh, cfg)
            n = mesh.n_vertices
        results.append(LevelResult(level, int(n), error_l2_norm(err), float(np.max(err)),
                                   time.perf_counter() - tl))
    report = ConvergenceReport(results, 1 if is_curve else 2, _config_echo(cfg), time.perf_counter() - t0)
    if cfg.output_csv:
        report.write_csv(cfg.output_csv)
    json_path = cfg.output_json or (os.path.splitext(cfg.output_csv)[0] + ".json" if cfg.output_csv else None)
    if json_path:
        report.write_json(json_path)
    return report


def _config_echo(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    for key in ("output_csv", "output_json", "output_mesh"):
        out.pop(key)
    return out


def load_input(cfg: RunConfig, level: int = 1):
    """``(mesh, surface_or_None)`` from an OBJ path or a geometry spec."""
    src = cfg.input_path or cfg.geometry
    if src.lower().endswith(".obj") or os.path.sep in src or os.path.exists(src):
        tags = read_feature_tags(cfg.features_path) if cfg.features_path else None
        mesh = load_obj(src, tags)
        if tags is None and cfg.dihedral is not None:
            mesh = mesh.with_feature(detect_features(mesh, cfg.dihedral))
        return mesh, None
    geom = parse_geometry(src)
    if not isinstance(geom, AnalyticSurface):
        raise ConfigurationError(f"{src!r} is not a surface")
    return geom.generate_mesh(level), geom


def cmd_reconstruct(cfg: RunConfig, level: int = 1):
    """Build the degree-p mesh, write its JSON, and return ``(mesh, summary)``."""
    mesh, surface = load_input(cfg, level)
    strategy = cfg.strategy or default_strategy(cfg.degree)
    hom = build_high_order_mesh(mesh, cfg.degree, cfg.method_config(), strategy, surface=surface)
    if cfg.output_mesh:
        hom.write_json(cfg.output_mesh)
    p = cfg.degree
    disp = 0.0
    if p > 1:
        ts = hom.node_set.edge_params
        E = mesh.edges
        lin = (1 - ts)[None, :, None] * mesh.vertices[E[:, 0]][:, None] + ts[None, :, None] * mesh.vertices[E[:, 1]][:, None]
        V = mesh.n_vertices
        placed = hom.nodes[V:V + mesh.n_edges * (p - 1)].reshape(mesh.n_edges, p - 1, 3)
        disp = float(np.max(np.linalg.norm(placed - lin, axis=2)))
    summary = (f"degree={p} strategy={strategy} vertices={mesh.n_vertices} faces={mesh.n_faces} "
               f"nodes={len(hom.nodes)} max_edge_displacement={disp:.6e}")
    return hom, summary


def load_schema(kind: str) -> dict:
    """JSON Schema for ``"high_order_mesh"`` or ``"convergence_report"`` output."""
    if kind not in ("high_order_mesh", "convergence_report"):
        raise ConfigurationError(f"no schema named {kind!r}")
    text = resources.files("hosr").joinpath("schemas", f"{kind}.schema.json").read_text()
    return json.loads(text)


def sample_bary(samples: int = 12) -> np.ndarray:
    return TRIANGLE_SAMPLES[samples].copy()


def sample_natural(samples: int = 12) -> np.ndarray:
    return TRIANGLE_SAMPLES[samples][:, 1:].copy()


__all__ = [
    "ConvergenceReport", "LevelResult", "RunConfig", "cmd_convergence", "cmd_reconstruct",
    "convergence_rate", "curve_level_errors", "error_l2_norm", "load_schema", "natural_to_barycentric",
    "surface_level_errors",
]
