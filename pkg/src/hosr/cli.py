"""``hosr`` command line: ``reconstruct`` and ``convergence``.

Exit status: 0 on success, 1 on a numerical failure, 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ._runtime import tune_allocator
from .errors import ConfigurationError, DegenerateStencilError, GeometryError, NodeSetError, ParseError, TopologyError
from .harness import RunConfig, cmd_convergence, cmd_reconstruct

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

_NORMALS = {"obj": "mesh", "oracle": "oracle", "estimate": "estimate", "auto": "auto"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--method", default="hwalf", choices=["cmf", "walf", "hcmf", "hwalf"])
    p.add_argument("--strategy", choices=["nonfap", "fap", "ifap"], default=None,
                   help="intermediate-node strategy for feature elements (default: ifap for p>=4, else fap)")
    p.add_argument("--normals", choices=sorted(_NORMALS), default="auto")
    p.add_argument("--cond-limit", type=float, default=1e8)
    p.add_argument("--weights", choices=["wendland", "invdist"], default="wendland")
    p.add_argument("--features", metavar="TAGFILE", help="feature tag file for OBJ input")
    p.add_argument("--dihedral", type=float, metavar="DEG", help="detect features above this dihedral angle")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized diagnostics (none are randomized)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hosr", description="High-order surface and curve reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="write a degree-p high-order mesh as JSON")
    rec.add_argument("--in", dest="input", required=True, metavar="OBJ|GEOM",
                     help="OBJ file or geometry spec such as torus:R=1,r=0.3")
    rec.add_argument("--level", type=int, default=1, help="refinement level for geometry specs")
    rec.add_argument("--out", required=True, metavar="JSON")
    _common(rec)

    conv = sub.add_parser("convergence", help="convergence study over refinement levels")
    conv.add_argument("--geom", required=True, metavar="SPEC", help="sphere, torus, double_sphere or helix")
    conv.add_argument("--levels", type=int, default=3)
    conv.add_argument("--start-level", type=int, default=1)
    conv.add_argument("--samples", type=int, default=12, choices=[1, 12], help="sample points per face")
    conv.add_argument("--evaluation", choices=["direct", "elements"], default="direct")
    conv.add_argument("--region", choices=["all", "feature"], default="all")
    conv.add_argument("--out", required=True, metavar="CSV")
    conv.add_argument("--json", default=None, metavar="JSON", help="report path (default: CSV path with .json)")
    _common(conv)
    return parser


def _config(args) -> RunConfig:
    common = dict(method=args.method, degree=args.degree, strategy=args.strategy,
                  normals_source=_NORMALS[args.normals], cond_limit=args.cond_limit, weights=args.weights,
                  seed=args.seed, features_path=args.features, dihedral=args.dihedral)
    if args.command == "reconstruct":
        return RunConfig(geometry=args.input, input_path=None, output_mesh=args.out, **common)
    return RunConfig(geometry=args.geom, levels=args.levels, start_level=args.start_level, samples=args.samples,
                     evaluation=args.evaluation, region=args.region, output_csv=args.out, output_json=args.json,
                     **common)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    tune_allocator()
    try:
        cfg = _config(args)
        if args.command == "reconstruct":
            _, summary = cmd_reconstruct(cfg, args.level)
            print(summary)
        else:
            report = cmd_convergence(cfg)
            for r in report.levels:
                print(f"level {r.level}: n={r.n} err_l2={r.err_l2:.6e} err_max={r.err_max:.6e}")
            rate = report.rate
            if rate is not None:
                print(f"rate {rate:.4f}")
    except (OSError, ConfigurationError, ParseError, TopologyError) as exc:
        if isinstance(exc, OSError):
            msg = f"cannot open {exc.filename or exc.args[0]}"
        else:
            msg = str(exc)
        print(f"hosr: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateStencilError, GeometryError, NodeSetError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"hosr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
