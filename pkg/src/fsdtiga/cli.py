"""Command line entry point: ``fsdtiga run|convergence|compare <config>``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import kernels
from .cases import compare, convergence, load_config, parse_degree, run
from .errors import ConfigurationError, DomainError, GeometryError, ModelError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="flat key = value case file")
    common.add_argument("--degree", help="spline degree 'p' or 'p,q'")
    common.add_argument("--refine", type=int, help="uniform refinement level (2**k cells per patch side)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--probe", help="probe point 'x,y' in rescaled coordinates")
    common.add_argument("--solver", choices=("direct", "cg"))
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="fsdtiga", description="Rescaled shear-deformable plate solver (NURBS)")
    ap.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="solve one case and write VTK, line CSV and summary")
    conv = sub.add_parser("convergence", parents=[common], help="refinement study against the closed form")
    conv.add_argument("--levels", type=int, default=4, help="number of refinement levels (>= 3)")
    sub.add_parser("compare", parents=[common], help="numeric vs closed-form profiles along the case line")
    return ap


def _configure(args):
    cfg = load_config(args.config)
    kw = {}
    if args.degree:
        kw["degree"] = parse_degree(args.degree)
    if args.refine is not None:
        kw["refine"] = args.refine
        kw["elements"] = None
    if args.out:
        kw["out"] = args.out
    if args.probe:
        try:
            x, y = (float(v) for v in args.probe.split(","))
        except ValueError as exc:
            raise ConfigurationError(f"--probe expects 'x,y', got {args.probe!r}") from exc
        kw["probe"] = (x, y)
    if args.solver:
        kw["solver"] = args.solver
    return cfg.replace(**kw) if kw else cfg


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _configure(args)
        if args.command == "run":
            res = run(cfg)
            print("\n".join(res["summary"]))
        elif args.command == "convergence":
            study, slope = convergence(cfg, args.levels)
            print(f"{'ndofs':>8} {'deflection':>22} {'rel. error':>12} {'L2 error':>12} {'sqrt L2':>12}")
            for r in study.rows:
                print(f"{r.ndofs:8d} {r.deflection:22.15g} {r.deflection_error:12.4e} {r.l2_error:12.4e} {r.l2_error_rooted:12.4e}")
            print(f"slope (sqrt L2 vs element size, last 3 levels): {slope:.3f}")
        else:
            table = compare(cfg)
            dev = abs(table["u_true"] - table["u_true_exact"]).max()
            print(f"{cfg.label}: {len(table['s'])} samples, max |u_true - closed form| = {dev:.4e}")
    except (ConfigurationError, DomainError, ModelError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
