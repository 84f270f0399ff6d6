"""Command-line front end: ``coredim <subcommand> SPEC [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import report
from .errors import CoreDimError, SpecValidationError
from .mapspec import load_spec

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3

SUBCOMMANDS = ("validate", "orbits", "branch-sets", "fibers", "k0", "embed", "traces", "beta", "limit")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="spec file, or one of: tent, gasket, fullshift2")
    common.add_argument("--format", choices=("text", "json", "dot"), default="text")
    common.add_argument("--approx", action="store_true", help="add decimal renderings for humans")
    common.add_argument("--size-guard", type=int, default=None, metavar="DIM",
                        help="largest matrix dimension N^n to build (default 4096, "
                             "or $COREDIM_SIZE_GUARD)")

    parser = argparse.ArgumentParser(prog="coredim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a spec and print derived sets")
    p = sub.add_parser("orbits", parents=[common], help="p-q orbit families from a point")
    p.add_argument("--point", required=True)
    p.add_argument("--depth", type=int, default=3, help="largest p (default 3)")
    p.add_argument("-q", type=int, default=0, help="free continuation length (default 0)")
    p = sub.add_parser("branch-sets", parents=[common], help="branched points of the n-fold map")
    p.add_argument("-n", type=int, required=True)
    p = sub.add_parser("fibers", parents=[common], help="fiber block structure")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--point", default=None, help="a special point, or 'generic'")
    p.add_argument("--matrices", action="store_true", help="include Q and central projections (json)")
    for name, helptext in (("k0", "K0 lattice at level n"),
                           ("embed", "inclusion matrix from level n to n+1"),
                           ("beta", "endomorphism matrix from level n to n+1")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("-n", type=int, required=True)
    p = sub.add_parser("traces", parents=[common], help="trace pairing at level n")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--rmax", type=int, default=3)
    p = sub.add_parser("limit", parents=[common], help="inductive-limit report")
    p.add_argument("--max", type=int, required=True, dest="n_max")
    p.add_argument("--rmax", type=int, default=3)
    return parser


def _dispatch(args, spec):
    guard = args.size_guard
    cmd = args.command
    if cmd == "validate":
        return report.validate_report(spec), {}
    if cmd == "orbits":
        spec.require(args.point)
        return report.orbits_report(spec, args.point, args.depth, args.q), {"depth": args.depth}
    if cmd == "branch-sets":
        return report.branch_sets_report(spec, args.n), {"level": args.n}
    if cmd == "fibers":
        return report.fibers_report(spec, args.n, args.point, args.matrices, guard), {"level": args.n}
    if cmd == "k0":
        return report.k0_report(spec, args.n), {"level": args.n}
    if cmd == "embed":
        return report.embed_report(spec, args.n, guard), {"level": args.n}
    if cmd == "traces":
        return report.traces_report(spec, args.n, args.rmax, args.approx, guard), {"level": args.n}
    if cmd == "beta":
        return report.beta_report(spec, args.n, guard), {"level": args.n}
    if cmd == "limit":
        return report.limit_report_doc(spec, args.n_max, args.rmax, args.approx, guard), {"level": args.n_max}
    raise AssertionError(cmd)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format == "dot" and args.command != "orbits":
        parser.error("--format dot is only valid for the orbits subcommand")
    for flag in ("n", "n_max", "rmax", "depth", "q"):
        if getattr(args, flag, 0) is not None and getattr(args, flag, 0) < 0:
            parser.error(f"{flag} must be non-negative")

    try:
        spec = load_spec(args.spec)
    except SpecValidationError as err:
        if args.format == "json":
            doc = {"meta": {"spec": args.spec}, "result": {
                "valid": False, "diagnostics": [{"kind": d.kind, "detail": d.detail} for d in err.diagnostics]}}
            print(json.dumps(doc, indent=2, ensure_ascii=False))
        else:
            print(f"spec {args.spec}: invalid", file=sys.stderr)
            for d in err.diagnostics:
                print(f"  {d}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"error: cannot read {args.spec}: {err.strerror}", file=sys.stderr)
        return EXIT_USAGE

    try:
        (result, text), extra = _dispatch(args, spec)
    except CoreDimError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_COMPUTE

    if args.format == "json":
        doc = {"meta": report.meta(spec, command=args.command, **extra), "result": result}
        print(json.dumps(doc, indent=2, ensure_ascii=False))
    elif args.format == "dot":
        fams = report.orbit_families(spec, args.point, args.depth, args.q)
        sys.stdout.write(report.emit_orbit_dot(fams))
    else:
        print(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
