"""Command-line surface: dimension tables, the wheels element, the gluing
calculator, verification campaigns, and cache management."""

from __future__ import annotations

import argparse
import os
import sys
import time

from .diagrams import (
    KINDS,
    canonical_form,
    parse_diagram,
)
from .errors import JdiagError, ResourceLimitError, UnsupportedAlgebraError
from .rationals import rat_from_str, rat_to_str
from .reports import FAIL, PASS, CheckRecord, Report
from .spaces import Combo, cache_load, cache_path, space_dimension
from .wheeling import (
    glue_all_legs,
    omega_series,
    verify_wheeling,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _global_flags(parser):
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--cache-dir", default=None)
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; runs are deterministic and serial")
    parser.add_argument("--form-scale", default="1",
                        help="rational rescaling P/Q of the invariant form")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jdiag",
        description="exact engine for uni-trivalent diagram algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dims", help="dimension table of the quotients")
    p.add_argument("--kind", choices=sorted(KINDS), required=True)
    p.add_argument("--max-degree", type=int, required=True)
    _global_flags(p)

    p = sub.add_parser("omega", help="wheels element term list")
    p.add_argument("--max-degree", type=int, required=True)
    _global_flags(p)

    p = sub.add_parser("glue", help="glue all legs of one character into another")
    p.add_argument("--c", required=True, metavar="FILE")
    p.add_argument("--cprime", required=True, metavar="FILE")
    _global_flags(p)

    p = sub.add_parser("chi", help="average a character's legs onto a skeleton")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    _global_flags(p)

    p = sub.add_parser("sigma", help="invert the averaging map")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--max-degree", type=int, required=True)
    _global_flags(p)

    p = sub.add_parser("verify", help="verification campaigns")
    vsub = p.add_subparsers(dest="verify_what", required=True)
    vw = vsub.add_parser("wheeling")
    vw.add_argument("--max-degree", type=int, required=True)
    _global_flags(vw)
    vt = vsub.add_parser("wheels")
    vt.add_argument("--algebra", choices=("sl2", "sl3"), required=True)
    vt.add_argument("--x-degree", type=int, default=None)
    _global_flags(vt)
    vc = vsub.add_parser("face-ce")
    vc.add_argument("--max-degree", type=int, required=True)
    _global_flags(vc)

    p = sub.add_parser("weights", help="weight-system image of a character")
    p.add_argument("--algebra", required=True,
                   help="sl2, sl3, or slN for any small N")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    _global_flags(p)

    p = sub.add_parser("cache", help="quotient cache management")
    p.add_argument("action", choices=("rebuild", "status"))
    p.add_argument("--dir", required=True)
    p.add_argument("--max-degree", type=int, default=3)
    _global_flags(p)

    return parser


def _parse_algebra(name, form_scale):
    from .liealg import make_sl

    if not name.startswith("sl"):
        raise UnsupportedAlgebraError("only sl algebras are implemented")
    try:
        n = int(name[2:])
    except ValueError:
        raise UnsupportedAlgebraError("cannot parse algebra %r" % name)
    return make_sl(n, form_scale)


def _combo_records(report, combo, label):
    for cd, coeff in combo.sorted_terms():
        report.add(CheckRecord(
            name=label,
            inputs={"diagram": cd.bytes.decode(),
                    "coefficient": rat_to_str(coeff)},
            status=PASS, wall_time=0.0))


def _load_diagram_combo(path, kind):
    with open(path) as fh:
        d = parse_diagram(fh.read())
    return d, Combo.from_diagram(kind, d)


def run_command(argv):
    """Execute one CLI invocation; returns (exit code, rendered report)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code not in (0, None) else EXIT_OK), ""
    try:
        report = _dispatch(args, argv)
    except ResourceLimitError as exc:
        return EXIT_RESOURCE, "resource limit: %s\n" % exc
    except (JdiagError, OSError, ValueError) as exc:
        return EXIT_USAGE, "error: %s\n" % exc
    text = report.to_json() + "\n" if args.format == "json" else report.to_text()
    return (EXIT_OK if report.ok else EXIT_VERIFY_FAILED), text


def _dispatch(args, argv):
    from .diagrams import BPRIME

    command = " ".join(argv)
    scale = rat_from_str(args.form_scale)

    if args.command == "dims":
        kind = KINDS[args.kind]
        report = Report(command=command,
                        config={"kind": args.kind,
                                "max_degree": args.max_degree})
        for m in range(args.max_degree + 1):
            t0 = time.time()
            dim = space_dimension(m, kind, cache_dir=args.cache_dir)
            report.add(CheckRecord(
                name="dimension", status=PASS, wall_time=time.time() - t0,
                inputs={"kind": args.kind, "degree": m, "dimension": dim}))
        return report

    if args.command == "omega":
        report = Report(command=command,
                        config={"max_degree": args.max_degree})
        om = omega_series(args.max_degree)
        for parts, coeff in om.presentation:
            label = " u ".join("w%d" % p for p in parts) if parts else "1"
            report.add(CheckRecord(
                name="omega term", status=PASS, wall_time=0.0,
                inputs={"wheels": label, "coefficient": rat_to_str(coeff)}))
        _combo_records(report, om.value, "omega canonical term")
        return report

    if args.command == "glue":
        report = Report(command=command, config={})
        dc, _ = _load_diagram_combo(args.c, BPRIME)
        dt, _ = _load_diagram_combo(args.cprime, BPRIME)
        t0 = time.time()
        out = glue_all_legs(dc, dt)
        report.add(CheckRecord(
            name="glue", status=PASS, wall_time=time.time() - t0,
            inputs={"terms": len(out.terms)}))
        _combo_records(report, out, "glued term")
        return report

    if args.command == "chi":
        from .algebra_maps import chi_map

        report = Report(command=command, config={})
        _, combo = _load_diagram_combo(args.infile, BPRIME)
        _combo_records(report, chi_map(combo), "interval term")
        return report

    if args.command == "sigma":
        from .algebra_maps import sigma_map
        from .diagrams import APRIME

        report = Report(command=command,
                        config={"max_degree": args.max_degree})
        _, combo = _load_diagram_combo(args.infile, APRIME)
        _combo_records(report, sigma_map(combo, args.max_degree),
                       "character term")
        return report

    if args.command == "verify":
        if args.verify_what == "wheeling":
            return verify_wheeling(args.max_degree)
        if args.verify_what == "wheels":
            from .liealg import verify_wheels_theorem

            lie = _parse_algebra(args.algebra, scale)
            return verify_wheels_theorem(lie, args.x_degree)
        from .liealg import verify_face_ce

        return verify_face_ce(_parse_algebra("sl2", scale), args.max_degree)

    if args.command == "weights":
        from .liealg import tg_weight

        report = Report(command=command,
                        config={"algebra": args.algebra,
                                "form_scale": str(scale)})
        lie = _parse_algebra(args.algebra, scale)
        _, combo = _load_diagram_combo(args.infile, BPRIME)
        series = tg_weight(lie, combo)
        for (exps, h), c in series.sorted_terms():
            mono = " ".join("x%d^%d" % (i, e) for i, e in enumerate(exps) if e)
            report.add(CheckRecord(
                name="weight term", status=PASS, wall_time=0.0,
                inputs={"monomial": mono or "1", "h_power": h,
                        "coefficient": rat_to_str(c)}))
        return report

    if args.command == "cache":
        report = Report(command=command,
                        config={"dir": args.dir,
                                "max_degree": args.max_degree})
        kinds = sorted(KINDS)
        if args.action == "rebuild":
            os.makedirs(args.dir, exist_ok=True)
            for name in kinds:
                for m in range(args.max_degree + 1):
                    t0 = time.time()
                    dim = space_dimension(m, KINDS[name], cache_dir=args.dir)
                    report.add(CheckRecord(
                        name="rebuilt", status=PASS,
                        wall_time=time.time() - t0,
                        inputs={"kind": name, "degree": m, "dimension": dim}))
            return report
        for name in kinds:
            for m in range(args.max_degree + 1):
                path = cache_path(args.dir, m, KINDS[name])
                t0 = time.time()
                if not os.path.exists(path):
                    status, note = PASS, "absent"
                else:
                    try:
                        cache_load(m, KINDS[name], path)
                        status, note = PASS, "ok"
                    except JdiagError as exc:
                        status, note = FAIL, str(exc)
                report.add(CheckRecord(
                    name="cache file", status=status,
                    wall_time=time.time() - t0,
                    inputs={"kind": name, "degree": m, "state": note}))
        return report

    raise JdiagError("unknown command")


def main():
    code, text = run_command(sys.argv[1:])
    if text:
        sys.stdout.write(text)
    sys.exit(code)


if __name__ == "__main__":
    main()
