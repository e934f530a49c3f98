"""Command line: ``fracsob run <config>``, ``fracsob verify``, ``fracsob print-constants``.

Exit status is 0 when every reported claim passes, 2 when a claim fails and
1 for usage errors (bad arguments, malformed configs, invalid parameters,
violated preconditions, unwritable outputs).
"""

import argparse
import sys

from . import acceptance, config, constants, reference, runner
from .params import make_params
from .report import ReportError, fmt

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


def _print_checks(checks, out):
    for c in checks:
        print(c.line(), file=out)


def cmd_run(args, out):
    cfg = config.load(args.config)
    progress = None
    if cfg.experiment == "verify-all":
        progress = lambda oc: print(oc.summary(), file=out, flush=True)
    checks = runner.run_config(cfg, progress)
    _print_checks(checks, out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_verify(args, out):
    numbers = None
    if args.only:
        try:
            numbers = [int(t) for t in args.only.split(",")]
        except ValueError:
            raise config.ConfigError(f"--only expects comma-separated integers, got {args.only!r}") from None
        bad = [k for k in numbers if k not in acceptance.TITLES]
        if bad:
            raise config.ConfigError(f"unknown criteria {bad}")
    text = f"experiment = verify-all\noutput = {args.output}\nseed = {args.seed}\n"
    cfg = config.parse_text(text, "<verify>")
    checks = runner.run_config(cfg, lambda oc: print(oc.summary(), file=out, flush=True), numbers)
    _print_checks(checks, out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_constants(args, out):
    p = make_params(args.n, args.sigma)
    rows = [("a_const", constants.a_const(p)), ("kappa", constants.kappa(p)),
            ("c0", constants.c0(p)), ("reference_quotient", reference.reference_quotient(p))]
    for k, v in rows:
        print(f"{k} = {fmt(v)}", file=out)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="fracsob",
                                 description="Regional fractional Sobolev quotients and scans.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    v = sub.add_parser("verify", help="run the built-in acceptance suite")
    v.add_argument("--output", default="verify-out")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--only", default="", help="comma-separated criterion numbers")
    c = sub.add_parser("print-constants", help="print kernel constants and the reference quotient")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--sigma", type=float, required=True)
    return ap


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "print-constants": cmd_constants}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except (ValueError, ReportError) as exc:
        # every library error derives from ValueError; ReportError covers I/O
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
