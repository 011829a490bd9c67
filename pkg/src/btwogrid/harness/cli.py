"""Command line: ``btwogrid verify | example | generate``.

Exit status is 0 when every executed check passes, 1 when any check fails
and 2 for configuration or parse errors.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import BTwoGridError
from . import mmio
from .problems import ProblemSpec, convection_diffusion
from .report import emit_report
from .verify import run_verification

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _add_run_options(p):
    p.add_argument("--out", help="write the report here (default: stdout)")
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--seed", type=int)
    p.add_argument("--nu1", type=int)
    p.add_argument("--nu2", type=int)
    p.add_argument("--nc", type=int, dest="n_c")
    p.add_argument("--trials", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btwogrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the verification pipeline on a problem spec")
    v.add_argument("--problem", required=True, help="problem spec JSON file")
    v.add_argument("--omega", type=float, help="smoother damping (default: 1 / estimated spectral radius)")
    _add_run_options(v)

    e = sub.add_parser("example", help="verify one of the builtin worked examples")
    e.add_argument("which", type=int, choices=(1, 2, 3))
    _add_run_options(e)

    g = sub.add_parser("generate", help="write a generated test matrix in Matrix Market format")
    g.add_argument("--type", choices=("conv-diff",), default="conv-diff")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--scheme", choices=("central", "upwind"), default="central")
    g.add_argument("--out", required=True)
    return parser


def _run(spec: ProblemSpec, args) -> int:
    spec = spec.with_(seed=args.seed, nu1=args.nu1, nu2=args.nu2, n_c=args.n_c, trials=args.trials,
                      omega=getattr(args, "omega", None))
    report = run_verification(spec)
    text = emit_report(report, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        s = report.summary
        print(f"{s['pass']} pass, {s['fail']} fail, {s['skipped']} skipped -> {args.out}", file=sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _run(ProblemSpec.from_json(args.problem), args)
        if args.command == "example":
            return _run(ProblemSpec(source={"builtin": args.which}), args)
        a = convection_diffusion(args.n, args.beta, args.scheme)
        path = mmio.write_matrix(args.out, a, comment=f"1D convection-diffusion n={args.n} beta={args.beta} "
                                                      f"{args.scheme}")
        print(f"wrote {path}", file=sys.stderr)
        return EXIT_OK
    except (BTwoGridError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
