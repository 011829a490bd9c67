"""Verify the three builtin worked examples and print a one-line summary each.

    python3 scripts/run_examples.py [--out DIR]
"""

import argparse
from pathlib import Path

from btwogrid.harness import ProblemSpec, emit_report, run_verification


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="directory for json reports")
    args = ap.parse_args()
    status = 0
    for k in (1, 2, 3):
        rep = run_verification(ProblemSpec(source={"builtin": k}))
        s = rep.summary
        print(f"example {k}: {s['pass']} pass, {s['fail']} fail, {s['skipped']} skipped")
        for c in rep.checks:
            if c.verdict == "fail":
                print(f"  FAIL {c.check_id}: {c.reason}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            emit_report(rep, "json", args.out / f"example{k}.json")
        status |= not rep.all_passed
    return status


if __name__ == "__main__":
    raise SystemExit(main())
