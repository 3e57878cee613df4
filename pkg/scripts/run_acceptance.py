#!/usr/bin/env python3
"""Run an acceptance suite and print one PASS/FAIL line per criterion.

    python3 scripts/run_acceptance.py [suite] [--seed N] [--json report.json]
"""

import argparse
import sys

from mplab.acceptance import SUITES, format_report, report_json, run_acceptance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("suite", nargs="?", default="all", choices=sorted(SUITES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the machine-readable report here")
    a = ap.parse_args(argv)
    results = run_acceptance(a.suite, seed=a.seed)
    print(format_report(results))
    if a.json:
        with open(a.json, "w", encoding="utf-8") as fh:
            fh.write(report_json(results) + "\n")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
