#!/usr/bin/env python3
"""Completeness and L-infinity positivity verdicts over the six-profile suite.

Writes a CSV (profile, sc_verdict, volume_verdict, linfty_verdict, agree).
Parallelism is capped by MPLAB_THREADS.
"""

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor

from mplab.acceptance import suite_profiles, sweep_workers
from mplab.completeness import sc_ode_test, volume_oracle
from mplab.scheme import positivity_experiment

_EXPECTED = {"VIOLATED": "INCOMPLETE_EVIDENCE", "CONSISTENT": "COMPLETE_EVIDENCE"}


def row(item):
    name, M = item
    sc = sc_ode_test(M, lam=1.0).verdict.value
    vol = volume_oracle(M)["verdict"]
    lin = positivity_experiment(M, "linfty")["verdict"]
    agree = sc == "INCONCLUSIVE" or _EXPECTED.get(lin) == sc
    return [name, sc, vol, lin, agree]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="profile_sweep.csv")
    a = ap.parse_args(argv)
    with ThreadPoolExecutor(max_workers=sweep_workers()) as pool:
        rows = list(pool.map(row, suite_profiles()))
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["profile", "sc_verdict", "volume_verdict", "linfty_verdict", "agree"])
        w.writerows(rows)
    for r in rows:
        print(f"{r[0]:>14}  {r[1]:<20} {r[2]:<8} {r[3]:<12} {'ok' if r[4] else 'MISMATCH'}")
    return 0 if all(r[4] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
