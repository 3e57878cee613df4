#!/usr/bin/env python3
"""Cusp supersolution check, L1 mass and mass bound for a range of epsilon (CSV on stdout)."""

import argparse
import csv
import sys

from mplab.counterexamples import build_cusp, l1_mass, verify_supersolution


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilon", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--tmax", type=float, default=50.0)
    a = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\r\n")
    w.writerow(["epsilon", "t_eps", "min_residual_sign", "boundary_flux", "supersolution", "l1_mass", "l1_bound"])
    ok = True
    for e in a.epsilon:
        F = build_cusp(e)
        rep = verify_supersolution(F, tmax=a.tmax)
        m = l1_mass(F)
        ok &= rep["passed"] and m["finite"]
        w.writerow([e, F.t_eps, rep["min_residual_sign"], rep["boundary_flux"], rep["passed"], m["mass"], m["bound"]])
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
