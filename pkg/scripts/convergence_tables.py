#!/usr/bin/env python3
"""Convergence tables as CSV: Riemann sums on the square, the cube-stream
Cauchy rate, and the time-depth sweep of the flow theorem."""
import argparse
import csv
from pathlib import Path

from chaincalc import flow as fl
from chaincalc import form as fm
from chaincalc import rep
from chaincalc.suites import monomial_integral


def riemann(out: Path, j_max: int):
    exps = (3, 2)
    w = fm.PolyForm.from_terms(2, 2, [((1, 2), exps, 1.0)])
    exact = float(monomial_integral(exps))
    S = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    res = rep.integrateStream(w, S, rep.IntegrationConfig(0, j_max))
    with out.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "value", "error", "accelerated_error", "certified_bound"])
        for r in res.rows:
            wr.writerow([r["j"], repr(r["value"]), repr(abs(r["value"] - exact)),
                         repr(abs(r["accelerated"] - exact)), repr(r["certified_bound"])])


def cube_rate(out: Path, n: int, j_max: int):
    with out.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "normUB", "stated_bound"])
        for j in range(1, j_max + 1):
            T = rep.cube_difference((0.0,) * n, (1.0,) * n, j)
            wr.writerow([j, repr(T.normUB(1)), repr(2.0 ** (-j + 1))])


def ftc(out: Path, depths):
    J0 = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    w = fm.PolyForm.from_terms(2, 2, [((1, 2), (1, 1), 1.0)])
    T = fl.ftcTable(J0, fl.dilation_field(), w, 0.0, 0.5, depths, space_depth=4)
    out.write_text(T.csv())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--quick", action="store_true", help="shallower depths")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    riemann(args.out / "riemann_square.csv", 7 if args.quick else 10)
    for n in (2, 3):
        cube_rate(args.out / f"cube_rate_n{n}.csv", n, 4 if args.quick else 8)
    ftc(args.out / "ftc_dilation_square.csv", range(2, 7 if args.quick else 10))
    for p in sorted(args.out.glob("*.csv")):
        print(f"== {p}")
        print(p.read_text(), end="")


if __name__ == "__main__":
    main()
