#!/usr/bin/env python3
"""Run every acceptance suite and write a JSON summary plus one line per criterion."""
import argparse
import json
import time
from pathlib import Path

from chaincalc.config import DEFAULT_SEED
from chaincalc.suites import SUITES, run_suite, verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("suites", nargs="*", default=list(SUITES))
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--out", type=Path, default=Path("results/acceptance.json"))
    args = ap.parse_args()

    summary = {}
    for name in args.suites:
        t0 = time.time()
        lines = run_suite(name, seed=args.seed)
        ok = verdict(lines)
        crit = SUITES[name][0] or "-"
        print(f"{'PASS' if ok else 'FAIL'}  criterion {crit:>2}  {name:22s} {time.time() - t0:6.1f} s")
        for ln in lines:
            if not ln.passed:
                print("      " + ln.row())
        summary[name] = {"criterion": SUITES[name][0], "passed": ok,
                         "lines": [{k: v for k, v in ln.to_json().items() if k != "seconds"} for ln in lines]}
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
