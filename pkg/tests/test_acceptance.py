"""Acceptance criteria 1-11, each at its stated tolerance.

One pass/fail line per criterion is printed in the terminal summary (and by
``python tests/test_acceptance.py``).  Criterion 4 is red: two of the three
stated commutator identities fail under the standard Lie bracket, and no
single bracket convention makes all three hold.  The test is a strict xfail
so that an unexpected pass is reported too; the corrected identities are
asserted separately.
"""
import sys
import time

import pytest

from chaincalc.suites import SUITES, run_suite, verdict

RESULTS: dict[int, str] = {}

CRITERIA = [(crit, name) for name, (crit, _, _) in SUITES.items() if crit]

COMMUTATOR_RED = ("[P_V1,P_V2] = P_[V1,V2] measures 2.0 (it equals P_[V2,V1]); "
                  "[E_V2^dagger,P_V1] = E_[V1,V2]^dagger measures 1.6 and holds only for Killing V1")


def _run(crit: int, name: str):
    t0 = time.time()
    lines = run_suite(name)
    ok = verdict(lines)
    worst = [ln for ln in lines if not ln.diagnostic and not ln.passed]
    detail = "; ".join(f"{ln.name}: {ln.measured:.3g} > {ln.threshold:.1g}" for ln in worst)
    RESULTS[crit] = (f"{'PASS' if ok else 'FAIL'} criterion {crit:2d} {name} "
                     f"({sum(ln.passed for ln in lines)}/{len(lines)} lines, {time.time() - t0:.1f} s)"
                     + (f" {detail}" if detail else ""))
    print(RESULTS[crit])
    return ok, lines


@pytest.mark.parametrize("crit,name", [c for c in CRITERIA if c[0] != 4], ids=lambda x: str(x))
def test_criterion(crit, name):
    ok, lines = _run(crit, name)
    assert ok, "\n".join(ln.row() for ln in lines if not ln.passed and not ln.diagnostic)


@pytest.mark.xfail(strict=True, reason=COMMUTATOR_RED)
def test_criterion_4_commutators_as_stated():
    ok, _ = _run(4, "commutators")
    assert ok


def test_criterion_4_corrected_identities():
    lines = run_suite("commutators")
    by_name = {ln.name: ln for ln in lines}
    assert by_name["[E_V2,P_V1] = E_[V1,V2]"].passed
    for ln in lines:
        if "corrected" in ln.name or "Killing" in ln.name:
            assert ln.passed, ln.row()


if __name__ == "__main__":
    for crit, name in CRITERIA:
        _run(crit, name)
    sys.exit(0 if all(r.startswith("PASS") for r in RESULTS.values()) else 1)
