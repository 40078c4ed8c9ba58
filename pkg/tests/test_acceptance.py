"""The thirteen acceptance criteria, one test each, at their stated tolerances."""
import pytest

from qfound.acceptance import CRITERIA, data_check, run_criterion

SEED = 42
RESULTS: list[str] = []


def test_data_files_present():
    rep = data_check(None)
    assert rep.ok, [c.name for c in rep.failed()]


@pytest.mark.parametrize("crit", CRITERIA, ids=lambda c: f"C{c.number:02d}-{c.group}")
def test_criterion(crit):
    rep, elapsed = run_criterion(crit, SEED)
    status = "pass" if rep.ok else "FAIL"
    line = f"criterion {crit.number:2d} [{crit.group}] {crit.title}: {status} ({elapsed:.2f} s)"
    RESULTS.append(line)
    print(line)
    for c in rep.failed():
        print(f"    failed: {c.name}: value={c.value!r} expected={c.expected!r} tol={c.tolerance!r}")
    assert rep.ok, [c.name for c in rep.failed()]
