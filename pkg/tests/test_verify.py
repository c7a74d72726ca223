import math

from rigidq.benchmarks import GAUSSIAN_PAIRS
from rigidq.oracle import OracleSpec
from rigidq.verify import Check, run_suite

FAST = OracleSpec(half_width=8.0, spacing=0.2, samples=100_000, seed=3)


def test_subset_passes_and_reports_lines():
    lines = []
    checks = run_suite(FAST, pairs=GAUSSIAN_PAIRS[:2], cellsum_rtol=1e-2, on_check=lambda c: lines.append(c.line()))
    assert len(checks) == 2 * 3 * 2 == len(lines)
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]
    assert all(line.startswith("PASS") for line in lines)


def test_mc_streams_independent_of_subset():
    full = run_suite(FAST, pairs=GAUSSIAN_PAIRS[:2], cellsum=False)
    only = run_suite(FAST, pairs=GAUSSIAN_PAIRS[:2], kernels=("dd",), cellsum=False)
    assert [c.reference for c in full if c.kernel == "dd"] == [c.reference for c in only]


def test_check_error_units():
    rel = Check("p", "gg", "cellsum", 2.0, 2.002, None, 1e-3, 0.0)
    assert math.isclose(rel.error, 1e-3) and rel.passed
    sig = Check("p", "gg", "mc", 1.0, 1.04, 0.01, 3.0, 0.0)
    assert math.isclose(sig.error, 4.0) and not sig.passed
    assert sig.line().startswith("FAIL")
