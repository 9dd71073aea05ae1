# Tests for suites.py

import logging
import os
import sys
from unittest.mock import MagicMock, patch

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src import suites
    from src.suites import RESULT_FIELDS, SUITES, CheckResult, UnknownSuiteError, run_suite, table_mean_range
except ImportError:
    import suites
    from suites import RESULT_FIELDS, SUITES, CheckResult, UnknownSuiteError, run_suite, table_mean_range


# --- Fixtures ---

@pytest.fixture(autouse=True)
def setup_logging_for_tests(caplog):
    caplog.set_level(logging.INFO)


# --- Test CheckResult ---

def test_check_result_row_has_every_field():
    row = CheckResult("s", "c", True, 1.0, 1.0, 0.1, "ok").as_row()
    assert list(row) == RESULT_FIELDS
    assert row["passed"] == 1


def test_near_absolute_and_relative():
    assert suites._near("s", "abs", 1.05, 1.0, 0.1).passed
    assert not suites._near("s", "abs", 1.2, 1.0, 0.1).passed
    rel = suites._near("s", "rel", 10.5, 10.0, 0.1, relative=True)
    assert rel.passed
    assert rel.tolerance == pytest.approx(1.0)


# --- Test run_suite ---

def test_run_suite_unknown_name():
    with pytest.raises(UnknownSuiteError, match="Unknown suite 'nope'"):
        run_suite("nope")


def test_run_suite_all_runs_every_suite(caplog):
    fake = MagicMock(return_value=[CheckResult("fake", "one", True), CheckResult("fake", "two", False, 2.0, 1.0)])
    with patch.dict(SUITES, {name: fake for name in SUITES}):
        results = run_suite("all", quick=True, seed=3, workers=1)

    assert fake.call_count == len(SUITES)
    fake.assert_called_with(True, 3, 1)
    assert len(results) == 2 * len(SUITES)
    assert "two failed" in caplog.text
    assert f"Verification: {len(SUITES)}/{2 * len(SUITES)} checks passed." in caplog.text


def test_analytic_identities_suite_passes():
    results = run_suite("analytic-identities")
    assert results
    assert all(r.passed for r in results), [r.check for r in results if not r.passed]


def test_bounds_suite_passes():
    results = run_suite("bounds", quick=True, seed=11)
    assert all(r.passed for r in results), [r.check for r in results if not r.passed]
    assert results[0].check == "containment over 50 random points"


def test_zero_wait_suite_passes():
    results = run_suite("zero-wait", quick=True)
    assert all(r.passed for r in results), [r.check for r in results if not r.passed]
    checks = [r.check for r in results]
    assert "initial-age zero share alpha=0.5" in checks
    assert "initial-age positive part alpha=0.5 (KS)" in checks


def test_mm1_suite_passes():
    results = run_suite("mm1", quick=True)
    assert [r.passed for r in results] == [True]
    assert results[0].expected == pytest.approx(1.75)


def test_table_mean_range_scales_with_published_mean():
    assert table_mean_range(3) == pytest.approx((9.8, 10.5))
    lo, hi = table_mean_range(10)
    assert lo == pytest.approx(20.9 * 9.8 / 10.1)
    assert hi == pytest.approx(20.9 * 10.5 / 10.1)
    assert table_mean_range(6, quick=True)[0] < table_mean_range(6)[0]
