"""Desk acceptance suite: every criterion at full size.

Run with ``pytest --run-acceptance -m acceptance``; the full suite takes tens of minutes.
"""

import pytest

from glpp.suites import CRITERIA, run_suite

pytestmark = [pytest.mark.integration, pytest.mark.slow, pytest.mark.acceptance]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_desk_criterion(number):
    report = run_suite("desk", seed=20240601, only=[number])
    (result,) = report.results
    assert result.error is None, result.error
    assert result.passed, f"{result.name}: {result.value:.3g} vs {result.threshold} ({result.details})"


def test_quick_suite_passes():
    report = run_suite("quick", seed=1)
    failed = [r.name for r in report.results if not r.passed]
    assert not failed, failed
