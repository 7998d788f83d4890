"""Acceptance gate: one test per numbered criterion, full Monte Carlo sizes.

Each criterion prints its own pass/fail line with the measured quantities;
the heavy shape-fit batches (criteria 11-13) are simulated once and shared.
Set FRAGTAIL_ACCEPT_FAST=1 to smoke the suite at reduced sizes (the tight
shape-fit thresholds are only meaningful at full size).
"""

import os

import pytest

from fragtail import acceptance

FAST = os.environ.get("FRAGTAIL_ACCEPT_FAST", "") not in ("", "0")


@pytest.fixture(scope="module")
def ctx():
    return acceptance._Context(fast=FAST, workers=None)


@pytest.mark.parametrize("cid", [num for num, _, _ in acceptance._CRITERIA])
def test_criterion(cid, ctx):
    result = acceptance.run_criterion(cid, ctx=ctx)
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] criterion {result.cid}: {result.title} "
          f"({result.seconds:.1f}s)\n        {result.detail}")
    assert result.passed, f"criterion {result.cid}: {result.detail}"
