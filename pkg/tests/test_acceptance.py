"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one pass/fail line (visible with pytest -s or in the verify
subcommand, which runs the same registry).
"""

import pytest

from ibstring.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"c{c.number:02d}_{c.title.replace(' ', '_')}" for c in CRITERIA])
def test_acceptance_criterion(criterion):
    result = run_criterion(criterion)
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] criterion {result.number:2d} ({result.title}): {result.detail}")
    assert result.passed, f"criterion {result.number} ({result.title}): {result.detail}"
