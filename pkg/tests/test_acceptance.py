"""End-to-end acceptance checks, one per criterion, each at its stated tolerance.

Every criterion prints a PASS/FAIL line; the lines are also repeated in the
pytest terminal summary so they show up without ``-s``.
"""
import pytest

from polcor.acceptance import CRITERIA

LINES = []


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__.removeprefix("criterion_") for c in CRITERIA])
def test_criterion(criterion):
    result = criterion()
    LINES.append(result.line())
    print(result.line())
    assert result.passed, result.line()
