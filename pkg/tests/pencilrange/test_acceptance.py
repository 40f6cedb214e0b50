from unittest.mock import patch

import numpy as np

from pencilrange import acceptance
from pencilrange.acceptance import CheckContext, CheckResult, format_table, run_checks
from pencilrange.errors import NoConvergence


def _raises(ctx):
    raise NoConvergence("iteration cap")


FAKE_CRITERIA = [
    (1, "passes", lambda ctx: (True, f"quick={ctx.quick}")),
    (2, "fails", lambda ctx: (False, "wrong endpoint")),
    (3, "raises", _raises),
]


def test_context_pick():
    """Test if pick chooses the quick value in quick mode"""
    assert CheckContext(quick=True).pick(200, 50) == 50
    assert CheckContext().pick(200, 50) == 200


def test_context_rng():
    """Test if the generators depend on the seed and the offset only"""
    first = CheckContext(seed=5).rng(2).standard_normal(3)
    second = CheckContext(seed=5).rng(2).standard_normal(3)
    other = CheckContext(seed=5).rng(3).standard_normal(3)

    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


@patch("pencilrange.acceptance.CRITERIA", FAKE_CRITERIA)
def test_run_checks():
    """Test if a criterion raising a library error counts as failed"""
    results = run_checks(quick=True)

    assert [r.number for r in results] == [1, 2, 3]
    assert [r.passed for r in results] == [True, False, False]
    assert results[0].detail == "quick=True"
    assert results[2].detail == "NoConvergence: iteration cap"
    assert all(r.seconds >= 0 for r in results)


@patch("pencilrange.acceptance.CRITERIA", FAKE_CRITERIA)
def test_run_checks_only():
    """Test if only runs the selected criteria"""
    results = run_checks(only={2})

    assert [r.title for r in results] == ["fails"]


def test_criteria_numbers():
    """Test if the criteria are numbered 1 to 10 in order"""
    assert [number for number, _, _ in acceptance.CRITERIA] == list(range(1, 11))


def test_format_table():
    """Test if the table has one row per result and escapes pipes"""
    results = [
        CheckResult(1, "ranges", True, "ok", 1.25),
        CheckResult(2, "gap", False, "a | b", 0.04),
    ]

    lines = format_table(results).splitlines()

    assert lines[0] == "| # | criterion | result | seconds | detail |"
    assert lines[2] == "| 1 | ranges | pass | 1.2 | ok |"
    assert lines[3] == "| 2 | gap | FAIL | 0.0 | a \\| b |"

