"""Acceptance criteria 1-10, one test each; a PASS/FAIL line per criterion is printed."""

import pytest

from mplab.acceptance import format_report, run_acceptance


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in run_acceptance("all", seed=0)}


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, results, acceptance_lines):
    r = results[number]
    line = format_report([r]).splitlines()[0]
    acceptance_lines.append(line)
    print(line)
    assert r.passed, format_report([r])
