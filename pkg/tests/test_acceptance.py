"""Acceptance criteria at their stated tolerances, one test per criterion."""

import pytest

from cyclocap.cli.acceptance import BUDGETS, CRITERIA, AcceptanceRun

SEED = 0


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    return AcceptanceRun(tmp_path_factory.mktemp("acceptance") / "run", seed=SEED)


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[f"c{n:02d}" for n in sorted(CRITERIA)])
def test_criterion(suite, number, record_line):
    res = suite.run(number)
    budget = BUDGETS[number]
    if budget is not None and res.runtime_s >= budget:
        res.passed = False
        res.detail += f"; exceeded {budget:g} s budget"
    record_line(res.line())
    assert res.passed, res.detail
