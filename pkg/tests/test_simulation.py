from __future__ import annotations

import json
import math

import pytest

from budgettree.backends.oracle import OracleWorldConfig
from budgettree.simulation import SweepSpec, analytic_bound, not_below, run_sweep, run_trial, sweep_document


def test_analytic_bound_constants():
    b = analytic_bound()
    assert b.k == 7
    assert b.p_min == pytest.approx(16.0**-1 * 0.1**50, rel=1e-12)
    ln = math.log(1 / 0.05)
    assert b.m == pytest.approx((7 + math.sqrt(2 * 7 * ln) + 2 * ln) / b.p_min, rel=1e-12)
    assert b.budget == math.ceil(b.m)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(budgets=[])
    with pytest.raises(ValueError):
        SweepSpec(budgets=[-1])
    with pytest.raises(ValueError):
        SweepSpec(budgets=["X"])
    with pytest.raises(ValueError):
        SweepSpec(budgets=[4], eps=1.5)
    assert SweepSpec(budgets=[3, "M"]).resolved_budgets() == [3, analytic_bound().budget]


def test_too_small_budget_never_succeeds():
    # Seven on-path steps are needed; six tool calls can never get there.
    spec = SweepSpec(budgets=[6], trials=200)
    assert run_sweep(spec)[0].successes == 0


def test_trial_is_seeded():
    spec = SweepSpec(budgets=[16])
    assert run_trial(16, 42, spec) == run_trial(16, 42, spec)


def test_trial_reports_expansions():
    ok, n = run_trial(7, 0, SweepSpec(budgets=[7]))
    assert n <= 7
    # On this seed the sampler walks the frontier six times straight.
    ok_big, n_big = run_trial(10**6, 0, SweepSpec(budgets=[10**6]))
    assert ok_big and n_big >= 7


def test_off_path_zero_keeps_frontier_dominant():
    world = OracleWorldConfig(off_path_delta=0)
    spec = SweepSpec(budgets=[32], trials=100, world=world)
    assert run_sweep(spec)[0].rate > 0.5


def test_not_below():
    assert not_below(950, 1000, 0.95)
    assert not_below(935, 1000, 0.95)
    assert not not_below(900, 1000, 0.95)


def test_sweep_document_serializes_huge_budget():
    spec = SweepSpec(budgets=[8, "M"], trials=20)
    doc = json.loads(sweep_document(spec, run_sweep(spec)))
    assert doc["analytic"]["K"] == 7
    assert doc["points"][1]["budget"] == str(analytic_bound().budget)
    assert doc["points"][1]["successes"] == 20
