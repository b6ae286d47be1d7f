"""Smoke tests for the python bindings: every exported operation is exercised
against closed-form values or self-consistency checks."""

import math

import pytest

import uqlab


def test_exports():
    for name in uqlab.__all__:
        assert callable(getattr(uqlab, name))


def test_mellowmax_closed_form():
    # Uniform prior over [0, 1] at w=1: log((1 + e) / 2).
    expected = math.log((1.0 + math.e) / 2.0)
    assert uqlab.mellowmax([0.0, 1.0], 1.0) == pytest.approx(expected, abs=1e-12)


def test_mellowmax_limits():
    values = [0.25, -1.0, 2.0]
    assert uqlab.mellowmax(values, 0.0) == 2.0
    assert uqlab.mellowmax(values, math.inf) == pytest.approx(
        sum(values) / len(values), abs=1e-12
    )
    # Non-uniform prior at w=inf gives the prior-weighted mean.
    prior = [0.5, 0.25, 0.25]
    weighted = sum(p * v for p, v in zip(prior, values))
    assert uqlab.mellowmax(values, math.inf, prior) == pytest.approx(weighted, abs=1e-12)


def test_soft_greedy_policy_closed_form():
    # Uniform prior over [0, 1] at beta=1: (1/(1+e), e/(1+e)).
    pi = uqlab.soft_greedy_policy([0.0, 1.0], 1.0)
    assert pi[0] == pytest.approx(1.0 / (1.0 + math.e), abs=1e-12)
    assert pi[1] == pytest.approx(math.e / (1.0 + math.e), abs=1e-12)
    assert sum(pi) == pytest.approx(1.0, abs=1e-12)


def test_solve_beta_interior_root():
    # Members disagree on the argmax, so the root is interior; the returned
    # beta must zero the discrepancy it was solved from.
    rows = [[1.0, 0.0], [0.0, 0.6]]
    beta = uqlab.solve_beta(rows)
    assert 1e-20 < beta < 2e6
    assert abs(uqlab.discrepancy(rows, beta=beta)) <= 1e-6


def test_solve_beta_identical_rows_clamp():
    # Identical members have zero discrepancy everywhere; the solver reports
    # the upper bracket end (hard backups).
    rows = [[0.3, 0.9], [0.3, 0.9]]
    assert uqlab.solve_beta(rows) == 2e6


def test_solve_beta_rejects_empty():
    with pytest.raises(ValueError):
        uqlab.solve_beta([])


def test_gridworld_two_cell_exact():
    # One step east from the start reaches the terminal goal: V*(S) equals the
    # goal reward exactly, and the goal state's value is zero.
    q, v, pi = uqlab.gridworld_value_iteration(
        ["SG"], slip_prob=0.0, goal_reward=1.0, step_reward=0.0, discount=0.5
    )
    assert len(v) == 2
    assert v[0] == pytest.approx(1.0, abs=1e-9)
    assert v[1] == pytest.approx(0.0, abs=1e-12)
    assert max(q[0]) == pytest.approx(1.0, abs=1e-9)
    assert len(pi[0]) >= 1


def test_gridworld_default_map_shape():
    q, v, pi = uqlab.gridworld_value_iteration()
    assert len(v) == 52  # 8x8 grid minus the interior wall block
    assert len(q) == 52 and len(q[0]) == 8
    assert len(pi) == 52
    assert all(math.isfinite(x) for x in v)
    assert max(v) > 0.0


def test_selftest_passes():
    ok, report = uqlab.selftest()
    assert ok is True
    assert report.strip()
