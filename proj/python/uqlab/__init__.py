"""Tabular soft Q-learning laboratory: core numeric operations."""

from ._core import (
    discrepancy,
    gridworld_value_iteration,
    mellowmax,
    selftest,
    soft_greedy_policy,
    solve_beta,
)

__all__ = [
    "discrepancy",
    "gridworld_value_iteration",
    "mellowmax",
    "selftest",
    "soft_greedy_policy",
    "solve_beta",
]
