"""Reference solvers and feasibility checks.

These wrap the numeric solvers of the problem adapters under one roof and
share their tie rules, so piecewise outputs and numeric references agree
exactly rather than merely up to ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .adapter import adapter_for
from .knapsack import ItemSubset, solve_knapsack
from .maxflow import FlowNetwork, NumericFlowPlan, solve_numeric
from .mcvc import VcGraph, VertexPick, solve_mcvc


@dataclass(frozen=True)
class OracleResult:
    optimal_value: float
    solution: Any


def maxflow_numeric(net: FlowNetwork, caps: np.ndarray) -> OracleResult:
    """Edmonds-Karp value and path decomposition under fixed capacities."""
    caps = np.asarray(caps, dtype=np.float64)
    if np.any(caps < 0):
        raise ValueError("capacities must be nonnegative")
    plan: NumericFlowPlan = solve_numeric(net, caps)
    return OracleResult(plan.value, plan)


def knapsack_exhaustive(values, weights, capacity) -> OracleResult:
    """Best feasible subset over all 2^n; ties to the smallest bitmask."""
    value, mask = solve_knapsack(values, weights, capacity)
    return OracleResult(value, ItemSubset(mask, len(np.asarray(values))))


def mcvc_exhaustive(g: VcGraph, costs, edge_values) -> OracleResult:
    """Cheapest cover of all edges except the smallest-value one."""
    value, mask, excl = solve_mcvc(g, costs, edge_values)
    return OracleResult(value, VertexPick(mask, excl, g.n))


def feasibility_check(problem, solution, theta) -> bool:
    """True iff the solution satisfies the problem's constraints under theta."""
    return adapter_for(problem).feasible(problem, solution, np.asarray(theta, dtype=np.float64))


def true_optimal_value(problem, theta) -> float:
    return adapter_for(problem).true_optimal_value(problem, np.asarray(theta, dtype=np.float64))
