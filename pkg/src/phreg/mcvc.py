"""Minimum-cost vertex cover variant with unknown costs and edge values.

All edges must be covered except the one with the smallest edge value. Both
vertex costs and edge values are unknown: the parameter vector carries the
n vertex costs first, then the |E| edge values.

Convert runs in two stages: the piecewise argmin over the edge-value lines
fixes the excluded edge per subinterval, then the lower envelope of the
cost lines of all covering vertex subsets fixes the picked set per piece.
Correction adds both endpoints of every required-but-uncovered edge under
the true excluded edge; there is no penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .adapter import (
    Adapter,
    ConvertPiece,
    CorrectPiece,
    CorrectionSpec,
    ParamVector,
    Sense,
    register,
)
from .knapsack import mask_sum, subset_sums
from .piecewise import Constant, Interval, Linear, SegmentKind, normalize_kind

MAX_VERTICES = 20


@dataclass(frozen=True)
class VcGraph:
    """Undirected graph; vertex costs and edge values are unknown parameters.

    Parameter layout: theta[:n] are vertex costs, theta[n + e] is the value
    of edges[e].
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple((int(u), int(v)) for u, v in self.edges)
        )
        if self.n < 2 or self.n > MAX_VERTICES:
            raise ValueError(f"vertex count must be in [2, {MAX_VERTICES}]")
        if not self.edges:
            raise ValueError("graph needs at least one edge")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_params(self) -> int:
        return self.n + self.n_edges

    def to_json_dict(self) -> dict:
        return {"kind": "mcvc", "n": self.n, "edges": [list(e) for e in self.edges]}

    @staticmethod
    def from_json_dict(d: dict) -> "VcGraph":
        return VcGraph(d["n"], tuple(tuple(e) for e in d["edges"]))


@dataclass(frozen=True)
class VertexPick:
    """Solution descriptor: picked vertices plus the excluded edge id."""

    mask: int
    excluded_edge: int
    n_vertices: int

    def indices(self) -> list[int]:
        return [v for v in range(self.n_vertices) if (self.mask >> v) & 1]


@lru_cache(maxsize=16)
def _cover_table(g: VcGraph) -> np.ndarray:
    """For every vertex subset, the bitmask of edges it covers."""
    masks = np.arange(1 << g.n, dtype=np.int64)
    cover = np.zeros(1 << g.n, dtype=np.int64)
    for e, (u, v) in enumerate(g.edges):
        covered = (((masks >> u) | (masks >> v)) & 1).astype(np.int64)
        cover |= covered << e
    return cover


@lru_cache(maxsize=128)
def _eligible_masks(g: VcGraph, excluded_edge: int) -> np.ndarray:
    """Vertex subsets covering every edge except the excluded one, ascending."""
    required = ((1 << g.n_edges) - 1) & ~(1 << excluded_edge)
    cover = _cover_table(g)
    return np.flatnonzero((cover & required) == required).astype(np.int64)


def convert_mcvc(g: VcGraph, p: ParamVector, i0: Interval) -> list[ConvertPiece]:
    """Piecewise-linear estimated optimum over the free coefficient."""
    if not i0.is_bounded():
        raise ValueError("convert requires a bounded initial domain")
    if len(p) != g.n_params:
        raise ValueError("parameter vector does not match |V| + |E|")
    ev_a = p.a[g.n :]
    ev_b = p.b[g.n :]
    s1_lo, s1_hi, s1_edge = kernels.envelope_of_lines(
        ev_a, ev_b, np.arange(g.n_edges), i0.lo, i0.hi
    )
    cost_a = subset_sums(p.a[: g.n])
    cost_b = subset_sums(p.b[: g.n])
    pieces = []
    for k in range(s1_lo.shape[0]):
        excl = int(s1_edge[k])
        el = _eligible_masks(g, excl)
        plo, phi, owner = kernels.envelope_of_lines(
            cost_a[el], cost_b[el], el, s1_lo[k], s1_hi[k]
        )
        for j in range(plo.shape[0]):
            mask = int(owner[j])
            kind = normalize_kind(Linear(cost_a[mask], cost_b[mask]))
            pieces.append(
                ConvertPiece(
                    Interval(plo[j], phi[j]), kind, VertexPick(mask, excl, g.n)
                )
            )
    return pieces


def true_excluded_edge(g: VcGraph, theta: np.ndarray) -> int:
    """Edge with the smallest true value; smallest id on ties."""
    return int(np.argmin(theta[g.n :]))


def correct_cover(piece: ConvertPiece, theta: np.ndarray, g: VcGraph) -> CorrectPiece:
    """Add both endpoints of every required edge the pick leaves uncovered."""
    theta = np.asarray(theta, dtype=np.float64)
    e_true = true_excluded_edge(g, theta)
    mask = piece.solution.mask
    for e, (u, v) in enumerate(g.edges):
        if e == e_true:
            continue
        if not ((mask >> u) & 1 or (mask >> v) & 1):
            mask |= (1 << u) | (1 << v)
    cost = mask_sum(mask, theta[: g.n])
    return CorrectPiece(
        piece.interval,
        Constant(cost),
        VertexPick(mask, e_true, g.n),
        Constant(0.0),
    )


def _validate_correction(g, spec: CorrectionSpec):
    if spec.correction != "A":
        raise ValueError(f"mcvc has a single correction function A; got {spec.correction!r}")
    if spec.penalty != "none":
        raise ValueError("mcvc has no penalty function")


def _correct_pieces(
    g, pieces, theta, spec: CorrectionSpec, penalty_fn=None
) -> list[CorrectPiece]:
    """penalty_fn, when given, maps a repaired CorrectPiece to a penalty kind."""
    _validate_correction(g, spec)
    out = []
    for pc in pieces:
        cp = correct_cover(pc, theta, g)
        if penalty_fn is not None:
            cp = CorrectPiece(
                cp.interval, cp.corrected_objective, cp.corrected_solution, penalty_fn(cp)
            )
        out.append(cp)
    return out


# ---------------------------------------------------------------------------
# numeric counterparts
# ---------------------------------------------------------------------------


def solve_mcvc(g: VcGraph, costs: np.ndarray, edge_values: np.ndarray):
    """Cheapest subset covering all edges but the smallest-value one."""
    costs = np.asarray(costs, dtype=np.float64)
    edge_values = np.asarray(edge_values, dtype=np.float64)
    excl = int(np.argmin(edge_values))
    el = _eligible_masks(g, excl)
    totals = subset_sums(costs)[el]
    i = int(np.argmin(totals))
    return float(totals[i]), int(el[i]), excl


def _solve_estimated(g, theta_hat):
    value, mask, excl = solve_mcvc(g, theta_hat[: g.n], theta_hat[g.n :])
    return value, VertexPick(mask, excl, g.n)


def _correct_numeric(g, solution: VertexPick, theta, spec: CorrectionSpec):
    _validate_correction(g, spec)
    cp = correct_cover(
        ConvertPiece(Interval(0.0, 0.0), Constant(0.0), solution), theta, g
    )
    return cp.corrected_objective.c, 0.0, cp.corrected_solution


def _true_optimal_value(g, theta) -> float:
    value, _, _ = solve_mcvc(g, theta[: g.n], theta[g.n :])
    return value


def _feasible(g, solution, theta) -> bool:
    mask = solution.mask if isinstance(solution, VertexPick) else int(solution)
    e_true = true_excluded_edge(g, np.asarray(theta, dtype=np.float64))
    required = ((1 << g.n_edges) - 1) & ~(1 << e_true)
    return (int(_cover_table(g)[mask]) & required) == required


ADAPTER = Adapter(
    name="mcvc",
    sense=Sense.MINIMIZE,
    n_params=lambda g: g.n_params,
    convert=convert_mcvc,
    correct=_correct_pieces,
    solve_estimated=_solve_estimated,
    correct_numeric=_correct_numeric,
    true_optimal_value=_true_optimal_value,
    feasible=_feasible,
    validate_correction=_validate_correction,
)

register(VcGraph, ADAPTER)
