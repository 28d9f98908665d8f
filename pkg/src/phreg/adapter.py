"""Problem-adapter contract and generic post-hoc-regret assembly.

A problem adapter supplies Convert/Correct plus numeric counterparts for a
specific optimization problem. This module owns the shared pieces: the
coefficient-to-parameter construction, the Evaluate step combining the
corrected objective with the penalty and the true optimal value, and the
loss accumulation across training instances (exact for constant/linear
losses, grid-materialized as soon as a rational segment shows up).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import piecewise as pw
from .piecewise import Constant, Interval, PiecewiseFn, SegmentKind

REFINE_TOL = 1e-9


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


@dataclass(frozen=True)
class ParamVector:
    """Parameters as linear forms of the free coefficient: theta(g) = a*g + b."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("ParamVector needs two equal-length 1-d arrays")

    def __len__(self) -> int:
        return self.a.shape[0]

    def at(self, gamma: float) -> np.ndarray:
        return self.a * gamma + self.b


@dataclass(frozen=True)
class ConvertPiece:
    interval: Interval
    objective: SegmentKind
    solution: Any


@dataclass(frozen=True)
class CorrectPiece:
    interval: Interval
    corrected_objective: SegmentKind
    corrected_solution: Any
    penalty: SegmentKind = Constant(0.0)


@dataclass(frozen=True)
class CorrectionSpec:
    """Which correction and penalty functions to apply, with their constants."""

    correction: str = "A"
    penalty: str = "none"
    K: float = 0.0
    sigma: float | np.ndarray = 0.0

    def sigma_vector(self, n: int) -> np.ndarray:
        s = np.asarray(self.sigma, dtype=np.float64)
        if s.ndim == 0:
            s = np.full(n, float(s))
        if s.shape != (n,):
            raise ValueError(f"sigma must be scalar or length {n}")
        if np.any(s < 0):
            raise ValueError("sigma must be nonnegative")
        return s


def construct_coordinate(A: np.ndarray, alpha: np.ndarray, k: int) -> ParamVector:
    """Parameter forms when coefficient k is freed: a = A e_k, b = A(alpha - alpha_k e_k)."""
    A = np.asarray(A, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != alpha.shape[0]:
        raise ValueError(f"feature matrix {A.shape} incompatible with alpha {alpha.shape}")
    if not 0 <= k < alpha.shape[0]:
        raise ValueError(f"coordinate {k} out of range [0, {alpha.shape[0]})")
    a = A[:, k].copy()
    b = A @ alpha - alpha[k] * a
    return ParamVector(a, b)


def evaluate_preg(
    convert: list[ConvertPiece],
    correct: list[CorrectPiece],
    tov: float,
    sense: Sense,
) -> PiecewiseFn:
    """Post-hoc regret as a piecewise function of the free coefficient.

    Minimize: corrected - tov + penalty. Maximize: tov - corrected + penalty.
    The correct pieces must refine the convert partition.
    """
    if not convert or not correct:
        raise ValueError("evaluate_preg needs nonempty convert and correct pieces")
    _check_refinement(convert, correct)
    lo = convert[0].interval.lo
    bounds = [lo]
    kinds = []
    for cp in correct:
        if sense is Sense.MINIMIZE:
            base = pw.kind_affine(cp.corrected_objective, 1.0, -tov)
        else:
            base = pw.kind_affine(cp.corrected_objective, -1.0, tov)
        bounds.append(cp.interval.hi)
        kinds.append(pw.kind_add(base, cp.penalty))
    return PiecewiseFn.from_cells(bounds, kinds)


def _check_refinement(convert: list[ConvertPiece], correct: list[CorrectPiece]):
    if abs(convert[0].interval.lo - correct[0].interval.lo) > REFINE_TOL or abs(
        convert[-1].interval.hi - correct[-1].interval.hi
    ) > REFINE_TOL:
        raise ValueError("correct pieces do not span the convert domain")
    prev_hi = correct[0].interval.lo
    ci = 0
    for cp in correct:
        if abs(cp.interval.lo - prev_hi) > REFINE_TOL:
            raise ValueError("correct pieces are not contiguous")
        prev_hi = cp.interval.hi
        while (
            ci + 1 < len(convert)
            and convert[ci].interval.hi <= cp.interval.lo + REFINE_TOL
        ):
            ci += 1
        host = convert[ci].interval
        if cp.interval.lo < host.lo - REFINE_TOL or cp.interval.hi > host.hi + REFINE_TOL:
            raise ValueError("correct piece does not refine a convert piece")


def assemble_loss(per_instance: list[PiecewiseFn], grid_n: int) -> PiecewiseFn:
    """Sum of per-instance losses over a shared domain.

    Exact (breakpoint-union) when every operand is constant/linear; with any
    rational operand the sum is materialized as a piecewise constant on
    ``grid_n`` uniform cells, each cell valued at the exact sum at its center.
    """
    if not per_instance:
        raise ValueError("assemble_loss needs at least one loss function")
    domain = per_instance[0].domain
    for f in per_instance[1:]:
        if f.domain != domain:
            raise pw.DomainError("loss functions must share the initial domain")
    if all(f.is_affine() for f in per_instance):
        return _sum_affine(per_instance, domain)
    return _sum_on_grid(per_instance, domain, grid_n)


def _sum_affine(fns: list[PiecewiseFn], domain: Interval) -> PiecewiseFn:
    cuts = sorted(set(x for f in fns for x in f.breakpoints()))
    bounds = [cuts[0]]
    for x in cuts[1:-1]:
        if x - bounds[-1] > pw.BREAK_TOL:
            bounds.append(x)
    if len(bounds) == 1 or cuts[-1] - bounds[-1] > pw.BREAK_TOL:
        bounds.append(cuts[-1])
    else:
        bounds[-1] = cuts[-1]
    bounds = np.asarray(bounds, dtype=np.float64)
    m = len(bounds) - 1
    slope_d = np.zeros(m + 1)
    icept_d = np.zeros(m + 1)
    for f in fns:
        fb = np.asarray(f.breakpoints())
        pos = np.searchsorted(bounds, fb)
        pos = np.clip(pos, 0, m)
        left = np.clip(pos - 1, 0, m)
        pos = np.where(
            np.abs(bounds[left] - fb) < np.abs(bounds[pos] - fb), left, pos
        )
        for i, (_, kind) in enumerate(f.segments):
            a, b = pw.kind_linear_form(kind)
            i0, i1 = pos[i], pos[i + 1]
            if i0 == i1:
                continue
            slope_d[i0] += a
            slope_d[i1] -= a
            icept_d[i0] += b
            icept_d[i1] -= b
    slopes = np.cumsum(slope_d)[:m]
    icepts = np.cumsum(icept_d)[:m]
    kinds = [
        Constant(icepts[i]) if slopes[i] == 0.0 else pw.Linear(slopes[i], icepts[i])
        for i in range(m)
    ]
    return PiecewiseFn.from_cells(list(bounds), kinds)


def _sum_on_grid(fns: list[PiecewiseFn], domain: Interval, grid_n: int) -> PiecewiseFn:
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    w = domain.width / grid_n
    centers = domain.lo + (np.arange(grid_n) + 0.5) * w
    total = np.zeros(grid_n)
    for f in fns:
        total += f.eval_many(centers)
    bounds = domain.lo + np.arange(grid_n + 1) * w
    bounds[-1] = domain.hi
    return PiecewiseFn.from_cells(list(bounds), [Constant(v) for v in total])


def convert_objective_fn(convert: list[ConvertPiece]) -> PiecewiseFn:
    """The estimated-objective function E as a PiecewiseFn over I0."""
    bounds = [convert[0].interval.lo]
    kinds = []
    for cp in convert:
        bounds.append(cp.interval.hi)
        kinds.append(cp.objective)
    return PiecewiseFn.from_cells(bounds, kinds)


# ---------------------------------------------------------------------------
# adapter registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Adapter:
    """Everything the trainer and benchmark need to host one problem family."""

    name: str
    sense: Sense
    n_params: Callable[[Any], int]
    convert: Callable[[Any, ParamVector, Interval], list[ConvertPiece]]
    correct: Callable[[Any, list[ConvertPiece], np.ndarray, CorrectionSpec], list[CorrectPiece]]
    solve_estimated: Callable[[Any, np.ndarray], tuple[float, Any]]
    correct_numeric: Callable[[Any, Any, np.ndarray, CorrectionSpec], tuple[float, float, Any]]
    true_optimal_value: Callable[[Any, np.ndarray], float]
    feasible: Callable[[Any, Any, np.ndarray], bool]
    validate_correction: Callable[[Any, CorrectionSpec], None] = field(
        default=lambda problem, spec: None
    )


_REGISTRY: dict[type, Adapter] = {}
_BY_NAME: dict[str, Adapter] = {}


def register(problem_type: type, adapter: Adapter):
    _REGISTRY[problem_type] = adapter
    _BY_NAME[adapter.name] = adapter


def adapter_for(problem) -> Adapter:
    try:
        return _REGISTRY[type(problem)]
    except KeyError:
        raise KeyError(f"no adapter registered for {type(problem).__name__}") from None


def adapter_by_name(name: str) -> Adapter:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown problem name {name!r}") from None


def numeric_posthoc_regret(
    problem, theta_hat: np.ndarray, theta: np.ndarray, spec: CorrectionSpec
) -> float:
    """Post-hoc regret of one prediction, computed by the numeric pipeline."""
    ad = adapter_for(problem)
    _, solution = ad.solve_estimated(problem, theta_hat)
    corrected_value, penalty, _ = ad.correct_numeric(problem, solution, theta, spec)
    tov = ad.true_optimal_value(problem, theta)
    if ad.sense is Sense.MINIMIZE:
        return corrected_value - tov + penalty
    return tov - corrected_value + penalty
