"""0-1 knapsack with unknown item weights.

Convert enumerates subsets (subset-sum doubling for small n, DFS with a
value-bound prune above that), intersects each subset's feasibility
constraint - linear in the free coefficient, hence a single interval - with
the initial domain, and takes the upper envelope of the resulting
value-constant intervals. Three correction functions (remove by ascending
value/weight ratio, by descending weight, or remove everything) and two
penalty functions (proportional and per-item) repair estimated subsets that
overweigh the true capacity.

All subset sums accumulate in ascending item order so the piecewise and
numeric paths agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

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
from .piecewise import Constant, Interval

FULL_ENUM_MAX = 15
MAX_ITEMS = 25
FEAS_TOL = 1e-9

_MODE_BY_CORRECTION = {
    "A": kernels.REMOVE_RATIO_ASC,
    "B": kernels.REMOVE_WEIGHT_DESC,
    "C": kernels.REMOVE_ALL,
}


@dataclass(frozen=True)
class KnapsackInstance:
    """Known values and capacity; weights are the unknown parameters."""

    values: np.ndarray
    capacity: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1 or self.values.shape[0] == 0:
            raise ValueError("values must be a nonempty 1-d array")
        if np.any(self.values < 0):
            raise ValueError("item values must be nonnegative")
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")
        if self.n_items > MAX_ITEMS:
            raise ValueError(f"at most {MAX_ITEMS} items supported")

    @property
    def n_items(self) -> int:
        return self.values.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "kind": "knapsack",
            "values": self.values.tolist(),
            "capacity": self.capacity,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "KnapsackInstance":
        return KnapsackInstance(np.asarray(d["values"], dtype=np.float64), d["capacity"])


@dataclass(frozen=True)
class ItemSubset:
    """Solution descriptor: bit i set means item i is selected."""

    mask: int
    n_items: int

    def indices(self) -> list[int]:
        return [i for i in range(self.n_items) if (self.mask >> i) & 1]

    def __contains__(self, item: int) -> bool:
        return bool((self.mask >> item) & 1)


@dataclass(frozen=True)
class CorrectedSubset:
    kept: ItemSubset
    removed_mask: int
    ratio_floor_applied: bool = False

    def removed_indices(self) -> list[int]:
        return [i for i in range(self.kept.n_items) if (self.removed_mask >> i) & 1]


def subset_sums(vec: np.ndarray) -> np.ndarray:
    """Sums over all 2^n subsets, index = bitmask, items added in ascending order."""
    vec = np.asarray(vec, dtype=np.float64)
    n = vec.shape[0]
    out = np.zeros(1 << n)
    for i in range(n):
        sz = 1 << i
        out[sz : 2 * sz] = out[:sz] + vec[i]
    return out


def mask_sum(mask: int, vec: np.ndarray) -> float:
    """Sum of vec over the set bits of mask, ascending (matches subset_sums)."""
    total = 0.0
    m = int(mask)
    while m:
        low = m & -m
        total += vec[low.bit_length() - 1]
        m ^= low
    return total


def _mask_sums(masks, vec) -> np.ndarray:
    return np.array([mask_sum(m, vec) for m in masks])


def _popcount(masks) -> np.ndarray:
    return np.array([int(m).bit_count() for m in masks], dtype=np.int64)


def _feasible_intervals(a_s, b_s, capacity, lo, hi):
    """Per-subset gamma interval where a_s*g + b_s <= capacity, clipped to [lo, hi]."""
    n = a_s.shape[0]
    los = np.full(n, float(lo))
    his = np.full(n, float(hi))
    pos = a_s > 0
    neg = a_s < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = (capacity - b_s) / a_s
    his[pos] = np.minimum(hi, roots[pos])
    los[neg] = np.maximum(lo, roots[neg])
    never = (a_s == 0) & (b_s > capacity)
    his[never] = lo - 1.0
    return los, his


def _candidates_enumerated(inst, p, lo, hi):
    a_s = subset_sums(p.a)
    b_s = subset_sums(p.b)
    vals = subset_sums(inst.values)
    los, his = _feasible_intervals(a_s, b_s, inst.capacity, lo, hi)
    keep = los < his
    masks = np.flatnonzero(keep).astype(np.int64)
    return masks, vals[keep], los[keep], his[keep]


def _candidates_dfs(inst, p, lo, hi):
    """Subset collection for n > 15: DFS with a sound value-bound prune.

    A branch dies once the best value it can still reach is strictly below
    the best value of a subset already known feasible on the whole domain
    (minus a safety margin; the exact forms are recomputed afterwards).
    Negative predicted weights rule out any feasibility-based pruning.
    """
    n = inst.n_items
    order = sorted(range(n), key=lambda i: -inst.values[i])
    suffix = np.zeros(n + 1)
    for d in range(n - 1, -1, -1):
        suffix[d] = suffix[d + 1] + inst.values[order[d]]
    masks = []
    best_full = 0.0  # empty set: feasible everywhere, value 0

    def walk(d, mask, value, a_s, b_s):
        nonlocal best_full
        if value + suffix[d] < best_full - 1e-9:
            return
        if d == n:
            flo, fhi = _feasible_intervals(
                np.array([a_s]), np.array([b_s]), inst.capacity, lo, hi
            )
            if flo[0] <= fhi[0] + 1e-9:
                masks.append(mask)
                if flo[0] == lo and fhi[0] == hi and value > best_full:
                    best_full = value
            return
        i = order[d]
        walk(d + 1, mask | (1 << i), value + inst.values[i], a_s + p.a[i], b_s + p.b[i])
        walk(d + 1, mask, value, a_s, b_s)

    walk(0, 0, 0.0, 0.0, 0.0)
    masks = np.array(sorted(masks), dtype=np.int64)
    # recompute in ascending-item order for bitwise consistency
    vals = _mask_sums(masks, inst.values)
    a_s = _mask_sums(masks, p.a)
    b_s = _mask_sums(masks, p.b)
    los, his = _feasible_intervals(a_s, b_s, inst.capacity, lo, hi)
    keep = los < his
    return masks[keep], vals[keep], los[keep], his[keep]


def convert_knapsack(
    inst: KnapsackInstance, p: ParamVector, i0: Interval
) -> list[ConvertPiece]:
    """Upper envelope of subset values over their feasible gamma intervals."""
    if not i0.is_bounded():
        raise ValueError("convert requires a bounded initial domain")
    if len(p) != inst.n_items:
        raise ValueError("parameter vector does not match item count")
    if inst.n_items <= FULL_ENUM_MAX:
        masks, vals, los, his = _candidates_enumerated(inst, p, i0.lo, i0.hi)
    else:
        masks, vals, los, his = _candidates_dfs(inst, p, i0.lo, i0.hi)
    order = np.lexsort((masks, -vals))
    plo, phi, pidx = kernels.claim_sweep(order, los, his, i0.lo, i0.hi)
    rank = np.argsort(plo, kind="stable")
    pieces = []
    for r in rank:
        i = pidx[r]
        pieces.append(
            ConvertPiece(
                Interval(plo[r], phi[r]),
                Constant(float(vals[i])),
                ItemSubset(int(masks[i]), inst.n_items),
            )
        )
    return pieces


# ---------------------------------------------------------------------------
# correction and penalty
# ---------------------------------------------------------------------------


def _correct_masks(inst, masks, theta, correction):
    mode = _MODE_BY_CORRECTION[correction]
    theta = np.asarray(theta, dtype=np.float64)
    corrected, kept, removed = kernels.knapsack_correct(
        np.asarray(masks, dtype=np.int64), theta, inst.values, inst.capacity, mode
    )
    if correction == "A" and np.any(theta <= 0):
        bad_mask = 0
        for i in np.flatnonzero(theta <= 0):
            bad_mask |= 1 << int(i)
        flags = (np.asarray(masks, dtype=np.int64) & bad_mask) != 0
    else:
        flags = np.zeros(len(masks), dtype=bool)
    return corrected, kept, removed, flags


def correct_knapsack(
    piece: ConvertPiece, theta: np.ndarray, correction: str, inst: KnapsackInstance
) -> CorrectPiece:
    """Repair one estimated subset against the true weights (no penalty attached)."""
    corrected, kept, removed, flags = _correct_masks(
        inst, [piece.solution.mask], theta, correction
    )
    return CorrectPiece(
        piece.interval,
        Constant(float(corrected[0])),
        CorrectedSubset(
            ItemSubset(int(kept[0]), inst.n_items), int(removed[0]), bool(flags[0])
        ),
    )


def penalty_knapsack(
    correct_piece: CorrectPiece, spec: CorrectionSpec, inst: KnapsackInstance
) -> Constant:
    """Removal fee: proportional (sigma_i * v_i per removed item) or per-item (K each)."""
    removed = correct_piece.corrected_solution.removed_mask
    if spec.penalty == "none":
        return Constant(0.0)
    if spec.penalty == "I":
        sv = spec.sigma_vector(inst.n_items) * inst.values
        return Constant(mask_sum(removed, sv))
    if spec.penalty == "II":
        if spec.K < 0:
            raise ValueError("K must be nonnegative")
        return Constant(spec.K * int(removed).bit_count())
    raise ValueError(f"unknown penalty {spec.penalty!r} for knapsack")


def _validate_correction(inst, spec: CorrectionSpec):
    if spec.correction not in _MODE_BY_CORRECTION:
        raise ValueError(f"knapsack corrections are A, B, C; got {spec.correction!r}")
    if spec.penalty not in ("none", "I", "II"):
        raise ValueError(f"knapsack penalties are none, I, II; got {spec.penalty!r}")
    if spec.penalty == "I":
        spec.sigma_vector(inst.n_items)
    if spec.penalty == "II" and spec.K < 0:
        raise ValueError("K must be nonnegative")


def _correct_pieces(inst, pieces, theta, spec: CorrectionSpec) -> list[CorrectPiece]:
    _validate_correction(inst, spec)
    masks = np.array([pc.solution.mask for pc in pieces], dtype=np.int64)
    corrected, kept, removed, flags = _correct_masks(inst, masks, theta, spec.correction)
    if spec.penalty == "I":
        sv = spec.sigma_vector(inst.n_items) * inst.values
        pens = _mask_sums(removed, sv)
    elif spec.penalty == "II":
        pens = spec.K * _popcount(removed)
    else:
        pens = np.zeros(len(pieces))
    return [
        CorrectPiece(
            pc.interval,
            Constant(float(corrected[i])),
            CorrectedSubset(
                ItemSubset(int(kept[i]), inst.n_items), int(removed[i]), bool(flags[i])
            ),
            Constant(float(pens[i])),
        )
        for i, pc in enumerate(pieces)
    ]


# ---------------------------------------------------------------------------
# numeric counterparts
# ---------------------------------------------------------------------------


def solve_knapsack(values: np.ndarray, weights: np.ndarray, capacity: float):
    """Best feasible subset by full enumeration; ties to the smallest bitmask."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = values.shape[0]
    if n > MAX_ITEMS:
        raise ValueError(f"at most {MAX_ITEMS} items supported")
    if n <= FULL_ENUM_MAX:
        w = subset_sums(weights)
        v = subset_sums(values)
        vals = np.where(w <= capacity, v, -np.inf)
        i = int(np.argmax(vals))
        return float(vals[i]), i
    # chunk over high bits; low 15 bits via the doubling table
    w_low = subset_sums(weights[:FULL_ENUM_MAX])
    v_low = subset_sums(values[:FULL_ENUM_MAX])
    best_v = -np.inf
    best_mask = 0
    for high in range(1 << (n - FULL_ENUM_MAX)):
        high_mask = high << FULL_ENUM_MAX
        w = mask_sum(high_mask, weights) + w_low
        v = mask_sum(high_mask, values) + v_low
        vals = np.where(w <= capacity, v, -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_v = float(vals[i])
            best_mask = high_mask | i
    return best_v, best_mask


def _solve_estimated(inst, theta_hat):
    value, mask = solve_knapsack(inst.values, theta_hat, inst.capacity)
    return value, ItemSubset(mask, inst.n_items)


def _correct_numeric(inst, solution: ItemSubset, theta, spec: CorrectionSpec):
    _validate_correction(inst, spec)
    cp = correct_knapsack(
        ConvertPiece(Interval(0.0, 0.0), Constant(0.0), solution),
        theta,
        spec.correction,
        inst,
    )
    pen = penalty_knapsack(cp, spec, inst)
    return cp.corrected_objective.c, pen.c, cp.corrected_solution


def _true_optimal_value(inst, theta) -> float:
    value, _ = solve_knapsack(inst.values, theta, inst.capacity)
    return value


def _solution_mask(solution) -> int:
    if isinstance(solution, ItemSubset):
        return solution.mask
    if isinstance(solution, CorrectedSubset):
        return solution.kept.mask
    if isinstance(solution, (int, np.integer)):
        return int(solution)
    raise TypeError(f"not a knapsack solution descriptor: {type(solution).__name__}")


def _feasible(inst, solution, theta) -> bool:
    mask = _solution_mask(solution)
    return mask_sum(mask, np.asarray(theta, dtype=np.float64)) <= inst.capacity + FEAS_TOL


ADAPTER = Adapter(
    name="knapsack",
    sense=Sense.MAXIMIZE,
    n_params=lambda inst: inst.n_items,
    convert=convert_knapsack,
    correct=_correct_pieces,
    solve_estimated=_solve_estimated,
    correct_numeric=_correct_numeric,
    true_optimal_value=_true_optimal_value,
    feasible=_feasible,
    validate_correction=_validate_correction,
)

register(KnapsackInstance, ADAPTER)
