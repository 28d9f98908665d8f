"""Exact algebra on piecewise functions of a single real variable.

A :class:`PiecewiseFn` is an ordered list of segments over a partition of a
closed interval. Segments are constant, linear, or rational-linear
(ratio of two linear forms). Constant/linear functions support exact
pointwise addition, subtraction, max, min and scaling; rational segments
are carried symbolically and combined only through grid sampling by the
callers that need them.

Functions may be discontinuous at breakpoints. Evaluation at a shared
breakpoint uses the left segment (left-closed rule), which keeps every
operation deterministic.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from . import kernels

BREAK_TOL = 1e-12  # breakpoints closer than this are merged


class PiecewiseError(ValueError):
    pass


class DomainError(PiecewiseError):
    pass


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; infinite endpoints allowed."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise PiecewiseError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def intersect(self, other: "Interval") -> "Interval | None":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class Constant:
    c: float

    def value_at(self, x: float) -> float:
        return self.c

    def coefs(self):
        return (self.c, 0.0, 0.0, 0.0)

    kind_code = kernels.KIND_CONST
    json_kind = "const"

    def json_coefs(self):
        return [self.c]


@dataclass(frozen=True)
class Linear:
    a: float
    b: float

    def value_at(self, x: float) -> float:
        return self.a * x + self.b

    def coefs(self):
        return (self.a, self.b, 0.0, 0.0)

    kind_code = kernels.KIND_LIN
    json_kind = "lin"

    def json_coefs(self):
        return [self.a, self.b]


@dataclass(frozen=True)
class RationalLinear:
    """(a1*x + b1) / (a2*x + b2); denominator nonzero on the owning interior."""

    a1: float
    b1: float
    a2: float
    b2: float

    def value_at(self, x: float) -> float:
        return (self.a1 * x + self.b1) / (self.a2 * x + self.b2)

    def coefs(self):
        return (self.a1, self.b1, self.a2, self.b2)

    kind_code = kernels.KIND_RAT
    json_kind = "rat"

    def json_coefs(self):
        return [self.a1, self.b1, self.a2, self.b2]


SegmentKind = Constant | Linear | RationalLinear

_JSON_KINDS = {"const": Constant, "lin": Linear, "rat": RationalLinear}


def normalize_kind(k: SegmentKind) -> SegmentKind:
    """Collapse degenerate representations (zero slopes, constant ratios)."""
    if isinstance(k, Linear):
        return Constant(k.b) if k.a == 0.0 else k
    if isinstance(k, RationalLinear):
        if k.a2 == 0.0:
            if k.b2 == 0.0:
                raise PiecewiseError("rational segment with zero denominator")
            return normalize_kind(Linear(k.a1 / k.b2, k.b1 / k.b2))
        if k.a1 * k.b2 == k.b1 * k.a2:  # numerator proportional to denominator
            return Constant(k.a1 / k.a2)
        return k
    return k


def kind_affine(k: SegmentKind, mul: float, add: float) -> SegmentKind:
    """mul * k(x) + add, staying within the segment-kind closure."""
    if isinstance(k, Constant):
        return Constant(mul * k.c + add)
    if isinstance(k, Linear):
        return normalize_kind(Linear(mul * k.a, mul * k.b + add))
    return normalize_kind(
        RationalLinear(
            mul * k.a1 + add * k.a2,
            mul * k.b1 + add * k.b2,
            k.a2,
            k.b2,
        )
    )


def kind_linear_form(k: SegmentKind) -> tuple[float, float]:
    if isinstance(k, Constant):
        return (0.0, k.c)
    if isinstance(k, Linear):
        return (k.a, k.b)
    raise PiecewiseError("rational segment has no linear form")


def kind_add(k1: SegmentKind, k2: SegmentKind) -> SegmentKind:
    if isinstance(k1, RationalLinear) or isinstance(k2, RationalLinear):
        if isinstance(k1, Constant):
            return kind_affine(k2, 1.0, k1.c)
        if isinstance(k2, Constant):
            return kind_affine(k1, 1.0, k2.c)
        raise PiecewiseError("cannot add a rational segment to a non-constant one")
    a1, b1 = kind_linear_form(k1)
    a2, b2 = kind_linear_form(k2)
    return normalize_kind(Linear(a1 + a2, b1 + b2))


def kind_scale(k: SegmentKind, s: float) -> SegmentKind:
    if isinstance(k, RationalLinear):
        return normalize_kind(RationalLinear(s * k.a1, s * k.b1, k.a2, k.b2))
    return kind_affine(k, s, 0.0)


class PiecewiseFn:
    """Ordered segments (Interval, SegmentKind) tiling a closed domain."""

    __slots__ = ("domain", "segments", "_bounds", "_arrays")

    def __init__(self, domain: Interval, segments):
        segments = tuple(segments)
        if not segments:
            raise PiecewiseError("a piecewise function needs at least one segment")
        prev_hi = domain.lo
        for iv, kind in segments:
            if iv.lo != prev_hi:
                raise PiecewiseError(
                    f"segments not contiguous: expected lo={prev_hi}, got {iv.lo}"
                )
            prev_hi = iv.hi
            if isinstance(kind, RationalLinear):
                d_lo = kind.a2 * iv.lo + kind.b2
                d_hi = kind.a2 * iv.hi + kind.b2
                if (d_lo == 0.0 and d_hi == 0.0) or (d_lo < 0.0 < d_hi) or (d_hi < 0.0 < d_lo):
                    raise PiecewiseError(
                        f"rational denominator vanishes inside [{iv.lo}, {iv.hi}]"
                    )
        if prev_hi != domain.hi:
            raise PiecewiseError("segments do not cover the domain")
        self.domain = domain
        self.segments = segments
        self._bounds = [domain.lo] + [iv.hi for iv, _ in segments]
        self._arrays = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(c: float, domain: Interval) -> "PiecewiseFn":
        return PiecewiseFn(domain, [(domain, Constant(c))])

    @staticmethod
    def single(kind: SegmentKind, domain: Interval) -> "PiecewiseFn":
        return PiecewiseFn(domain, [(domain, normalize_kind(kind))])

    @staticmethod
    def from_cells(bounds, kinds) -> "PiecewiseFn":
        """Build from ascending bounds [x0..xn] and n segment kinds."""
        domain = Interval(bounds[0], bounds[-1])
        segs = [
            (Interval(bounds[i], bounds[i + 1]), kinds[i]) for i in range(len(kinds))
        ]
        return PiecewiseFn(domain, segs)

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.segments)

    def breakpoints(self) -> list[float]:
        return list(self._bounds)

    def is_affine(self) -> bool:
        return not any(isinstance(k, RationalLinear) for _, k in self.segments)

    def segment_at(self, x: float) -> tuple[Interval, SegmentKind]:
        if not self.domain.contains(x):
            raise DomainError(f"{x} outside domain [{self.domain.lo}, {self.domain.hi}]")
        # left-closed: a shared breakpoint belongs to the left segment
        idx = bisect_left(self._bounds, x, 1, len(self._bounds) - 1) - 1
        return self.segments[idx]

    def eval(self, x: float) -> float:
        _, kind = self.segment_at(x)
        return kind.value_at(x)

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def to_arrays(self):
        if self._arrays is None:
            bounds = np.asarray(self._bounds, dtype=np.float64)
            kinds = np.fromiter(
                (k.kind_code for _, k in self.segments), dtype=np.int64, count=len(self)
            )
            coefs = np.array([k.coefs() for _, k in self.segments], dtype=np.float64)
            self._arrays = (bounds, kinds, coefs)
        return self._arrays

    def eval_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size and (xs.min() < self.domain.lo or xs.max() > self.domain.hi):
            raise DomainError("evaluation points outside domain")
        bounds, kinds, coefs = self.to_arrays()
        return kernels.eval_segments(bounds, kinds, coefs, xs)

    def restrict(self, iv: Interval) -> "PiecewiseFn":
        if iv.lo < self.domain.lo or iv.hi > self.domain.hi:
            raise DomainError("restriction exceeds domain")
        segs = []
        for seg_iv, kind in self.segments:
            cut = seg_iv.intersect(iv)
            if cut is None:
                continue
            if cut.width == 0.0:
                # keep only for a degenerate restriction; left segment wins
                if iv.width == 0.0 and not segs:
                    segs.append((cut, kind))
                continue
            segs.append((cut, kind))
        return PiecewiseFn(iv, segs)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "domain": [self.domain.lo, self.domain.hi],
            "segments": [
                {"lo": iv.lo, "hi": iv.hi, "kind": k.json_kind, "coef": k.json_coefs()}
                for iv, k in self.segments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(d: dict) -> "PiecewiseFn":
        segs = [
            (Interval(s["lo"], s["hi"]), _JSON_KINDS[s["kind"]](*s["coef"]))
            for s in d["segments"]
        ]
        return PiecewiseFn(Interval(*d["domain"]), segs)

    def __repr__(self) -> str:
        return f"PiecewiseFn({len(self)} segments on [{self.domain.lo}, {self.domain.hi}])"


# ---------------------------------------------------------------------------
# breakpoint merging
# ---------------------------------------------------------------------------


def _merged_bounds(f: PiecewiseFn, g: PiecewiseFn) -> list[float]:
    xs = sorted(set(f._bounds) | set(g._bounds))
    merged = [xs[0]]
    for x in xs[1:-1]:
        if x - merged[-1] > BREAK_TOL:
            merged.append(x)
    if xs[-1] - merged[-1] > BREAK_TOL or len(merged) == 1:
        merged.append(xs[-1])
    else:
        merged[-1] = xs[-1]
    return merged


def _require_same_domain(f: PiecewiseFn, g: PiecewiseFn):
    if f.domain != g.domain:
        raise DomainError(f"domain mismatch: {f.domain} vs {g.domain}")


def _cells_with_kinds(f: PiecewiseFn, g: PiecewiseFn):
    """Yield (lo, hi, kind_f, kind_g) over the merged partition."""
    bounds = _merged_bounds(f, g)
    fi = gi = 0
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        mid = 0.5 * (lo + hi)
        while fi + 1 < len(f.segments) and f.segments[fi][0].hi < mid:
            fi += 1
        while gi + 1 < len(g.segments) and g.segments[gi][0].hi < mid:
            gi += 1
        yield lo, hi, f.segments[fi][1], g.segments[gi][1]


# ---------------------------------------------------------------------------
# pointwise operations
# ---------------------------------------------------------------------------


def add(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    """Exact pointwise sum; operands must be constant/linear only."""
    _require_same_domain(f, g)
    if not (f.is_affine() and g.is_affine()):
        raise PiecewiseError("exact add needs constant/linear operands")
    bounds, kinds = [f.domain.lo], []
    for lo, hi, kf, kg in _cells_with_kinds(f, g):
        bounds.append(hi)
        kinds.append(kind_add(kf, kg))
    return PiecewiseFn.from_cells(bounds, kinds)


def subtract(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    return add(f, scale(g, -1.0))


def scale(f: PiecewiseFn, s: float) -> PiecewiseFn:
    segs = [(iv, kind_scale(k, s)) for iv, k in f.segments]
    return PiecewiseFn(f.domain, segs)


def shift(f: PiecewiseFn, t: float) -> PiecewiseFn:
    """Pointwise f + t."""
    segs = [(iv, kind_affine(k, 1.0, t)) for iv, k in f.segments]
    return PiecewiseFn(f.domain, segs)


def _extremum(f: PiecewiseFn, g: PiecewiseFn, keep_upper: bool) -> PiecewiseFn:
    _require_same_domain(f, g)
    bounds, kinds = [f.domain.lo], []

    def emit(hi, kind):
        bounds.append(hi)
        kinds.append(kind)

    for lo, hi, kf, kg in _cells_with_kinds(f, g):
        af, bf = kind_linear_form(kf)
        ag, bg = kind_linear_form(kg)
        if af == ag and bf == bg:
            emit(hi, kf)
            continue

        def pick(m):
            vf, vg = af * m + bf, ag * m + bg
            if vf == vg:
                return kf
            return kf if (vf > vg) == keep_upper else kg

        if af != ag:
            x = (bg - bf) / (af - ag)
            if lo + BREAK_TOL < x < hi - BREAK_TOL:
                emit(x, pick(0.5 * (lo + x)))
                emit(hi, pick(0.5 * (x + hi)))
                continue
        emit(hi, pick(0.5 * (lo + hi)))
    return PiecewiseFn.from_cells(bounds, kinds)


def pointwise_max(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    return _extremum(f, g, keep_upper=True)


def pointwise_min(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    return _extremum(f, g, keep_upper=False)


def absolute(f: PiecewiseFn) -> PiecewiseFn:
    """Pointwise |f| for constant/linear functions."""
    return pointwise_max(f, scale(f, -1.0))


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


def argmin(f: PiecewiseFn, grid_n: int = 1000) -> tuple[float, float]:
    """Global minimum of f over its (bounded) domain.

    Exact for constant/linear segments: candidates are segment endpoints
    (evaluated with the segment's own kind) and midpoints of constant
    segments. Rational segments are sampled on ``grid_n`` uniform points.
    Ties resolve to the smallest candidate location; a minimizing constant
    segment reports its midpoint.
    """
    if not f.domain.is_bounded():
        raise DomainError("argmin requires a bounded domain")
    best_x = math.nan
    best_v = math.inf
    for iv, kind in f.segments:
        if isinstance(kind, Constant):
            cand = [(iv.midpoint, kind.c)]
        elif isinstance(kind, Linear):
            cand = [(iv.lo, kind.value_at(iv.lo)), (iv.hi, kind.value_at(iv.hi))]
        else:
            xs = np.linspace(iv.lo, iv.hi, max(int(grid_n), 2))
            bounds = np.array([iv.lo, iv.hi])
            vals = kernels.eval_segments(
                bounds,
                np.array([kind.kind_code], dtype=np.int64),
                np.array([kind.coefs()]),
                xs,
            )
            cand = zip(xs.tolist(), vals.tolist())
        for x, v in cand:
            if v < best_v:
                best_x, best_v = x, v
    if math.isinf(best_v) and best_v > 0:
        raise PiecewiseError("no finite values found during argmin")
    return best_x, best_v
