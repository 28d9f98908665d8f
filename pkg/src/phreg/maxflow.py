"""Maximum flow with unknown edge capacities.

Convert runs Edmonds-Karp symbolically: residual capacities are linear
forms of the free coefficient, BFS explores arcs whose residual is positive
on the interior of the current interval, and the interval splits at the
breakpoints of the bottleneck (the pointwise min of the path's residual
forms). Within each final piece the saturated edges are fixed and the
estimated objective is linear.

Correction A rescales the estimated flow by the largest feasible
lambda in [0, 1] (piecewise rational-linear); Correction B re-augments the
chosen paths, in their original augmentation order, under the true
capacities (piecewise constant). Penalty I charges K per wasted path.

Networks with parallel or antiparallel edges are handled by subdividing
every edge through an auxiliary vertex (both halves carry the edge's
capacity), which keeps per-edge loads unambiguous in the dense residual
representation. BFS tie rule (shared between the symbolic and numeric
paths, do not change): FIFO queue, successors scanned in ascending vertex
id, first discovery sets the parent, search stops at the sink.
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
from .piecewise import (
    Constant,
    Interval,
    Linear,
    RationalLinear,
    SegmentKind,
    normalize_kind,
)

CLASS_TOL = 1e-9  # residual positivity classification
WIDTH_TOL = 1e-12  # interval splits discard thinner pieces
NUM_EPS = 1e-9  # numeric residual threshold


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network; the capacity of edges[e] is unknown parameter e."""

    n: int
    s: int
    t: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if not (0 <= self.s < self.n and 0 <= self.t < self.n) or self.s == self.t:
            raise ValueError("source and sink must be distinct vertices in range")
        if not self.edges:
            raise ValueError("network needs at least one edge")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def to_json_dict(self) -> dict:
        return {
            "kind": "maxflow",
            "n": self.n,
            "s": self.s,
            "t": self.t,
            "edges": [list(e) for e in self.edges],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "FlowNetwork":
        return FlowNetwork(d["n"], d["s"], d["t"], tuple(tuple(e) for e in d["edges"]))


@dataclass(frozen=True)
class _Rep:
    """Working graph: one residual channel per arc, auxiliaries if subdivided."""

    n: int
    arcs: tuple[tuple[int, int], ...]
    per_edge: int  # 1 direct, 2 subdivided


@lru_cache(maxsize=64)
def _rep(net: FlowNetwork) -> _Rep:
    pairs = set(net.edges)
    plain = len(pairs) == net.n_edges and not any((v, u) in pairs for u, v in net.edges)
    if plain:
        return _Rep(net.n, net.edges, 1)
    arcs = []
    for e, (u, v) in enumerate(net.edges):
        w = net.n + e
        arcs.append((u, w))
        arcs.append((w, v))
    return _Rep(net.n + net.n_edges, tuple(arcs), 2)


@dataclass(frozen=True)
class PathFlowPlan:
    """Estimated solution on one piece: augmenting paths with linear flows.

    paths: ((arcs, flow_kind), ...) in augmentation order; arcs are (u, v)
    pairs in the residual graph of the working representation (reverse arcs
    included). loads_a/loads_b are the net per-edge loads as linear forms of
    the free coefficient.
    """

    paths: tuple
    loads_a: np.ndarray
    loads_b: np.ndarray

    def loads_at(self, gamma: float) -> np.ndarray:
        return self.loads_a * gamma + self.loads_b


@dataclass(frozen=True)
class ScaledPlan:
    """Correction A result: the plan scaled by lam(gamma) = min(1, min theta/g)."""

    plan: PathFlowPlan
    lam: SegmentKind

    def loads_at(self, gamma: float) -> np.ndarray:
        return self.lam.value_at(gamma) * self.plan.loads_at(gamma)


@dataclass(frozen=True)
class ReaugmentedPlan:
    """Correction B result: true bottlenecks per chosen path, in order."""

    bottlenecks: tuple
    wasted_count: int
    loads: np.ndarray


@dataclass(frozen=True)
class NumericFlowPlan:
    """Numeric estimated solution: paths (vertex lists), bottlenecks, loads."""

    value: float
    paths: tuple
    bottlenecks: tuple
    loads: np.ndarray


# ---------------------------------------------------------------------------
# symbolic Convert
# ---------------------------------------------------------------------------


def _bfs_path(n: int, s: int, t: int, usable: np.ndarray):
    """Shortest s-t path over usable arcs; mirrors the numeric kernel's BFS."""
    parent = np.full(n, -1, dtype=np.int64)
    parent[s] = s
    queue = [s]
    qi = 0
    found = False
    while qi < len(queue) and not found:
        u = queue[qi]
        qi += 1
        for v in range(n):
            if parent[v] == -1 and usable[u, v]:
                parent[v] = u
                if v == t:
                    found = True
                    break
                queue.append(v)
    if not found:
        return None
    path = []
    v = t
    while v != s:
        path.append(v)
        v = parent[v]
    path.append(s)
    path.reverse()
    return path


def _snap_partition(pieces: list[ConvertPiece], i0: Interval) -> list[ConvertPiece]:
    """Force an exactly contiguous tiling of i0, dropping sliver pieces."""
    pieces = sorted(pieces, key=lambda pc: (pc.interval.lo, pc.interval.hi))
    out = []
    cur = i0.lo
    for pc in pieces:
        hi = pc.interval.hi
        if hi <= cur:
            continue
        if pc.interval.lo - cur > CLASS_TOL:
            raise RuntimeError(f"gap in convert pieces at {cur}")
        out.append(
            ConvertPiece(Interval(cur, hi), pc.objective, pc.solution)
            if pc.interval.lo != cur
            else pc
        )
        cur = hi
    if not out or abs(cur - i0.hi) > CLASS_TOL:
        raise RuntimeError("convert pieces failed to tile the initial domain")
    last = out[-1]
    if last.interval.hi != i0.hi:
        out[-1] = ConvertPiece(
            Interval(last.interval.lo, i0.hi), last.objective, last.solution
        )
    return out


def convert_maxflow(
    net: FlowNetwork, p: ParamVector, i0: Interval
) -> list[ConvertPiece]:
    """Piecewise-linear estimated max flow over the free coefficient."""
    if not i0.is_bounded():
        raise ValueError("convert requires a bounded initial domain")
    if len(p) != net.n_edges:
        raise ValueError("parameter vector does not match edge count")
    cuts = {i0.lo, i0.hi}
    for e in range(net.n_edges):
        if p.a[e] != 0.0:
            r = -p.b[e] / p.a[e]
            if i0.lo < r < i0.hi:
                cuts.add(r)
    cells = _dedup_sorted(sorted(cuts))
    pieces: list[ConvertPiece] = []
    for c0, c1 in zip(cells[:-1], cells[1:]):
        if c1 - c0 < WIDTH_TOL:
            continue
        pieces.extend(_convert_cell(net, p, c0, c1))
    return _snap_partition(pieces, i0)


def _dedup_sorted(xs):
    out = [xs[0]]
    for x in xs[1:]:
        if x - out[-1] > WIDTH_TOL:
            out.append(x)
    if len(xs) > 1 and out[-1] != xs[-1]:
        out[-1] = xs[-1]
    return out


def _convert_cell(net: FlowNetwork, p: ParamVector, lo: float, hi: float):
    rep = _rep(net)
    n = rep.n
    res_a = np.zeros((n, n))
    res_b = np.zeros((n, n))
    init_a = np.zeros(net.n_edges)
    init_b = np.zeros(net.n_edges)
    mid = 0.5 * (lo + hi)
    for e in range(net.n_edges):
        if p.a[e] * mid + p.b[e] > 0.0:
            init_a[e] = p.a[e]
            init_b[e] = p.b[e]
            for c in range(rep.per_edge):
                u, v = rep.arcs[e * rep.per_edge + c]
                res_a[u, v] = p.a[e]
                res_b[u, v] = p.b[e]
    out = []
    stack = [(res_a, res_b, lo, hi, (), 0.0, 0.0)]
    while stack:
        ra, rb, clo, chi, paths, va, vb = stack.pop()
        vlo = ra * clo + rb
        vhi = ra * chi + rb
        flip = ((vlo < -CLASS_TOL) & (vhi > CLASS_TOL)) | (
            (vlo > CLASS_TOL) & (vhi < -CLASS_TOL)
        )
        if flip.any():
            u, v = np.argwhere(flip)[0]
            r = -rb[u, v] / ra[u, v]
            r = min(max(r, clo), chi)
            if r - clo >= WIDTH_TOL:
                stack.append((ra.copy(), rb.copy(), clo, r, paths, va, vb))
            if chi - r >= WIDTH_TOL:
                stack.append((ra.copy(), rb.copy(), r, chi, paths, va, vb))
            continue
        usable = (vlo > CLASS_TOL) | (vhi > CLASS_TOL)
        path = _bfs_path(n, net.s, net.t, usable)
        if path is None:
            loads_a = init_a.copy()
            loads_b = init_b.copy()
            for e in range(net.n_edges):
                u, v = rep.arcs[e * rep.per_edge]
                loads_a[e] -= ra[u, v]
                loads_b[e] -= rb[u, v]
            out.append(
                ConvertPiece(
                    Interval(clo, chi),
                    normalize_kind(Linear(va, vb)),
                    PathFlowPlan(paths, loads_a, loads_b),
                )
            )
            continue
        arcs = tuple(zip(path[:-1], path[1:]))
        fa = np.array([ra[u, v] for u, v in arcs])
        fb = np.array([rb[u, v] for u, v in arcs])
        elo, ehi, eidx = kernels.envelope_of_lines(
            fa, fb, np.arange(len(arcs)), clo, chi
        )
        for j in range(elo.shape[0] - 1, -1, -1):
            if ehi[j] - elo[j] < WIDTH_TOL:
                continue
            k = int(eidx[j])
            ba, bb = fa[k], fb[k]
            nra = ra.copy()
            nrb = rb.copy()
            for u, v in arcs:
                nra[u, v] -= ba
                nrb[u, v] -= bb
                nra[v, u] += ba
                nrb[v, u] += bb
            stack.append(
                (
                    nra,
                    nrb,
                    elo[j],
                    ehi[j],
                    paths + ((arcs, normalize_kind(Linear(ba, bb))),),
                    va + ba,
                    vb + bb,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Correction Function A: scale by the largest feasible lambda
# ---------------------------------------------------------------------------


def correct_scale(
    piece: ConvertPiece, theta: np.ndarray, net: FlowNetwork
) -> list[CorrectPiece]:
    """lam(g) = min(1, min_e theta_e / g_e(g)) over loaded edges; exact splits.

    All numerators are constants, so regime changes happen at roots of the
    linear forms theta_e - g_e and theta_e*g_f - theta_f*g_e; the piece is
    split exactly there and each subpiece is linear (lam = 1) or
    rational-linear.
    """
    theta = np.asarray(theta, dtype=np.float64)
    plan: PathFlowPlan = piece.solution
    lo, hi = piece.interval.lo, piece.interval.hi
    ga, gb = plan.loads_a, plan.loads_b
    g_lo = ga * lo + gb
    g_hi = ga * hi + gb
    loaded = np.flatnonzero((g_lo > CLASS_TOL) | (g_hi > CLASS_TOL))
    fa, fb = _objective_form(piece.objective)
    cuts = {lo, hi}

    def add_root(a, b):
        if a != 0.0:
            r = -b / a
            if lo < r < hi:
                cuts.add(r)

    for e in loaded:
        add_root(ga[e], gb[e] - theta[e])  # lambda_e crosses 1
    for i, e in enumerate(loaded):
        for f in loaded[i + 1 :]:
            add_root(
                theta[e] * ga[f] - theta[f] * ga[e],
                theta[e] * gb[f] - theta[f] * gb[e],
            )
    cells = _dedup_sorted(sorted(cuts))
    out = []
    for c0, c1 in zip(cells[:-1], cells[1:]):
        if c1 <= c0:
            continue
        mid = 0.5 * (c0 + c1)
        best_e = -1
        best_lam = np.inf
        for e in loaded:
            g_mid = ga[e] * mid + gb[e]
            if g_mid <= WIDTH_TOL:
                continue
            lam = theta[e] / g_mid
            if lam < best_lam:
                best_lam = lam
                best_e = int(e)
        if best_e < 0 or best_lam >= 1.0:
            corrected = normalize_kind(Linear(fa, fb))
            lam_kind: SegmentKind = Constant(1.0)
        else:
            corrected = normalize_kind(
                RationalLinear(
                    theta[best_e] * fa, theta[best_e] * fb, ga[best_e], gb[best_e]
                )
            )
            lam_kind = normalize_kind(
                RationalLinear(0.0, theta[best_e], ga[best_e], gb[best_e])
            )
        out.append(
            CorrectPiece(
                Interval(c0, c1), corrected, ScaledPlan(plan, lam_kind), Constant(0.0)
            )
        )
    return out


def _objective_form(kind: SegmentKind) -> tuple[float, float]:
    if isinstance(kind, Constant):
        return 0.0, kind.c
    if isinstance(kind, Linear):
        return kind.a, kind.b
    raise TypeError("max-flow objectives are constant or linear")


# ---------------------------------------------------------------------------
# Correction Function B: re-augment the chosen paths under true capacities
# ---------------------------------------------------------------------------


def reaugment(net: FlowNetwork, paths, theta: np.ndarray):
    """Augment the given arc paths, in order, against true residuals."""
    rep = _rep(net)
    res = np.zeros((rep.n, rep.n))
    for e in range(net.n_edges):
        for c in range(rep.per_edge):
            u, v = rep.arcs[e * rep.per_edge + c]
            res[u, v] = theta[e]
    total = 0.0
    wasted = 0
    bnecks = []
    for arcs in paths:
        b = min(res[u, v] for u, v in arcs)
        if b <= WIDTH_TOL:
            wasted += 1
            b = 0.0
        else:
            for u, v in arcs:
                res[u, v] -= b
                res[v, u] += b
            total += b
        bnecks.append(b)
    loads = np.array(
        [theta[e] - res[rep.arcs[e * rep.per_edge]] for e in range(net.n_edges)]
    )
    return total, wasted, bnecks, loads


def correct_reaugment(
    piece: ConvertPiece, theta: np.ndarray, net: FlowNetwork
) -> CorrectPiece:
    theta = np.asarray(theta, dtype=np.float64)
    plan: PathFlowPlan = piece.solution
    total, wasted, bnecks, loads = reaugment(net, [arcs for arcs, _ in plan.paths], theta)
    return CorrectPiece(
        piece.interval,
        Constant(total),
        ReaugmentedPlan(tuple(bnecks), wasted, loads),
        Constant(0.0),
    )


def penalty_wasted(correct_piece: CorrectPiece, K: float) -> Constant:
    """Penalty Function I: K units of flow per wasted path."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    sol = correct_piece.corrected_solution
    if not isinstance(sol, ReaugmentedPlan):
        raise TypeError("penalty I applies to re-augmentation corrections only")
    return Constant(K * sol.wasted_count)


def _validate_correction(net, spec: CorrectionSpec):
    if spec.correction not in ("A", "B"):
        raise ValueError(f"max-flow corrections are A and B; got {spec.correction!r}")
    if spec.penalty not in ("none", "I"):
        raise ValueError(f"max-flow penalties are none and I; got {spec.penalty!r}")
    if spec.penalty == "I":
        if spec.correction == "A":
            raise ValueError("penalty I needs correction B (scaling wastes no path)")
        if spec.K < 0:
            raise ValueError("K must be nonnegative")


def _correct_pieces(net, pieces, theta, spec: CorrectionSpec) -> list[CorrectPiece]:
    _validate_correction(net, spec)
    out = []
    for pc in pieces:
        if spec.correction == "A":
            out.extend(correct_scale(pc, theta, net))
        else:
            cp = correct_reaugment(pc, theta, net)
            if spec.penalty == "I":
                cp = CorrectPiece(
                    cp.interval,
                    cp.corrected_objective,
                    cp.corrected_solution,
                    penalty_wasted(cp, spec.K),
                )
            out.append(cp)
    return out


# ---------------------------------------------------------------------------
# numeric counterparts
# ---------------------------------------------------------------------------


def capacity_matrix(net: FlowNetwork, caps: np.ndarray) -> np.ndarray:
    """Dense capacity matrix over the working representation; nonpositive
    capacities mean the edge is absent."""
    rep = _rep(net)
    cap = np.zeros((rep.n, rep.n))
    for e in range(net.n_edges):
        if caps[e] > 0.0:
            for c in range(rep.per_edge):
                u, v = rep.arcs[e * rep.per_edge + c]
                cap[u, v] = caps[e]
    return cap


def solve_numeric(net: FlowNetwork, caps: np.ndarray) -> NumericFlowPlan:
    caps = np.asarray(caps, dtype=np.float64)
    rep = _rep(net)
    cap = capacity_matrix(net, caps)
    value, paths, bnecks, res = kernels.edmonds_karp(cap, net.s, net.t, NUM_EPS)
    loads = np.empty(net.n_edges)
    for e in range(net.n_edges):
        u, v = rep.arcs[e * rep.per_edge]
        loads[e] = cap[u, v] - res[u, v] if caps[e] > 0 else 0.0
    arc_paths = tuple(tuple(zip(p[:-1], p[1:])) for p in paths)
    return NumericFlowPlan(value, arc_paths, tuple(bnecks), loads)


def _solve_estimated(net, theta_hat):
    plan = solve_numeric(net, theta_hat)
    return plan.value, plan


def _correct_numeric(net, plan: NumericFlowPlan, theta, spec: CorrectionSpec):
    _validate_correction(net, spec)
    theta = np.asarray(theta, dtype=np.float64)
    if spec.correction == "A":
        lam = 1.0
        for e in range(net.n_edges):
            if plan.loads[e] > WIDTH_TOL:
                lam = min(lam, theta[e] / plan.loads[e])
        lam = max(lam, 0.0)
        return lam * plan.value, 0.0, lam * plan.loads
    total, wasted, _, loads = reaugment(net, plan.paths, theta)
    penalty = spec.K * wasted if spec.penalty == "I" else 0.0
    return total, penalty, loads


def _true_optimal_value(net, theta) -> float:
    return solve_numeric(net, theta).value


def _solution_loads(solution) -> np.ndarray:
    if isinstance(solution, (NumericFlowPlan, ReaugmentedPlan)):
        return solution.loads
    if isinstance(solution, np.ndarray):
        return solution
    raise TypeError(f"not a max-flow solution descriptor: {type(solution).__name__}")


def _feasible(net, solution, theta) -> bool:
    loads = _solution_loads(solution)
    theta = np.asarray(theta, dtype=np.float64)
    if loads.shape != (net.n_edges,):
        raise TypeError("loads vector does not match the edge count")
    if np.any(loads < -1e-6) or np.any(loads > theta + 1e-6):
        return False
    balance = np.zeros(net.n)
    for e, (u, v) in enumerate(net.edges):
        balance[u] -= loads[e]
        balance[v] += loads[e]
    balance[net.s] = 0.0
    balance[net.t] = 0.0
    return bool(np.all(np.abs(balance) <= 1e-6))


ADAPTER = Adapter(
    name="maxflow",
    sense=Sense.MAXIMIZE,
    n_params=lambda net: net.n_edges,
    convert=convert_maxflow,
    correct=_correct_pieces,
    solve_estimated=_solve_estimated,
    correct_numeric=_correct_numeric,
    true_optimal_value=_true_optimal_value,
    feasible=_feasible,
    validate_correction=_validate_correction,
)

register(FlowNetwork, ADAPTER)
