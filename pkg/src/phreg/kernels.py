"""JIT-compiled hot kernels with pure numpy/Python fallbacks.

Every kernel exists twice: a numba ``@njit`` version (``*_nb``) and a plain
version (``*_py``) with identical semantics. The active implementation is
chosen once at import time: numba when importable, unless the environment
variable ``PHREG_DISABLE_NUMBA`` is set to a non-empty value other than "0".

Piecewise functions are passed to kernels in array form:

    bounds : float64[n_seg + 1]   segment boundaries, ascending
    kinds  : int64[n_seg]         KIND_CONST / KIND_LIN / KIND_RAT
    coefs  : float64[n_seg, 4]    const: [c,0,0,0]; lin: [a,b,0,0];
                                  rat: [a1,b1,a2,b2] for (a1*x+b1)/(a2*x+b2)

Evaluation is left-closed at shared boundaries: the segment whose upper
bound equals x owns the value at x.
"""

from __future__ import annotations

import os

import numpy as np

KIND_CONST = 0
KIND_LIN = 1
KIND_RAT = 2

NUMBA_DISABLED = os.environ.get("PHREG_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via PHREG_DISABLE_NUMBA instead
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


# ---------------------------------------------------------------------------
# batch evaluation of a piecewise function
# ---------------------------------------------------------------------------


def _eval_segments_py(bounds, kinds, coefs, xs):
    n_seg = kinds.shape[0]
    # left-closed: x equal to an interior boundary belongs to the left segment
    idx = np.searchsorted(bounds[1:n_seg], xs, side="left")
    out = np.empty(xs.shape[0], dtype=np.float64)
    a = coefs[idx, 0]
    b = coefs[idx, 1]
    k = kinds[idx]
    out = np.where(k == KIND_CONST, a, a * xs + b)
    rat = k == KIND_RAT
    if np.any(rat):
        num = coefs[idx[rat], 0] * xs[rat] + coefs[idx[rat], 1]
        den = coefs[idx[rat], 2] * xs[rat] + coefs[idx[rat], 3]
        out[rat] = num / den
    return out


@njit(cache=True)
def _eval_segments_nb(bounds, kinds, coefs, xs):  # pragma: no cover - numba
    n_seg = kinds.shape[0]
    out = np.empty(xs.shape[0], dtype=np.float64)
    for i in range(xs.shape[0]):
        x = xs[i]
        lo, hi = 0, n_seg - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if bounds[mid + 1] < x:
                lo = mid + 1
            else:
                hi = mid
        k = kinds[lo]
        if k == KIND_CONST:
            out[i] = coefs[lo, 0]
        elif k == KIND_LIN:
            out[i] = coefs[lo, 0] * x + coefs[lo, 1]
        else:
            out[i] = (coefs[lo, 0] * x + coefs[lo, 1]) / (coefs[lo, 2] * x + coefs[lo, 3])
    return out


# ---------------------------------------------------------------------------
# upper envelope of value-constant intervals (knapsack Convert)
# ---------------------------------------------------------------------------
#
# Candidates i carry a constant value on a feasible interval [los[i], his[i]]
# (already clipped to the domain). ``order`` visits them by descending value
# with ascending index on ties; earlier candidates claim the parts of the
# domain not yet covered. Claims tile [dlo, dhi] exactly because every piece
# bound is a copy of an input bound.


def _claim_sweep_py(order, los, his, dlo, dhi):
    unc = [(dlo, dhi)]
    out_lo, out_hi, out_idx = [], [], []
    for i in order:
        if not unc:
            break
        lo = los[i]
        hi = his[i]
        nxt = []
        for a, b in unc:
            cl = lo if lo > a else a
            ch = hi if hi < b else b
            if cl >= ch:
                nxt.append((a, b))
                continue
            out_lo.append(cl)
            out_hi.append(ch)
            out_idx.append(i)
            if a < cl:
                nxt.append((a, cl))
            if ch < b:
                nxt.append((ch, b))
        unc = nxt
    return (
        np.asarray(out_lo, dtype=np.float64),
        np.asarray(out_hi, dtype=np.float64),
        np.asarray(out_idx, dtype=np.int64),
    )


@njit(cache=True)
def _claim_sweep_nb(order, los, his, dlo, dhi):  # pragma: no cover - numba
    n = order.shape[0]
    # fragments ever <= n + 2 (one split per candidate); emissions <= 3n + 1
    ulo = np.empty(n + 4, dtype=np.float64)
    uhi = np.empty(n + 4, dtype=np.float64)
    ulo[0] = dlo
    uhi[0] = dhi
    n_unc = 1
    cap = 4 * n + 8
    out_lo = np.empty(cap, dtype=np.float64)
    out_hi = np.empty(cap, dtype=np.float64)
    out_idx = np.empty(cap, dtype=np.int64)
    n_out = 0
    for oi in range(n):
        if n_unc == 0:
            break
        i = order[oi]
        lo = los[i]
        hi = his[i]
        j = 0
        while j < n_unc:
            a = ulo[j]
            b = uhi[j]
            cl = lo if lo > a else a
            ch = hi if hi < b else b
            if cl >= ch:
                j += 1
                continue
            out_lo[n_out] = cl
            out_hi[n_out] = ch
            out_idx[n_out] = i
            n_out += 1
            if a < cl and ch < b:
                # split: shift tail right by one
                for m in range(n_unc, j + 1, -1):
                    ulo[m] = ulo[m - 1]
                    uhi[m] = uhi[m - 1]
                uhi[j] = cl
                ulo[j + 1] = ch
                uhi[j + 1] = b
                n_unc += 1
                j += 2
            elif a < cl:
                uhi[j] = cl
                j += 1
            elif ch < b:
                ulo[j] = ch
                j += 1
            else:
                for m in range(j, n_unc - 1):
                    ulo[m] = ulo[m + 1]
                    uhi[m] = uhi[m + 1]
                n_unc -= 1
    return out_lo[:n_out], out_hi[:n_out], out_idx[:n_out]


# ---------------------------------------------------------------------------
# lower envelope of lines (MCVC Convert, bottleneck splitting)
# ---------------------------------------------------------------------------
#
# Lines y = a*x + b arrive sorted by descending slope (the left-to-right
# visiting order of a lower envelope), with exact slope duplicates removed
# except the representative line. Output pieces clip to [lo, hi]; each piece
# reports the index (into the sorted arrays) of its line.


def _lower_envelope_py(a, b, lo, hi):
    n = a.shape[0]
    st_idx = np.empty(n, dtype=np.int64)
    st_x = np.empty(n, dtype=np.float64)
    m = 0
    for j in range(n):
        xj = -np.inf
        while m >= 1:
            k = st_idx[m - 1]
            # a[k] > a[j]: line j is lower right of the crossing
            xj = (b[j] - b[k]) / (a[k] - a[j])
            if xj <= st_x[m - 1]:
                m -= 1
            else:
                break
        if m == 0:
            xj = -np.inf
        st_x[m] = xj
        st_idx[m] = j
        m += 1
    piece_lo, piece_hi, piece_idx = [], [], []
    for p in range(m):
        s = st_x[p] if st_x[p] > lo else lo
        e = st_x[p + 1] if p + 1 < m and st_x[p + 1] < hi else hi
        if s < e:
            piece_lo.append(s)
            piece_hi.append(e)
            piece_idx.append(st_idx[p])
    return (
        np.asarray(piece_lo, dtype=np.float64),
        np.asarray(piece_hi, dtype=np.float64),
        np.asarray(piece_idx, dtype=np.int64),
    )


@njit(cache=True)
def _lower_envelope_nb(a, b, lo, hi):  # pragma: no cover - numba
    n = a.shape[0]
    st_idx = np.empty(n, dtype=np.int64)
    st_x = np.empty(n, dtype=np.float64)
    m = 0
    for j in range(n):
        xj = -np.inf
        while m >= 1:
            k = st_idx[m - 1]
            xj = (b[j] - b[k]) / (a[k] - a[j])
            if xj <= st_x[m - 1]:
                m -= 1
            else:
                break
        if m == 0:
            xj = -np.inf
        st_x[m] = xj
        st_idx[m] = j
        m += 1
    out_lo = np.empty(m, dtype=np.float64)
    out_hi = np.empty(m, dtype=np.float64)
    out_idx = np.empty(m, dtype=np.int64)
    n_out = 0
    for p in range(m):
        s = st_x[p] if st_x[p] > lo else lo
        e = hi
        if p + 1 < m and st_x[p + 1] < hi:
            e = st_x[p + 1]
        if s < e:
            out_lo[n_out] = s
            out_hi[n_out] = e
            out_idx[n_out] = st_idx[p]
            n_out += 1
    return out_lo[:n_out], out_hi[:n_out], out_idx[:n_out]


# ---------------------------------------------------------------------------
# numeric Edmonds-Karp on a dense capacity matrix
# ---------------------------------------------------------------------------
#
# BFS uses a FIFO queue and scans successor vertices in ascending id; the
# first discovery fixes the parent. This tie rule is shared with the
# symbolic Convert of the max-flow adapter and must not change.


def _edmonds_karp_py(cap, s, t, eps):
    n = cap.shape[0]
    res = cap.copy()
    paths = []
    bnecks = []
    value = 0.0
    while True:
        parent = np.full(n, -1, dtype=np.int64)
        parent[s] = s
        queue = [s]
        qi = 0
        found = False
        while qi < len(queue) and not found:
            u = queue[qi]
            qi += 1
            for v in range(n):
                if parent[v] == -1 and res[u, v] > eps:
                    parent[v] = u
                    if v == t:
                        found = True
                        break
                    queue.append(v)
        if not found:
            break
        path = []
        v = t
        while v != s:
            path.append(v)
            v = parent[v]
        path.append(s)
        path.reverse()
        bneck = np.inf
        for i in range(len(path) - 1):
            r = res[path[i], path[i + 1]]
            if r < bneck:
                bneck = r
        for i in range(len(path) - 1):
            res[path[i], path[i + 1]] -= bneck
            res[path[i + 1], path[i]] += bneck
        paths.append(path)
        bnecks.append(bneck)
        value += bneck
    return value, paths, bnecks, res


@njit(cache=True)
def _edmonds_karp_nb(cap, s, t, eps, max_aug):  # pragma: no cover - numba
    n = cap.shape[0]
    res = cap.copy()
    path_off = np.zeros(max_aug + 1, dtype=np.int64)
    path_v = np.empty(max_aug * n, dtype=np.int64)
    bnecks = np.empty(max_aug, dtype=np.float64)
    n_aug = 0
    value = 0.0
    parent = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    tmp = np.empty(n, dtype=np.int64)
    while True:
        for v in range(n):
            parent[v] = -1
        parent[s] = s
        queue[0] = s
        qn = 1
        qi = 0
        found = False
        while qi < qn and not found:
            u = queue[qi]
            qi += 1
            for v in range(n):
                if parent[v] == -1 and res[u, v] > eps:
                    parent[v] = u
                    if v == t:
                        found = True
                        break
                    queue[qn] = v
                    qn += 1
        if not found:
            break
        ln = 0
        v = t
        while v != s:
            tmp[ln] = v
            ln += 1
            v = parent[v]
        tmp[ln] = s
        ln += 1
        base = path_off[n_aug]
        for i in range(ln):
            path_v[base + i] = tmp[ln - 1 - i]
        path_off[n_aug + 1] = base + ln
        bneck = np.inf
        for i in range(base, base + ln - 1):
            r = res[path_v[i], path_v[i + 1]]
            if r < bneck:
                bneck = r
        for i in range(base, base + ln - 1):
            res[path_v[i], path_v[i + 1]] -= bneck
            res[path_v[i + 1], path_v[i]] += bneck
        bnecks[n_aug] = bneck
        value += bneck
        n_aug += 1
    return value, n_aug, path_off, path_v, bnecks, res


def _edmonds_karp_nb_wrap(cap, s, t, eps):
    n = cap.shape[0]
    n_arcs = int(np.count_nonzero(cap > eps))
    max_aug = n * (n_arcs + 1) + 1
    value, n_aug, off, pv, bn, res = _edmonds_karp_nb(cap, s, t, eps, max_aug)
    paths = [list(pv[off[i] : off[i + 1]]) for i in range(n_aug)]
    return value, paths, list(bn[:n_aug]), res


# ---------------------------------------------------------------------------
# knapsack greedy removal over a batch of pieces
# ---------------------------------------------------------------------------

REMOVE_RATIO_ASC = 0
REMOVE_WEIGHT_DESC = 1
REMOVE_ALL = 2


def _removal_keys(theta, values, mode):
    if mode == REMOVE_RATIO_ASC:
        return values / np.maximum(theta, 1e-12)
    return -theta  # weight-descending removes the largest theta first


def _knapsack_correct_py(masks, theta, values, capacity, mode):
    n = theta.shape[0]
    keys = _removal_keys(theta, values, mode)
    corrected = np.empty(masks.shape[0], dtype=np.float64)
    kept = np.empty(masks.shape[0], dtype=np.int64)
    removed = np.empty(masks.shape[0], dtype=np.int64)
    for p, mask in enumerate(masks):
        items = [i for i in range(n) if (mask >> i) & 1]
        w = sum(theta[i] for i in items)
        if w <= capacity:
            corrected[p] = sum(values[i] for i in items)
            kept[p] = mask
            removed[p] = 0
            continue
        if mode == REMOVE_ALL:
            corrected[p] = 0.0
            kept[p] = 0
            removed[p] = mask
            continue
        order = sorted(items, key=lambda i: (keys[i], i))
        rm = 0
        for i in order:
            if w <= capacity:
                break
            w -= theta[i]
            rm |= 1 << i
        k = mask & ~rm
        corrected[p] = sum(values[i] for i in range(n) if (k >> i) & 1)
        kept[p] = k
        removed[p] = rm
    return corrected, kept, removed


@njit(cache=True)
def _knapsack_correct_nb(masks, theta, values, capacity, mode, keys):  # pragma: no cover
    n = theta.shape[0]
    n_p = masks.shape[0]
    corrected = np.empty(n_p, dtype=np.float64)
    kept = np.empty(n_p, dtype=np.int64)
    removed = np.empty(n_p, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    for p in range(n_p):
        mask = masks[p]
        w = 0.0
        for i in range(n):
            if (mask >> i) & 1:
                w += theta[i]
        if w <= capacity:
            val = 0.0
            for i in range(n):
                if (mask >> i) & 1:
                    val += values[i]
            corrected[p] = val
            kept[p] = mask
            removed[p] = 0
            continue
        if mode == REMOVE_ALL:
            corrected[p] = 0.0
            kept[p] = 0
            removed[p] = mask
            continue
        cnt = 0
        for i in range(n):
            if (mask >> i) & 1:
                order[cnt] = i
                cnt += 1
        # insertion sort by (key, index)
        for ii in range(1, cnt):
            cur = order[ii]
            jj = ii - 1
            while jj >= 0 and keys[order[jj]] > keys[cur]:
                order[jj + 1] = order[jj]
                jj -= 1
            order[jj + 1] = cur
        rm = 0
        for ii in range(cnt):
            if w <= capacity:
                break
            i = order[ii]
            w -= theta[i]
            rm |= 1 << i
        k = mask & ~rm
        val = 0.0
        for i in range(n):
            if (k >> i) & 1:
                val += values[i]
        corrected[p] = val
        kept[p] = k
        removed[p] = rm
    return corrected, kept, removed


def _knapsack_correct_nb_wrap(masks, theta, values, capacity, mode):
    keys = _removal_keys(theta, values, mode)
    return _knapsack_correct_nb(masks, theta, values, capacity, mode, keys)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    eval_segments = _eval_segments_nb
    claim_sweep = _claim_sweep_nb
    lower_envelope = _lower_envelope_nb
    edmonds_karp = _edmonds_karp_nb_wrap
    knapsack_correct = _knapsack_correct_nb_wrap
else:
    eval_segments = _eval_segments_py
    claim_sweep = _claim_sweep_py
    lower_envelope = _lower_envelope_py
    edmonds_karp = _edmonds_karp_py
    knapsack_correct = _knapsack_correct_py


def envelope_of_lines(slopes, icepts, owners, lo, hi):
    """Piecewise lower envelope of lines y = a*x + b over [lo, hi].

    Returns (piece_lo, piece_hi, piece_owner) tiling [lo, hi] exactly. Ties
    between identical lines resolve to the smallest owner id; parallel lines
    keep only the lowest intercept.
    """
    a = np.asarray(slopes, dtype=np.float64)
    b = np.asarray(icepts, dtype=np.float64)
    owners = np.asarray(owners, dtype=np.int64)
    # left-to-right visiting order of a lower envelope: slope descending;
    # for equal slopes the lowest intercept, then the smallest owner, wins
    order = np.lexsort((owners, b, -a))
    a, b, owners = a[order], b[order], owners[order]
    keep = np.ones(a.shape[0], dtype=bool)
    keep[1:] = a[1:] != a[:-1]
    a, b, owners = a[keep], b[keep], owners[keep]
    plo, phi, pidx = lower_envelope(a, b, float(lo), float(hi))
    return plo, phi, owners[pidx]


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs."""
    bounds = np.array([0.0, 1.0, 2.0])
    kinds = np.array([KIND_LIN, KIND_RAT], dtype=np.int64)
    coefs = np.array([[1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0]])
    eval_segments(bounds, kinds, coefs, np.array([0.5, 1.5]))
    claim_sweep(
        np.array([0, 1], dtype=np.int64),
        np.array([0.0, 0.0]),
        np.array([1.0, 2.0]),
        0.0,
        2.0,
    )
    lower_envelope(np.array([1.0, -1.0]), np.array([0.0, 1.0]), 0.0, 1.0)
    cap = np.zeros((2, 2))
    cap[0, 1] = 1.0
    edmonds_karp(cap, 0, 1, 1e-9)
    knapsack_correct(
        np.array([3], dtype=np.int64),
        np.array([1.0, 1.0]),
        np.array([1.0, 2.0]),
        1.5,
        REMOVE_RATIO_ASC,
    )
