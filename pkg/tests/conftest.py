import numpy as np
import pytest

from phreg import kernels
from phreg.piecewise import Constant, Interval, Linear, PiecewiseFn


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    kernels.warmup()


def random_affine_fn(rng, domain=(-5.0, 5.0), max_segs=10) -> PiecewiseFn:
    """Random piecewise constant/linear function, possibly discontinuous."""
    lo, hi = domain
    n_seg = int(rng.integers(1, max_segs + 1))
    cuts = np.sort(rng.uniform(lo, hi, n_seg - 1))
    bounds = [lo, *cuts.tolist(), hi]
    kinds = []
    for _ in range(n_seg):
        if rng.random() < 0.4:
            kinds.append(Constant(float(rng.normal(0, 3))))
        else:
            kinds.append(Linear(float(rng.normal(0, 2)), float(rng.normal(0, 3))))
    return PiecewiseFn.from_cells(bounds, kinds)


def random_network(rng, n_min=4, n_max=8):
    """Small forward-edge network with an s-t chain plus chords."""
    from phreg.maxflow import FlowNetwork

    n = int(rng.integers(n_min, n_max + 1))
    edges = [(i, i + 1) for i in range(n - 1)]
    extra = [(u, v) for u in range(n) for v in range(u + 2, n)]
    take = rng.permutation(len(extra))[: int(rng.integers(1, min(len(extra), 2 * n)))]
    edges += [extra[i] for i in take]
    return FlowNetwork(n, 0, n - 1, sorted(edges))


def random_vcgraph(rng, n_min=4, n_max=7):
    from phreg.mcvc import VcGraph

    n = int(rng.integers(n_min, n_max + 1))
    edges = [(i, i + 1) for i in range(n - 1)]
    extra = [(u, v) for u in range(n) for v in range(u + 2, n)]
    take = rng.permutation(len(extra))[: int(rng.integers(1, n))]
    edges += [extra[i] for i in take]
    return VcGraph(n, sorted(edges))


def mid(iv: Interval) -> float:
    return iv.midpoint
