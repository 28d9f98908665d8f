"""Datasets: generation, serialization, splitting.

An instance pairs a feature matrix (one row of m features per unknown
parameter) with the true parameter vector. Synthetic generation draws
features, hidden coefficients and additive noise from a seeded stream and
floors the parameters at a positive value, standing in for the real
datasets the problems were originally run on. Knapsack item values follow
the classic Pisinger scheme (uncorrelated / weakly / almost strongly
correlated with the weights).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .adapter import adapter_for
from .knapsack import KnapsackInstance
from .maxflow import FlowNetwork
from .mcvc import VcGraph

PISINGER_R = 500.0


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    features: np.ndarray  # (t, m)
    theta: np.ndarray  # (t,)

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        if self.features.ndim != 2 or self.theta.ndim != 1:
            raise DataFormatError("features must be 2-d and theta 1-d")
        if self.features.shape[0] != self.theta.shape[0]:
            raise DataFormatError("features and theta disagree on parameter count")
        if not np.all(np.isfinite(self.theta)):
            raise DataFormatError("theta must be finite")


@dataclass(frozen=True)
class Dataset:
    problem: object
    instances: tuple[Instance, ...]

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if not self.instances:
            raise DataFormatError("dataset has no instances")
        t = adapter_for(self.problem).n_params(self.problem)
        for inst in self.instances:
            if inst.theta.shape[0] != t:
                raise DataFormatError(
                    f"instance has {inst.theta.shape[0]} parameters, problem wants {t}"
                )

    @property
    def n(self) -> int:
        return len(self.instances)

    @property
    def m(self) -> int:
        return self.instances[0].features.shape[1]


@dataclass(frozen=True)
class GenSpec:
    """How to draw a synthetic dataset; t comes from the problem."""

    n: int
    m: int = 8
    noise_std: float = 0.0
    seed: int = 0
    feature_dist: str = "uniform"  # uniform: U(0.5, 1.5); normal: N(0, 1)
    alpha_star: np.ndarray | None = None
    alpha_range: tuple[float, float] = (1.0, 3.0)
    floor: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two instances")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.feature_dist not in ("uniform", "normal"):
            raise ValueError(f"unknown feature_dist {self.feature_dist!r}")


def _draw(spec: GenSpec, t: int, rng: np.random.Generator):
    if spec.alpha_star is not None:
        alpha = np.asarray(spec.alpha_star, dtype=np.float64)
        if alpha.shape != (spec.m,):
            raise ValueError("alpha_star must have m entries")
    else:
        alpha = rng.uniform(*spec.alpha_range, size=spec.m)
    if spec.feature_dist == "uniform":
        feats = rng.uniform(0.5, 1.5, size=(spec.n, t, spec.m))
    else:
        feats = rng.standard_normal((spec.n, t, spec.m))
    noise = rng.normal(0.0, spec.noise_std, size=(spec.n, t)) if spec.noise_std > 0 else 0.0
    theta = np.maximum(spec.floor, feats @ alpha + noise)
    return alpha, feats, theta


def generate_synthetic(problem, spec: GenSpec) -> Dataset:
    """Features ~ feature_dist, theta = max(floor, A @ alpha* + noise)."""
    t = adapter_for(problem).n_params(problem)
    rng = np.random.default_rng(spec.seed)
    _, feats, theta = _draw(spec, t, rng)
    return Dataset(problem, tuple(Instance(feats[i], theta[i]) for i in range(spec.n)))


_PISINGER_MODES = ("uncorrelated", "weak", "almost-strong")


def pisinger_values(weights, mode: str, R: float = PISINGER_R, seed: int = 0) -> np.ndarray:
    """Knapsack item values correlated with the weights per Pisinger's scheme."""
    weights = np.asarray(weights, dtype=np.float64)
    if R <= 0:
        raise ValueError("R must be positive")
    rng = np.random.default_rng(seed)
    if mode == "uncorrelated":
        lo = np.ones_like(weights)
        hi = np.full_like(weights, R)
    elif mode == "weak":
        lo = np.maximum(1.0, weights - R / 10)
        hi = weights + R / 10
    elif mode == "almost-strong":
        lo = weights + R / 10 - R / 500
        hi = weights + R / 10 + R / 500
    else:
        raise ValueError(f"mode must be one of {_PISINGER_MODES}, got {mode!r}")
    return rng.uniform(lo, hi)


def make_knapsack_dataset(
    spec: GenSpec,
    n_items: int = 10,
    capacity: float = 200.0,
    value_mode: str = "weak",
    R: float = PISINGER_R,
) -> Dataset:
    """Weights from the synthetic generator; values once from the mean weights."""
    rng = np.random.default_rng(spec.seed)
    _, feats, theta = _draw(spec, n_items, rng)
    values = pisinger_values(theta.mean(axis=0), value_mode, R, spec.seed)
    problem = KnapsackInstance(values, capacity)
    return Dataset(problem, tuple(Instance(feats[i], theta[i]) for i in range(spec.n)))


def split(dataset: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle into disjoint, exhaustive train/test parts."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n)
    n_train = int(round(train_frac * dataset.n))
    tr = tuple(dataset.instances[i] for i in perm[:n_train])
    te = tuple(dataset.instances[i] for i in perm[n_train:])
    return Dataset(dataset.problem, tr), Dataset(dataset.problem, te)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_PROBLEM_KINDS = {
    "maxflow": FlowNetwork,
    "knapsack": KnapsackInstance,
    "mcvc": VcGraph,
}


def problem_from_json_dict(d: dict, kind: str | None = None) -> object:
    kind = kind or d.get("kind")
    if kind is None:  # infer from the file's shape
        if "s" in d and "t" in d:
            kind = "maxflow"
        elif "capacity" in d:
            kind = "knapsack"
        elif "edges" in d:
            kind = "mcvc"
    if kind not in _PROBLEM_KINDS:
        raise DataFormatError(f"cannot determine problem kind from {sorted(d)}")
    return _PROBLEM_KINDS[kind].from_json_dict(d)


def load_problem(path, kind: str | None = None) -> object:
    return problem_from_json_dict(_read_json(path), kind)


def dataset_to_json_dict(ds: Dataset) -> dict:
    return {
        "problem": ds.problem.to_json_dict(),
        "instances": [
            {"features": inst.features.tolist(), "theta": inst.theta.tolist()}
            for inst in ds.instances
        ],
    }


def save_dataset(ds: Dataset, path):
    with open(path, "w") as f:
        json.dump(dataset_to_json_dict(ds), f)


def _read_json(path) -> dict:
    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path}:{e.lineno}: {e.msg}") from None


def load_dataset(path) -> Dataset:
    d = _read_json(path)
    try:
        problem = problem_from_json_dict(d["problem"])
        instances = tuple(
            Instance(np.asarray(i["features"]), np.asarray(i["theta"]))
            for i in d["instances"]
        )
    except (KeyError, TypeError) as e:
        raise DataFormatError(f"{path}: malformed dataset ({e})") from None
    return Dataset(problem, instances)


def fixture_path(name: str) -> str:
    """Path of a bundled topology (polska, usanet, geant, abilene, pdh)."""
    res = resources.files("phreg").joinpath(f"fixtures/{name}.json")
    if not res.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return str(res)


def load_fixture(name: str) -> object:
    return load_problem(fixture_path(name))
