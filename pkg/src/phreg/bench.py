"""Benchmark harness: train, evaluate, aggregate, render tables.

Methods: "blc" (coordinate descent on post-hoc regret), "bl" (the
plain-regret baseline: trains on |estimated - true optimum| and ignores
corrections during training) and "ridge" (closed-form regression of
features onto parameters). Evaluation is always the post-hoc regret of the
numeric predict -> solve -> correct -> penalize pipeline on held-out data.

Wall-clock runtimes go into the CSV and text tables only; the JSON
artifacts stay bit-reproducible under fixed seeds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .adapter import CorrectionSpec, Sense, adapter_for, numeric_posthoc_regret
from .data import (
    Dataset,
    GenSpec,
    generate_synthetic,
    load_dataset,
    load_fixture,
    load_problem,
    make_knapsack_dataset,
    split,
)
from .predictor import LinearModel, TrainConfig, TrainResult, predict, ridge_fit, train

METHODS = ("blc", "bl", "ridge")

_ALPHA_RANGES = {"knapsack": (4.0, 8.5), "maxflow": (1.0, 3.0), "mcvc": (1.0, 3.0)}
_FIXTURE_NAMES = ("polska", "usanet", "geant", "abilene", "pdh")


@dataclass(frozen=True)
class DataConfig:
    """Where benchmark data comes from: a dataset file or seeded generation."""

    problem_kind: str
    dataset_path: str | None = None
    topology: str | None = None  # fixture name or path (maxflow / mcvc)
    n: int = 300
    m: int = 8
    n_items: int = 10
    capacity: float = 200.0
    value_mode: str = "weak"
    value_range: float = 500.0
    noise_std: float = 2.0
    feature_dist: str = "uniform"
    train_frac: float = 0.7


def load_topology(dc: DataConfig):
    name = dc.topology or {"maxflow": "polska", "mcvc": "abilene"}[dc.problem_kind]
    if name in _FIXTURE_NAMES:
        return load_fixture(name)
    return load_problem(name)


def make_dataset(dc: DataConfig, seed: int) -> Dataset:
    if dc.dataset_path is not None:
        return load_dataset(dc.dataset_path)
    spec = GenSpec(
        n=dc.n,
        m=dc.m,
        noise_std=dc.noise_std,
        seed=seed,
        feature_dist=dc.feature_dist,
        alpha_range=_ALPHA_RANGES[dc.problem_kind],
    )
    if dc.problem_kind == "knapsack":
        return make_knapsack_dataset(
            spec, dc.n_items, dc.capacity, dc.value_mode, dc.value_range
        )
    return generate_synthetic(load_topology(dc), spec)


@dataclass(frozen=True)
class BenchConfig:
    data: DataConfig
    correction: CorrectionSpec = CorrectionSpec()
    train_cfg: TrainConfig = TrainConfig()
    seeds: tuple[int, ...] = (1,)
    methods: tuple[str, ...] = METHODS
    ridge_lambda: float = 1e-6

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")


@dataclass
class ReportRow:
    method: str
    mean_preg: float
    std_preg: float
    mean_runtime_s: float
    errors: list[str] = field(default_factory=list)


def train_ridge(train_set: Dataset, ridge_lambda: float) -> LinearModel:
    """Pooled closed-form ridge fit of feature rows onto true parameters."""
    X = np.vstack([inst.features for inst in train_set.instances])
    y = np.concatenate([inst.theta for inst in train_set.instances])
    return LinearModel(ridge_fit(X, y, ridge_lambda))


def evaluate_model(
    model: LinearModel, test_set: Dataset, spec: CorrectionSpec
) -> tuple[float, float]:
    """Mean and population std of the post-hoc regret over the test set."""
    problem = test_set.problem
    adapter_for(problem).validate_correction(problem, spec)
    regs = np.empty(test_set.n)
    for i, inst in enumerate(test_set.instances):
        try:
            theta_hat = predict(inst.features, model)
            regs[i] = numeric_posthoc_regret(problem, theta_hat, inst.theta, spec)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed on instance {i}: {exc}") from exc
    return float(regs.mean()), float(regs.std())


def train_method(
    method: str, train_set: Dataset, cfg: BenchConfig, seed: int
) -> tuple[LinearModel, float]:
    """Train one method; returns the model and its wall-clock training time."""
    t0 = time.perf_counter()
    if method == "ridge":
        model = train_ridge(train_set, cfg.ridge_lambda)
    else:
        mode = "posthoc" if method == "blc" else "plain"
        tc = TrainConfig(**{**asdict(cfg.train_cfg), "loss_mode": mode, "seed": seed})
        result: TrainResult = train(train_set.problem, train_set.instances, tc, cfg.correction)
        model = result.model
    return model, time.perf_counter() - t0


def run_benchmark(cfg: BenchConfig):
    """Full matrix over seeds and methods; partial failures are recorded."""
    per_seed: dict[str, list[tuple[float, float, float]]] = {m: [] for m in cfg.methods}
    errors: dict[str, list[str]] = {m: [] for m in cfg.methods}
    tovs = []
    for seed in cfg.seeds:
        ds = make_dataset(cfg.data, seed)
        train_set, test_set = split(ds, cfg.data.train_frac, seed)
        ad = adapter_for(ds.problem)
        tovs.append(
            float(
                np.mean(
                    [ad.true_optimal_value(ds.problem, i.theta) for i in test_set.instances]
                )
            )
        )
        for method in cfg.methods:
            try:
                model, runtime = train_method(method, train_set, cfg, seed)
                mean, _ = evaluate_model(model, test_set, cfg.correction)
                per_seed[method].append((mean, runtime, seed))
            except Exception as exc:
                errors[method].append(f"seed {seed}: {exc}")
    rows = []
    for method in cfg.methods:
        runs = per_seed[method]
        if runs:
            means = np.array([r[0] for r in runs])
            times = np.array([r[1] for r in runs])
            rows.append(
                ReportRow(
                    method,
                    float(means.mean()),
                    float(means.std()),
                    float(times.mean()),
                    errors[method],
                )
            )
        else:
            rows.append(ReportRow(method, float("nan"), float("nan"), float("nan"), errors[method]))
    payload = {
        "config": _config_dict(cfg),
        "rows": [
            {"method": r.method, "mean_preg": r.mean_preg, "std_preg": r.std_preg}
            for r in rows
        ],
        "per_seed": {
            m: [{"seed": s, "mean_preg": v} for v, _, s in per_seed[m]] for m in cfg.methods
        },
        "errors": {m: errors[m] for m in cfg.methods if errors[m]},
        "tov_mean": float(np.mean(tovs)) if tovs else None,
        "std_kind": "population",
    }
    return rows, payload


def _config_dict(cfg: BenchConfig) -> dict:
    d = {
        "data": asdict(cfg.data),
        "correction": {
            "correction": cfg.correction.correction,
            "penalty": cfg.correction.penalty,
            "K": cfg.correction.K,
            "sigma": np.asarray(cfg.correction.sigma).tolist(),
        },
        "train": asdict(cfg.train_cfg),
        "seeds": list(cfg.seeds),
        "methods": list(cfg.methods),
        "ridge_lambda": cfg.ridge_lambda,
    }
    d["train"]["i0"] = list(d["train"]["i0"])
    return d


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_text(payload: dict, rows: list[ReportRow] | None = None) -> str:
    lines = []
    kind = payload["config"]["data"]["problem_kind"]
    corr = payload["config"]["correction"]
    lines.append(
        f"problem={kind} correction={corr['correction']} penalty={corr['penalty']} "
        f"seeds={payload['config']['seeds']}"
    )
    with_runtime = rows is not None
    head = f"{'method':<10}{'mean PReg':>12}{'std':>10}"
    if with_runtime:
        head += f"{'runtime(s)':>12}"
    lines.append(head)
    lines.append("-" * len(head))
    source = rows if with_runtime else payload["rows"]
    for r in source:
        if with_runtime:
            name, mean, std, rt = r.method, r.mean_preg, r.std_preg, r.mean_runtime_s
        else:
            name, mean, std, rt = r["method"], r["mean_preg"], r["std_preg"], None
        line = f"{name:<10}{mean:>12.2f}{std:>10.2f}"
        if rt is not None:
            line += f"{rt:>12.2f}"
        lines.append(line)
    if payload.get("tov_mean") is not None:
        lines.append(f"{'TOV':<10}{payload['tov_mean']:>12.2f}")
    for method, errs in payload.get("errors", {}).items():
        for e in errs:
            lines.append(f"# {method} failed: {e}")
    return "\n".join(lines) + "\n"


def render_csv(rows: list[ReportRow]) -> str:
    lines = ["method,mean_preg,std_preg,mean_runtime_s"]
    for r in rows:
        lines.append(f"{r.method},{r.mean_preg!r},{r.std_preg!r},{r.mean_runtime_s!r}")
    return "\n".join(lines) + "\n"


def write_outputs(prefix: str, rows: list[ReportRow], payload: dict):
    """<prefix>.json (deterministic), <prefix>.csv and <prefix>.txt (with runtimes)."""
    with open(f"{prefix}.json", "w") as f:
        json.dump(payload, f, indent=1)
    with open(f"{prefix}.csv", "w") as f:
        f.write(render_csv(rows))
    with open(f"{prefix}.txt", "w") as f:
        f.write(render_text(payload, rows))
