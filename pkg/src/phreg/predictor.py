"""Linear prediction model and the coordinate-descent training loop.

Training frees one coefficient at a time: every instance's parameters
become linear forms of the free coefficient, the adapter turns them into an
estimated-objective function, the correction turns that into a corrected
objective, and the per-instance post-hoc regrets sum into the loss L whose
minimizing region yields the coefficient update. The plain-regret mode
trains on |estimated optimum - true optimum| instead and skips corrections
during training (the classical baseline behavior).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import piecewise as pw
from .adapter import (
    CorrectionSpec,
    Sense,
    adapter_for,
    assemble_loss,
    construct_coordinate,
    convert_objective_fn,
    evaluate_preg,
)
from .piecewise import Interval, PiecewiseFn

KEEP_CURRENT_TOL = 1e-12


@dataclass(frozen=True)
class LinearModel:
    """Prediction f(A) = A @ alpha."""

    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        if self.alpha.ndim != 1 or not np.all(np.isfinite(self.alpha)):
            raise ValueError("alpha must be a finite 1-d vector")


def predict(A: np.ndarray, model: LinearModel) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != model.alpha.shape[0]:
        raise ValueError(f"feature matrix {A.shape} incompatible with alpha")
    return A @ model.alpha


@dataclass(frozen=True)
class TrainConfig:
    i0: tuple[float, float] = (-1000.0, 1000.0)
    max_passes: int = 20
    tol: float = 1e-6
    grid_n: int = 1000
    init: str = "ridge"  # ridge | ones | random
    seed: int = 0
    loss_mode: str = "posthoc"  # posthoc | plain
    ridge_lambda: float = 1e-8
    max_seconds: float | None = None  # wall-clock budget; breaks bit-determinism

    def __post_init__(self):
        lo, hi = self.i0
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("i0 must be a bounded interval")
        if self.grid_n < 2 or self.max_passes < 1:
            raise ValueError("grid_n >= 2 and max_passes >= 1 required")
        if self.init not in ("ridge", "ones", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.loss_mode not in ("posthoc", "plain"):
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}")

    @property
    def interval(self) -> Interval:
        return Interval(*self.i0)


@dataclass
class TrainResult:
    model: LinearModel
    loss_history: list[float] = field(default_factory=list)
    passes: int = 0
    converged: bool = False
    train_seconds: float = 0.0

    def to_json_dict(self, cfg: TrainConfig) -> dict:
        d = asdict(cfg)
        d["i0"] = list(d["i0"])
        return {
            "alpha": self.model.alpha.tolist(),
            "config": d,
            "loss_history": self.loss_history,
        }

    def to_json(self, cfg: TrainConfig) -> str:
        return json.dumps(self.to_json_dict(cfg))


def load_model(d: dict) -> LinearModel:
    return LinearModel(np.asarray(d["alpha"], dtype=np.float64))


def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form solution of min ||X a - y||^2 + lam ||a||^2."""
    if lam < 0:
        raise ValueError("ridge penalty must be nonnegative")
    m = X.shape[1]
    gram = X.T @ X + lam * np.eye(m)
    try:
        return np.linalg.solve(gram, X.T @ y)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "normal equations are singular; use a positive ridge penalty"
        ) from None


def _initial_alpha(instances, m: int, cfg: TrainConfig) -> np.ndarray:
    if cfg.init == "ones":
        alpha = np.ones(m)
    elif cfg.init == "random":
        alpha = np.random.default_rng(cfg.seed).standard_normal(m)
    else:
        X = np.vstack([inst.features for inst in instances])
        y = np.concatenate([inst.theta for inst in instances])
        alpha = ridge_fit(X, y, cfg.ridge_lambda)
    return np.clip(alpha, cfg.i0[0], cfg.i0[1])


def instance_loss_fn(
    problem, inst, alpha: np.ndarray, k: int, cfg: TrainConfig, spec: CorrectionSpec, tov: float
) -> PiecewiseFn:
    """Per-instance loss of the free coefficient k at the current alpha."""
    ad = adapter_for(problem)
    p = construct_coordinate(inst.features, alpha, k)
    convert = ad.convert(problem, p, cfg.interval)
    if cfg.loss_mode == "plain":
        est = convert_objective_fn(convert)
        return pw.absolute(pw.shift(est, -tov))
    correct = ad.correct(problem, convert, inst.theta, spec)
    return evaluate_preg(convert, correct, tov, ad.sense)


def train(
    problem,
    instances,
    cfg: TrainConfig,
    spec: CorrectionSpec | None = None,
    alpha0: np.ndarray | None = None,
) -> TrainResult:
    """Coordinate descent on the summed per-instance loss over I0.

    Round-robin over coefficients; each update replaces alpha_k with a
    representative of the minimizing region of L (the current value wins
    ties). Stops when a full pass improves the mean loss by less than
    cfg.tol relative, or when the pass/wall-clock budget runs out.
    ``alpha0`` overrides cfg.init with an explicit starting point.
    """
    instances = list(instances)
    if not instances:
        raise ValueError("training needs at least one instance")
    ad = adapter_for(problem)
    if spec is None:
        spec = CorrectionSpec()
    if cfg.loss_mode == "posthoc":
        ad.validate_correction(problem, spec)
    m = instances[0].features.shape[1]
    t0 = time.perf_counter()
    if alpha0 is not None:
        alpha = np.clip(np.asarray(alpha0, dtype=np.float64), cfg.i0[0], cfg.i0[1])
    else:
        alpha = _initial_alpha(instances, m, cfg)
    tovs = []
    for i, inst in enumerate(instances):
        try:
            tovs.append(ad.true_optimal_value(problem, inst.theta))
        except Exception as exc:
            raise RuntimeError(f"adapter failed on instance {i}: {exc}") from exc
    n = len(instances)
    history: list[float] = []
    passes = 0
    converged = False
    prev_pass_loss = None
    for _ in range(cfg.max_passes):
        pass_start_loss = None
        for k in range(m):
            fns = []
            for i, inst in enumerate(instances):
                try:
                    fns.append(instance_loss_fn(problem, inst, alpha, k, cfg, spec, tovs[i]))
                except Exception as exc:
                    raise RuntimeError(f"adapter failed on instance {i}: {exc}") from exc
            L = assemble_loss(fns, cfg.grid_n)
            if pass_start_loss is None:
                pass_start_loss = L.eval(float(alpha[k])) / n
                if not history:
                    history.append(pass_start_loss)
            alpha[k] = pick_representative(L, float(alpha[k]), cfg.grid_n)
            history.append(L.eval(float(alpha[k])) / n)
        passes += 1
        last = history[-1]
        base = prev_pass_loss if prev_pass_loss is not None else pass_start_loss
        if base - last < cfg.tol * max(abs(base), 1e-30):
            converged = True
            break
        prev_pass_loss = last
        if cfg.max_seconds is not None and time.perf_counter() - t0 > cfg.max_seconds:
            break
    return TrainResult(
        model=LinearModel(alpha.copy()),
        loss_history=history,
        passes=passes,
        converged=converged,
        train_seconds=time.perf_counter() - t0,
    )


def pick_representative(L: PiecewiseFn, current: float, grid_n: int) -> float:
    """Minimizing location of L; keeps the current point when already optimal."""
    gamma, v = pw.argmin(L, grid_n)
    if L.domain.contains(current) and L.eval(current) <= v + KEEP_CURRENT_TOL:
        return current
    return gamma
