"""Exact training of linear predictors with post-hoc regret.

Predict-then-optimize for problems whose objective and constraints carry
unknown parameters: a linear model predicts the parameters, coordinate
descent minimizes the exact piecewise post-hoc regret (corrected objective
gap plus correction penalty), and built-in adapters cover maximum flow
with unknown capacities, 0-1 knapsack with unknown weights, and a
minimum-cost vertex cover variant with unknown costs and edge values.
"""

from . import kernels
from .adapter import (
    Adapter,
    ConvertPiece,
    CorrectPiece,
    CorrectionSpec,
    ParamVector,
    Sense,
    adapter_by_name,
    adapter_for,
    assemble_loss,
    construct_coordinate,
    evaluate_preg,
    numeric_posthoc_regret,
)
from .bench import BenchConfig, DataConfig, evaluate_model, run_benchmark, train_ridge
from .data import (
    Dataset,
    GenSpec,
    Instance,
    generate_synthetic,
    load_dataset,
    load_fixture,
    make_knapsack_dataset,
    pisinger_values,
    save_dataset,
    split,
)
from .knapsack import ItemSubset, KnapsackInstance
from .maxflow import FlowNetwork
from .mcvc import VcGraph, VertexPick
from .oracles import (
    OracleResult,
    feasibility_check,
    knapsack_exhaustive,
    maxflow_numeric,
    mcvc_exhaustive,
    true_optimal_value,
)
from .piecewise import (
    Constant,
    Interval,
    Linear,
    PiecewiseFn,
    RationalLinear,
    argmin,
    pointwise_max,
    pointwise_min,
    scale,
    subtract,
)
from .piecewise import add as pw_add
from .predictor import LinearModel, TrainConfig, TrainResult, predict, train

__version__ = "0.1.0"
