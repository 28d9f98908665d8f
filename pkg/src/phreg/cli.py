"""Command-line interface.

Subcommands: generate (dataset synthesis), train (one method on one
dataset), eval (a saved model on a dataset), bench (the full seeded
matrix), report (re-render tables from a bench JSON). Failures print a
machine-readable error JSON and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .adapter import CorrectionSpec
from .bench import (
    BenchConfig,
    DataConfig,
    evaluate_model,
    make_dataset,
    render_text,
    run_benchmark,
    train_method,
    write_outputs,
)
from .data import load_dataset, save_dataset
from .predictor import TrainConfig, load_model, train


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected lo,hi")
    return float(parts[0]), float(parts[1])


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--problem", required=True, choices=("maxflow", "knapsack", "mcvc"))
    p.add_argument("--n", type=int, default=300, help="number of instances")
    p.add_argument("--m", type=int, default=8, help="features per parameter")
    p.add_argument("--noise-std", type=float, default=2.0)
    p.add_argument("--feature-dist", choices=("uniform", "normal"), default="uniform")
    p.add_argument("--topology", help="fixture name or JSON path (maxflow/mcvc)")
    p.add_argument("--n-items", type=int, default=10, help="knapsack items")
    p.add_argument("--capacity", type=float, default=200.0)
    p.add_argument(
        "--value-mode", choices=("uncorrelated", "weak", "almost-strong"), default="weak"
    )
    p.add_argument("--value-range", type=float, default=500.0, help="Pisinger R")


def _add_train_args(p: argparse.ArgumentParser):
    p.add_argument("--correction", choices=("A", "B", "C"), default="A")
    p.add_argument("--penalty", choices=("none", "I", "II"), default="none")
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--i0", type=_parse_pair, default=(-1000.0, 1000.0))
    p.add_argument("--grid-n", type=int, default=1000)
    p.add_argument("--max-passes", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-seconds", type=float, default=None)
    p.add_argument("--init", choices=("ridge", "ones", "random"), default="ridge")
    p.add_argument("--ridge-lambda", type=float, default=1e-6)


def _data_config(args) -> DataConfig:
    return DataConfig(
        problem_kind=args.problem,
        dataset_path=getattr(args, "data", None),
        topology=args.topology,
        n=args.n,
        m=args.m,
        n_items=args.n_items,
        capacity=args.capacity,
        value_mode=args.value_mode,
        value_range=args.value_range,
        noise_std=args.noise_std,
        feature_dist=args.feature_dist,
    )


def _correction_spec(args) -> CorrectionSpec:
    return CorrectionSpec(
        correction=args.correction, penalty=args.penalty, K=args.K, sigma=args.sigma
    )


def _train_config(args, seed: int, loss_mode: str = "posthoc") -> TrainConfig:
    return TrainConfig(
        i0=args.i0,
        max_passes=args.max_passes,
        tol=args.tol,
        grid_n=args.grid_n,
        init=args.init,
        seed=seed,
        loss_mode=loss_mode,
        max_seconds=args.max_seconds,
    )


def cmd_generate(args) -> int:
    ds = make_dataset(_data_config(args), args.seed)
    save_dataset(ds, args.out)
    print(json.dumps({"written": args.out, "n": ds.n, "m": ds.m}))
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    spec = _correction_spec(args)
    if args.method == "ridge":
        from .bench import train_ridge

        model = train_ridge(ds, args.ridge_lambda)
        out = {"alpha": model.alpha.tolist(), "config": {"method": "ridge", "ridge_lambda": args.ridge_lambda}, "loss_history": []}
    else:
        mode = "posthoc" if args.method == "blc" else "plain"
        cfg = _train_config(args, args.seed, mode)
        result = train(ds.problem, ds.instances, cfg, spec)
        out = result.to_json_dict(cfg)
        if args.dump_loss:
            fns = _final_loss(ds, result, cfg, spec)
            with open(args.dump_loss, "w") as f:
                json.dump(fns, f)
    with open(args.out, "w") as f:
        json.dump(out, f)
    print(json.dumps({"written": args.out, "final_loss": out["loss_history"][-1] if out["loss_history"] else None}))
    return 0


def _final_loss(ds, result, cfg: TrainConfig, spec: CorrectionSpec) -> dict:
    """Loss function of the last coordinate at the trained coefficients."""
    from .adapter import adapter_for, assemble_loss
    from .predictor import instance_loss_fn

    ad = adapter_for(ds.problem)
    alpha = result.model.alpha
    k = (len(alpha) - 1) if len(alpha) else 0
    tovs = [ad.true_optimal_value(ds.problem, inst.theta) for inst in ds.instances]
    fns = [
        instance_loss_fn(ds.problem, inst, alpha, k, cfg, spec, tovs[i])
        for i, inst in enumerate(ds.instances)
    ]
    return assemble_loss(fns, cfg.grid_n).to_json_dict()


def cmd_eval(args) -> int:
    ds = load_dataset(args.data)
    with open(args.model) as f:
        model = load_model(json.load(f))
    mean, std = evaluate_model(model, ds, _correction_spec(args))
    out = {"mean_preg": mean, "std_preg": std, "n": ds.n, "std_kind": "population"}
    if args.out:
        with open(args.out, "w") as f:
            json.dump(out, f)
    print(json.dumps(out))
    return 0


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        data=_data_config(args),
        correction=_correction_spec(args),
        train_cfg=_train_config(args, 0),
        seeds=args.seeds,
        methods=tuple(args.methods.split(",")),
        ridge_lambda=args.ridge_lambda,
    )
    rows, payload = run_benchmark(cfg)
    write_outputs(args.out, rows, payload)
    sys.stdout.write(render_text(payload, rows))
    return 0


def cmd_report(args) -> int:
    with open(args.inp) as f:
        payload = json.load(f)
    text = render_text(payload)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phreg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a dataset")
    _add_data_args(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train one method on a dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--method", choices=("blc", "bl", "ridge"), default="blc")
    t.add_argument("--seed", type=int, default=0)
    _add_train_args(t)
    t.add_argument("--out", required=True)
    t.add_argument("--dump-loss", help="write the final training loss function JSON")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a saved model")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--correction", choices=("A", "B", "C"), default="A")
    e.add_argument("--penalty", choices=("none", "I", "II"), default="none")
    e.add_argument("--K", type=float, default=0.0)
    e.add_argument("--sigma", type=float, default=0.0)
    e.add_argument("--out")
    e.set_defaults(fn=cmd_eval)

    b = sub.add_parser("bench", help="full benchmark matrix")
    _add_data_args(b)
    _add_train_args(b)
    b.add_argument("--seeds", type=_parse_seeds, default=(1,))
    b.add_argument("--methods", default="blc,bl,ridge")
    b.add_argument("--out", required=True, help="output path prefix")
    b.set_defaults(fn=cmd_bench)

    r = sub.add_parser("report", help="re-render tables from a bench JSON")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out")
    r.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
