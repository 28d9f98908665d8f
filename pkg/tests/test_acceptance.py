"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with: pytest tests/test_acceptance.py -v -s
"""

import json
import time

import numpy as np
import pytest

from phreg import piecewise as pw
from phreg.adapter import (
    CorrectionSpec,
    ParamVector,
    adapter_for,
    assemble_loss,
    convert_objective_fn,
    evaluate_preg,
    numeric_posthoc_regret,
)
from phreg.bench import BenchConfig, DataConfig, evaluate_model, run_benchmark, train_method
from phreg.cli import main as cli_main
from phreg.data import GenSpec, generate_synthetic, load_fixture, make_knapsack_dataset, split
from phreg.knapsack import KnapsackInstance, solve_knapsack, subset_sums
from phreg.maxflow import FlowNetwork, solve_numeric
from phreg.mcvc import VcGraph, solve_mcvc
from phreg.predictor import TrainConfig, pick_representative, train

from conftest import random_affine_fn, random_network, random_vcgraph


def _report(num, name, t0, extra=""):
    dt = time.perf_counter() - t0
    print(f"\n[criterion {num:02d}] {name}: PASS ({dt:.1f} s){extra}")


def _random_knapsack(rng, n_items=8):
    return KnapsackInstance(rng.uniform(1, 10, n_items), float(rng.uniform(6, 20)))


def _random_params(rng, t, scale=0.5):
    return ParamVector(rng.normal(0, scale, t), rng.uniform(1, 4, t))


class TestAcceptance:
    def test_01_piecewise_algebra_soundness(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(101)
        ops = {
            "add": (pw.add, lambda a, b: a + b),
            "subtract": (pw.subtract, lambda a, b: a - b),
            "max": (pw.pointwise_max, np.maximum),
            "min": (pw.pointwise_min, np.minimum),
        }
        for _ in range(1000):
            f = random_affine_fn(rng, max_segs=10)
            g = random_affine_fn(rng, max_segs=10)
            xs = rng.uniform(-5, 5, 1000)
            fx, gx = f.eval_many(xs), g.eval_many(xs)
            name = list(ops)[int(rng.integers(0, 4))]
            op, ref = ops[name]
            np.testing.assert_allclose(op(f, g).eval_many(xs), ref(fx, gx), atol=1e-9)
            s = float(rng.normal(0, 2))
            np.testing.assert_allclose(pw.scale(f, s).eval_many(xs), s * fx, atol=1e-9)
        dt = time.perf_counter() - t0
        assert dt < 5.0, f"runtime {dt:.1f}s exceeds 5s"
        _report(1, "piecewise algebra soundness", t0)

    def test_02_convert_oracle_equivalence(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(102)
        i0 = pw.Interval(-4.0, 4.0)
        # knapsack: exact
        for _ in range(20):
            inst = _random_knapsack(rng)
            p = _random_params(rng, inst.n_items)
            E = convert_objective_fn(adapter_for(inst).convert(inst, p, i0))
            vals = subset_sums(inst.values)
            for g in rng.uniform(i0.lo, i0.hi, 10):
                w = subset_sums(p.a * g + p.b)
                assert E.eval(g) == vals[w <= inst.capacity].max()
        # mcvc: 1e-9
        for _ in range(20):
            gph = random_vcgraph(rng)
            p = _random_params(rng, gph.n + gph.n_edges)
            E = convert_objective_fn(adapter_for(gph).convert(gph, p, i0))
            for g in rng.uniform(i0.lo, i0.hi, 10):
                th = p.at(g)
                want, _, _ = solve_mcvc(gph, th[: gph.n], th[gph.n :])
                assert abs(E.eval(g) - want) <= 1e-9
        # maxflow: 1e-6
        for _ in range(20):
            net = random_network(rng)
            p = _random_params(rng, net.n_edges, scale=0.4)
            E = convert_objective_fn(adapter_for(net).convert(net, p, i0))
            for g in rng.uniform(i0.lo, i0.hi, 10):
                caps = np.maximum(p.at(g), 0.0)
                assert abs(E.eval(g) - solve_numeric(net, caps).value) <= 1e-6
        dt = time.perf_counter() - t0
        assert dt < 60.0, f"runtime {dt:.1f}s exceeds 60s"
        _report(2, "convert oracle equivalence", t0)

    def test_03_correction_soundness(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(103)
        i0 = pw.Interval(-3.0, 3.0)
        counts = {}

        def run_cases(make_problem, specs, materialize):
            for spec_name, spec in specs.items():
                done = 0
                while done < 200:
                    problem = make_problem()
                    ad = adapter_for(problem)
                    t = ad.n_params(problem)
                    p = _random_params(rng, t)
                    theta = rng.uniform(0.5, 4, t)
                    pieces = ad.convert(problem, p, i0)
                    for cp in ad.correct(problem, pieces, theta, spec):
                        iv = cp.interval
                        g = float(rng.uniform(iv.lo, iv.hi))
                        sol = materialize(cp, g)
                        assert ad.feasible(problem, sol, theta), (spec_name, g)
                        done += 1
                        if done >= 200:
                            break
                counts[spec_name] = done

        run_cases(
            lambda: random_network(rng),
            {
                "maxflow-A": CorrectionSpec("A", "none"),
                "maxflow-B": CorrectionSpec("B", "none"),
            },
            lambda cp, g: cp.corrected_solution.loads_at(g)
            if hasattr(cp.corrected_solution, "loads_at")
            else cp.corrected_solution,
        )
        run_cases(
            lambda: _random_knapsack(rng),
            {
                "knapsack-A": CorrectionSpec("A", "none"),
                "knapsack-B": CorrectionSpec("B", "none"),
                "knapsack-C": CorrectionSpec("C", "none"),
            },
            lambda cp, g: cp.corrected_solution,
        )
        run_cases(
            lambda: random_vcgraph(rng),
            {"mcvc-A": CorrectionSpec("A", "none")},
            lambda cp, g: cp.corrected_solution,
        )
        assert all(v >= 200 for v in counts.values())
        dt = time.perf_counter() - t0
        assert dt < 60.0, f"runtime {dt:.1f}s exceeds 60s"
        _report(3, "correction soundness (feasibility)", t0)

    def test_04_eq1_consistency(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(104)
        i0 = pw.Interval(-4.0, 4.0)
        m = 5
        setups = [
            (lambda: _random_knapsack(rng), CorrectionSpec("A", "I", sigma=0.1)),
            (lambda: _random_knapsack(rng), CorrectionSpec("B", "II", K=500.0)),
            (lambda: random_vcgraph(rng), CorrectionSpec("A", "none")),
            (lambda: random_network(rng), CorrectionSpec("A", "none")),
            (lambda: random_network(rng), CorrectionSpec("B", "I", K=10.0)),
        ]
        for make_problem, spec in setups:
            for _ in range(50):
                problem = make_problem()
                ad = adapter_for(problem)
                t = ad.n_params(problem)
                A = rng.uniform(0.5, 1.5, (t, m))
                alpha = rng.normal(0, 1, m)
                theta = rng.uniform(0.5, 4, t)
                k = int(rng.integers(0, m))
                if not (i0.lo <= alpha[k] <= i0.hi):
                    alpha[k] = float(rng.uniform(i0.lo, i0.hi))
                from phreg.adapter import construct_coordinate

                p = construct_coordinate(A, alpha, k)
                pieces = ad.convert(problem, p, i0)
                correct = ad.correct(problem, pieces, theta, spec)
                tov = ad.true_optimal_value(problem, theta)
                L = evaluate_preg(pieces, correct, tov, ad.sense)
                want = numeric_posthoc_regret(problem, A @ alpha, theta, spec)
                assert abs(L.eval(float(alpha[k])) - want) <= 1e-6
        _report(4, "Eq.1 consistency at the current coefficient", t0)

    def test_05_nonnegativity(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(105)
        i0 = pw.Interval(-3.0, 3.0)
        settings = [
            (lambda: random_network(rng), CorrectionSpec("A", "none")),
            *[
                (lambda: random_network(rng), CorrectionSpec("B", "I" if K else "none", K=K))
                for K in (0.0, 10.0, 30.0, 50.0)
            ],
            *[
                (lambda: _random_knapsack(rng), CorrectionSpec(c, "I", sigma=0.1))
                for c in "ABC"
            ],
            *[
                (lambda: _random_knapsack(rng), CorrectionSpec(c, "II", K=500.0))
                for c in "ABC"
            ],
            (lambda: random_vcgraph(rng), CorrectionSpec("A", "none")),
        ]
        for make_problem, spec in settings:
            seen = 0
            while seen < 1000:
                problem = make_problem()
                ad = adapter_for(problem)
                t = ad.n_params(problem)
                p = _random_params(rng, t)
                theta = rng.uniform(0.5, 4, t)
                pieces = ad.convert(problem, p, i0)
                correct = ad.correct(problem, pieces, theta, spec)
                tov = ad.true_optimal_value(problem, theta)
                L = evaluate_preg(pieces, correct, tov, ad.sense)
                for g in rng.uniform(i0.lo, i0.hi, 100):
                    assert L.eval(g) >= -1e-9
                seen += 100
        _report(5, "post-hoc regret nonnegativity", t0)

    def test_06_trainer_monotonicity(self):
        t0 = time.perf_counter()
        spec_k = CorrectionSpec("A", "I", sigma=0.1)
        for seed in range(10):
            gen = GenSpec(n=16, m=8, noise_std=4.0, seed=seed, alpha_range=(4.0, 8.5))
            ds = make_knapsack_dataset(gen, n_items=10, capacity=200.0)
            cfg = TrainConfig(max_passes=3, tol=0.0)
            res = train(ds.problem, ds.instances, cfg, spec_k)
            h = res.loss_history
            assert all(b <= a + 1e-9 for a, b in zip(h, h[1:])), f"knapsack seed {seed}"
        graph = load_fixture("abilene")
        for seed in range(10):
            gen = GenSpec(n=12, m=8, noise_std=2.0, seed=seed)
            ds = generate_synthetic(graph, gen)
            cfg = TrainConfig(max_passes=2, tol=0.0)
            res = train(graph, ds.instances, cfg, CorrectionSpec("A", "none"))
            h = res.loss_history
            assert all(b <= a + 1e-9 for a, b in zip(h, h[1:])), f"mcvc seed {seed}"
        _report(6, "trainer monotonicity per coordinate update", t0)

    def test_07_zero_regret_recovery(self):
        t0 = time.perf_counter()
        # knapsack
        gen = GenSpec(n=20, m=8, noise_std=0.0, seed=70, alpha_range=(4.0, 8.5))
        ds = make_knapsack_dataset(gen, n_items=10, capacity=200.0)
        res = train(
            ds.problem, ds.instances, TrainConfig(max_passes=3), CorrectionSpec("A", "I", sigma=0.1)
        )
        assert res.loss_history[-1] <= 1e-9, "knapsack"
        # mcvc
        graph = load_fixture("abilene")
        gen = GenSpec(n=12, m=8, noise_std=0.0, seed=71)
        ds = generate_synthetic(graph, gen)
        res = train(graph, ds.instances, TrainConfig(max_passes=2), CorrectionSpec("A", "none"))
        assert res.loss_history[-1] <= 1e-9, "mcvc"
        # maxflow with correction B
        net = FlowNetwork(
            6, 0, 5, [(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (1, 4)]
        )
        gen = GenSpec(n=12, m=8, noise_std=0.0, seed=72)
        ds = generate_synthetic(net, gen)
        res = train(net, ds.instances, TrainConfig(max_passes=2), CorrectionSpec("B", "none"))
        assert res.loss_history[-1] <= 1e-6, "maxflow-B"
        _report(7, "zero-regret recovery on realizable data", t0)

    def test_08_ordering_reproduction(self):
        t0 = time.perf_counter()
        seeds = tuple(range(1, 11))
        wins_vs_ridge = {}
        wins_vs_plain = {}
        for capacity in (100.0, 200.0, 300.0):
            cfg = BenchConfig(
                data=DataConfig(
                    problem_kind="knapsack",
                    n=300,
                    m=8,
                    n_items=10,
                    capacity=capacity,
                    value_mode="weak",
                    noise_std=15.0,
                ),
                correction=CorrectionSpec("A", "I", sigma=0.1),
                train_cfg=TrainConfig(max_passes=8),
                seeds=seeds,
                methods=("blc", "bl", "ridge"),
            )
            _, payload = run_benchmark(cfg)
            per_seed = payload["per_seed"]
            blc = {r["seed"]: r["mean_preg"] for r in per_seed["blc"]}
            bl = {r["seed"]: r["mean_preg"] for r in per_seed["bl"]}
            ridge = {r["seed"]: r["mean_preg"] for r in per_seed["ridge"]}
            assert not payload.get("errors"), payload.get("errors")
            wins_vs_ridge[capacity] = sum(blc[s] <= ridge[s] for s in seeds)
            wins_vs_plain[capacity] = sum(blc[s] <= bl[s] for s in seeds)
            assert wins_vs_ridge[capacity] >= 7, (capacity, wins_vs_ridge)
            assert wins_vs_plain[capacity] >= 7, (capacity, wins_vs_plain)
        dt = time.perf_counter() - t0
        assert dt < 900.0, f"runtime {dt:.1f}s exceeds 15min"
        _report(
            8,
            "ordering reproduction (knapsack, weak values)",
            t0,
            extra=f" wins vs ridge {wins_vs_ridge}, vs plain-regret {wins_vs_plain}",
        )

    def test_09_grid_search_quality(self):
        t0 = time.perf_counter()
        spec = CorrectionSpec("A", "none")
        nets = []
        # 20 fixed small networks: 4 shapes x 5 capacity profiles
        shapes = [
            FlowNetwork(2, 0, 1, [(0, 1)]),
            FlowNetwork(3, 0, 2, [(0, 1), (1, 2), (0, 2)]),
            FlowNetwork(4, 0, 3, [(0, 1), (0, 2), (1, 3), (2, 3)]),
            FlowNetwork(4, 0, 3, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]),
        ]
        for k, net in enumerate(shapes):
            t = net.n_edges
            for v in range(5):
                base = 1.0 + 0.25 * v
                a = np.array([0.4 if (i + v) % 2 == 0 else -0.3 for i in range(t)])
                b = np.full(t, base + 0.5)
                theta = np.array([base + 0.2 * ((i + k) % 3) for i in range(t)])
                nets.append((net, ParamVector(a, b), theta))
        assert len(nets) == 20
        i0 = pw.Interval(1.0, 3.0)
        worst = 0.0
        for net, p, theta in nets:
            ad = adapter_for(net)
            pieces = ad.convert(net, p, i0)
            correct = ad.correct(net, pieces, theta, spec)
            tov = ad.true_optimal_value(net, theta)
            L_exact = evaluate_preg(pieces, correct, tov, ad.sense)
            L_grid = assemble_loss([L_exact], grid_n=1000)
            g_star = pick_representative(L_grid, current=i0.lo, grid_n=1000)
            dense = L_exact.eval_many(np.linspace(i0.lo, i0.hi, 1_000_000)).min()
            err = L_exact.eval(g_star) - dense
            worst = max(worst, err)
            assert err <= 1e-3, err
        dt = time.perf_counter() - t0
        assert dt < 60.0, f"runtime {dt:.1f}s exceeds 60s"
        _report(9, "grid-search minimization quality", t0, extra=f" worst gap {worst:.2e}")

    def test_10_cli_determinism(self, tmp_path):
        t0 = time.perf_counter()

        def run_all(d):
            d.mkdir()
            ds = d / "ds.json"
            model = d / "model.json"
            loss = d / "loss.json"
            ev = d / "eval.json"
            prefix = d / "bench"
            assert cli_main([
                "generate", "--problem", "knapsack", "--n", "12", "--m", "4",
                "--n-items", "5", "--capacity", "40", "--noise-std", "2.0",
                "--seed", "7", "--out", str(ds),
            ]) == 0
            assert cli_main([
                "train", "--data", str(ds), "--method", "blc", "--correction", "A",
                "--penalty", "I", "--sigma", "0.1", "--i0=-50,50", "--max-passes", "2",
                "--seed", "7", "--out", str(model), "--dump-loss", str(loss),
            ]) == 0
            assert cli_main([
                "eval", "--data", str(ds), "--model", str(model), "--correction", "A",
                "--penalty", "I", "--sigma", "0.1", "--out", str(ev),
            ]) == 0
            assert cli_main([
                "bench", "--problem", "knapsack", "--n", "12", "--m", "4",
                "--n-items", "5", "--capacity", "40", "--noise-std", "2.0",
                "--correction", "A", "--penalty", "I", "--sigma", "0.1",
                "--i0=-50,50", "--max-passes", "2", "--seeds", "1,2",
                "--methods", "blc,ridge", "--out", str(prefix),
            ]) == 0
            return [ds, model, loss, ev, prefix.with_suffix(".json")]

        files1 = run_all(tmp_path / "run1")
        files2 = run_all(tmp_path / "run2")
        for f1, f2 in zip(files1, files2):
            b1, b2 = f1.read_bytes(), f2.read_bytes()
            assert b1 == b2, f"{f1.name} differs between runs"
            json.loads(b1)  # every compared artifact is JSON
        _report(10, "CLI determinism (bitwise-identical JSON)", t0)
