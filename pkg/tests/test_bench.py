import json

import numpy as np
import pytest

from phreg.adapter import CorrectionSpec
from phreg.bench import (
    BenchConfig,
    DataConfig,
    evaluate_model,
    make_dataset,
    run_benchmark,
    train_ridge,
    write_outputs,
)
from phreg.cli import main as cli_main
from phreg.data import Dataset, GenSpec, Instance, generate_synthetic, split
from phreg.knapsack import KnapsackInstance
from phreg.maxflow import FlowNetwork
from phreg.predictor import LinearModel, TrainConfig

SPEC_A_I = CorrectionSpec("A", "I", sigma=0.1)


def _linear_dataset(problem, n=12, m=4, seed=0, noise=0.0):
    return generate_synthetic(problem, GenSpec(n=n, m=m, noise_std=noise, seed=seed))


NET = FlowNetwork(3, 0, 2, [(0, 1), (1, 2), (0, 2)])


class TestTrainRidge:
    def test_recovers_exact_linear_data(self):
        ds = _linear_dataset(NET, seed=1)
        rng = np.random.default_rng(1)
        alpha_star = rng.uniform(1.0, 3.0, 4)
        model = train_ridge(ds, 0.0)
        np.testing.assert_allclose(model.alpha, alpha_star, atol=1e-8)

    def test_shrinkage(self):
        ds = _linear_dataset(NET, seed=2, noise=1.0)
        model = train_ridge(ds, 1e12)
        np.testing.assert_allclose(model.alpha, np.zeros(4), atol=1e-6)

    def test_matches_independent_normal_equations(self):
        ds = _linear_dataset(NET, seed=3, noise=1.0)
        lam = 1e-3
        model = train_ridge(ds, lam)
        X = np.vstack([inst.features for inst in ds.instances])
        y = np.concatenate([inst.theta for inst in ds.instances])
        ref = np.linalg.inv(X.T @ X + lam * np.eye(4)) @ (X.T @ y)
        np.testing.assert_allclose(model.alpha, ref, atol=1e-8)

    def test_singular_suggests_positive_penalty(self):
        inst_p = KnapsackInstance([1.0, 1.0], 2.0)
        ds = Dataset(inst_p, [Instance(np.zeros((2, 2)), np.ones(2))] * 2)
        with pytest.raises(np.linalg.LinAlgError, match="positive ridge"):
            train_ridge(ds, 0.0)


class TestEvaluateModel:
    def test_perfect_model_zero_regret(self):
        ds = _linear_dataset(NET, seed=4)
        rng = np.random.default_rng(4)
        alpha_star = rng.uniform(1.0, 3.0, 4)
        mean, std = evaluate_model(LinearModel(alpha_star), ds, CorrectionSpec("A", "none"))
        assert (mean, std) == (0.0, 0.0)

    def test_single_instance_zero_std(self):
        ds = _linear_dataset(NET, seed=5, noise=1.5)
        one = Dataset(ds.problem, ds.instances[:1])
        _, std = evaluate_model(LinearModel(np.ones(4)), one, CorrectionSpec("B", "none"))
        assert std == 0.0

    def test_hand_traced_knapsack_instances(self):
        inst = KnapsackInstance([3.0, 2.0], 2.0)
        A = np.array([[1.0], [1.0]])  # with alpha=1, predictions are (1, 1)
        cases = [
            (np.array([2.0, 2.0]), 0.2),  # remove item 1, penalty 0.1*2
            (np.array([1.0, 1.0]), 0.0),  # estimate is truly feasible
            (np.array([3.0, 0.5]), 0.3),  # remove item 0, penalty 0.1*3
        ]
        ds = Dataset(inst, [Instance(A, theta) for theta, _ in cases])
        mean, std = evaluate_model(LinearModel(np.array([1.0])), ds, SPEC_A_I)
        regs = np.array([want for _, want in cases])
        assert mean == pytest.approx(regs.mean(), abs=1e-12)
        assert std == pytest.approx(regs.std(), abs=1e-12)  # population std


class TestRunBenchmark:
    def _cfg(self, **kw):
        data = DataConfig(
            problem_kind="knapsack",
            n=14,
            m=4,
            n_items=5,
            capacity=40.0,
            noise_std=2.0,
        )
        base = dict(
            data=data,
            correction=SPEC_A_I,
            train_cfg=TrainConfig(i0=(-50.0, 50.0), max_passes=2),
            seeds=(1,),
            methods=("ridge",),
        )
        base.update(kw)
        return BenchConfig(**base)

    def test_single_seed_ridge_reproducible(self):
        cfg = self._cfg()
        rows1, payload1 = run_benchmark(cfg)
        rows2, payload2 = run_benchmark(cfg)
        assert payload1 == payload2
        assert rows1[0].mean_preg == rows2[0].mean_preg

    def test_zero_noise_blc_reaches_zero(self):
        cfg = self._cfg(
            data=DataConfig(
                problem_kind="knapsack", n=10, m=4, n_items=5, capacity=40.0, noise_std=0.0
            ),
            methods=("blc",),
        )
        rows, _ = run_benchmark(cfg)
        assert rows[0].mean_preg == pytest.approx(0.0, abs=1e-9)

    def test_partial_failure_recorded(self):
        cfg = self._cfg(
            data=DataConfig(problem_kind="maxflow", topology="polska", n=8, m=3, noise_std=0.0),
            correction=CorrectionSpec("C", "none"),  # invalid for max-flow
            methods=("ridge",),
        )
        rows, payload = run_benchmark(cfg)
        assert np.isnan(rows[0].mean_preg)
        assert payload["errors"]["ridge"]

    def test_write_outputs(self, tmp_path):
        cfg = self._cfg()
        rows, payload = run_benchmark(cfg)
        prefix = str(tmp_path / "out")
        write_outputs(prefix, rows, payload)
        data = json.loads((tmp_path / "out.json").read_text())
        assert data["rows"][0]["method"] == "ridge"
        assert "mean_runtime_s" not in json.dumps(data)  # runtimes live in csv/txt
        csv = (tmp_path / "out.csv").read_text()
        assert csv.splitlines()[0] == "method,mean_preg,std_preg,mean_runtime_s"
        assert "TOV" in (tmp_path / "out.txt").read_text()


class TestMakeDataset:
    def test_topology_fixture(self):
        dc = DataConfig(problem_kind="maxflow", topology="polska", n=4, m=3)
        ds = make_dataset(dc, seed=1)
        assert isinstance(ds.problem, FlowNetwork)
        assert ds.problem.n == 12

    def test_mcvc_default_topology(self):
        dc = DataConfig(problem_kind="mcvc", n=4, m=3)
        ds = make_dataset(dc, seed=1)
        assert ds.instances[0].theta.shape[0] == ds.problem.n + ds.problem.n_edges


class TestCli:
    def _gen(self, tmp_path, seed=1, n=12):
        out = tmp_path / "ds.json"
        rc = cli_main(
            [
                "generate",
                "--problem",
                "knapsack",
                "--n",
                str(n),
                "--m",
                "4",
                "--n-items",
                "5",
                "--capacity",
                "40",
                "--noise-std",
                "1.0",
                "--seed",
                str(seed),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        return out

    def test_generate_train_eval_round_trip(self, tmp_path, capsys):
        ds = self._gen(tmp_path)
        model = tmp_path / "model.json"
        loss = tmp_path / "loss.json"
        rc = cli_main(
            [
                "train",
                "--data",
                str(ds),
                "--method",
                "blc",
                "--correction",
                "A",
                "--penalty",
                "I",
                "--sigma",
                "0.1",
                "--i0=-50,50",
                "--max-passes",
                "2",
                "--out",
                str(model),
                "--dump-loss",
                str(loss),
            ]
        )
        assert rc == 0
        md = json.loads(model.read_text())
        assert set(md) == {"alpha", "config", "loss_history"}
        ld = json.loads(loss.read_text())
        assert "segments" in ld and "domain" in ld
        rc = cli_main(
            [
                "eval",
                "--data",
                str(ds),
                "--model",
                str(model),
                "--correction",
                "A",
                "--penalty",
                "I",
                "--sigma",
                "0.1",
            ]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert out["mean_preg"] >= 0

    def test_ridge_method(self, tmp_path):
        ds = self._gen(tmp_path)
        model = tmp_path / "ridge.json"
        rc = cli_main(
            ["train", "--data", str(ds), "--method", "ridge", "--out", str(model)]
        )
        assert rc == 0
        assert len(json.loads(model.read_text())["alpha"]) == 4

    def test_bench_and_report(self, tmp_path, capsys):
        prefix = tmp_path / "bench"
        rc = cli_main(
            [
                "bench",
                "--problem",
                "knapsack",
                "--n",
                "12",
                "--m",
                "4",
                "--n-items",
                "5",
                "--capacity",
                "40",
                "--noise-std",
                "1.0",
                "--correction",
                "A",
                "--penalty",
                "I",
                "--sigma",
                "0.1",
                "--i0=-50,50",
                "--max-passes",
                "2",
                "--seeds",
                "1,2",
                "--methods",
                "blc,ridge",
                "--out",
                str(prefix),
            ]
        )
        assert rc == 0
        capsys.readouterr()
        rc = cli_main(["report", "--in", str(prefix) + ".json"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "blc" in text and "ridge" in text

    def test_error_json_on_failure(self, tmp_path, capsys):
        rc = cli_main(
            ["train", "--data", str(tmp_path / "missing.json"), "--out", str(tmp_path / "m.json")]
        )
        assert rc == 1
        err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert "error" in err and "type" in err

    def test_malformed_dataset_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        rc = cli_main(["train", "--data", str(bad), "--out", str(tmp_path / "m.json")])
        assert rc == 1
        err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert err["type"] == "DataFormatError"
