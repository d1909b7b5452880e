import json

import numpy as np
import pytest

from routecf.cli import main
from routecf.core import instance_to_dict
from routecf.solver import SolverConfig, solve
from test_solver import random_tsptw


@pytest.fixture
def inst_file(tmp_path):
    inst = random_tsptw(6, np.random.default_rng(31))
    path = tmp_path / "instance.json"
    path.write_text(json.dumps(instance_to_dict(inst)))
    return inst, path


def run(*argv):
    return main(list(argv))


class TestSolveCommand:
    def test_writes_route(self, inst_file, tmp_path):
        _, path = inst_file
        out = tmp_path / "route.json"
        assert run("solve", "--instance", str(path), "--out", str(out)) == 0
        route = json.loads(out.read_text())["route"]
        assert route["order"][0] == 0 and route["order"][-1] == 0

    def test_prefix_honored(self, inst_file, tmp_path):
        _, path = inst_file
        out = tmp_path / "route.json"
        assert run("solve", "--instance", str(path), "--prefix", "0-3",
                   "--out", str(out)) == 0
        assert json.loads(out.read_text())["route"]["order"][:2] == [0, 3]

    def test_exact_engine(self, inst_file, tmp_path):
        _, path = inst_file
        out = tmp_path / "route.json"
        assert run("solve", "--instance", str(path), "--engine", "exact",
                   "--out", str(out)) == 0

    def test_bad_prefix_is_error(self, inst_file, tmp_path, capsys):
        _, path = inst_file
        assert run("solve", "--instance", str(path),
                   "--prefix", "0-3,5-1") == 2
        assert "error:" in capsys.readouterr().err


class TestDatagenTrainEvalPipeline:
    def test_end_to_end(self, tmp_path, capsys):
        data = tmp_path / "data"
        assert run("datagen", "--kind", "tsptw", "--n", "6", "--samples",
                   "10", "--split", "0.6,0.2,0.2", "--out", str(data),
                   "--cf") == 0
        for name in ("train", "val", "test", "cf_train"):
            assert (data / f"{name}.jsonl").exists()
        rows = [json.loads(l) for l in
                (data / "train.jsonl").read_text().splitlines()]
        assert len(rows) == 6
        assert len(rows[0]["labels"]) == len(rows[0]["route"]["order"]) - 1

        ckpt = tmp_path / "model.ckpt.npz"
        assert run("train", "--data", str(data), "--loss", "ce",
                   "--epochs", "2", "--batch-size", "8", "--out",
                   str(ckpt)) == 0
        assert ckpt.exists()

        conf = tmp_path / "conf.json"
        assert run("eval", "--model", str(ckpt), "--data",
                   str(data / "test.jsonl"), "--emit-seqconfmat",
                   str(conf)) == 0
        out = capsys.readouterr().out
        assert "macro-F1" in out
        payload = json.loads(conf.read_text())
        assert "per_step_counts" in payload and "macro_f1" in payload


class TestAnnotateCommand:
    def test_label_lines(self, tmp_path):
        rng = np.random.default_rng(5)
        rows_i, rows_r = [], []
        for sid in range(3):
            inst = random_tsptw(5, rng)
            route = solve(inst, config=SolverConfig())
            rows_i.append({"sample_id": sid,
                           "instance": instance_to_dict(inst)})
            rows_r.append({"sample_id": sid, "route": route.as_dict()})
        inst_path = tmp_path / "inst.jsonl"
        route_path = tmp_path / "routes.jsonl"
        out = tmp_path / "labels.jsonl"
        inst_path.write_text("\n".join(json.dumps(r) for r in rows_i))
        route_path.write_text("\n".join(json.dumps(r) for r in rows_r))
        assert run("annotate", "--routes", str(route_path), "--instances",
                   str(inst_path), "--plan", "tsptw", "--out", str(out)) == 0
        labels = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(labels) == 3
        assert labels[0]["class_names"] == ["route_length", "time_window"]
        assert all(isinstance(x, int) for x in labels[0]["labels"])


class TestPredictExplainCommands:
    def test_predict_without_model_uses_rule(self, inst_file, tmp_path):
        inst, path = inst_file
        route = solve(inst, config=SolverConfig())
        rpath = tmp_path / "route.json"
        rpath.write_text(json.dumps(route.as_dict()))
        out = tmp_path / "pred.json"
        assert run("predict", "--instance", str(path), "--route",
                   str(rpath), "--out", str(out)) == 0
        intentions = json.loads(out.read_text())["intentions"]
        assert len(intentions) == len(route.edges)

    def test_explain_bundle(self, inst_file, tmp_path):
        inst, path = inst_file
        route = solve(inst, config=SolverConfig())
        rpath = tmp_path / "route.json"
        rpath.write_text(json.dumps(route.as_dict()))
        alt = next(i for i in range(1, 6) if i != route.order[1])
        out = tmp_path / "bundle.json"
        assert run("explain", "--instance", str(path), "--route", str(rpath),
                   "--t-ex", "1", "--cf-to", str(alt), "--text", "template",
                   "--out", str(out)) == 0
        bundle = json.loads(out.read_text())
        assert bundle["text_source"] == "template"
        assert bundle["question"]["cf_edge"] == [0, alt]
        assert "comparison" in bundle
