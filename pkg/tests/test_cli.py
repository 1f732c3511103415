import json
import subprocess
import sys

import numpy as np
import pytest

from entwit.cli import main, parse_grid
from entwit.io import header_path, load_dataset, read_csv


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    data = d / "train.csv"
    assert main(["gen-dataset", "--count", "3000", "--catalog", "5", "--seed", "7",
                 "--with-states", "--out", str(data)]) == 0
    model = d / "m5.json"
    assert main(["train", "--data", str(data), "--epochs", "3", "--seed", "1", "--out", str(model)]) == 0
    return d, data, model


class TestGenDataset:
    def test_identical_reruns(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            assert main(["gen-dataset", "--count", "1000", "--seed", "7", "--catalog", "12",
                         "--out", str(path)]) == 0
            outs.append((path.read_bytes(), header_path(path).read_bytes()))
        assert outs[0] == outs[1]

    def test_header_n_and_balance(self, tmp_path, capsys):
        path = tmp_path / "a.csv"
        assert main(["gen-dataset", "--count", "500", "--seed", "3", "--catalog", "6",
                     "--out", str(path)]) == 0
        out = capsys.readouterr().out
        head = json.loads(header_path(path).read_text())
        assert len(head["catalog"]["settings"]) == 6
        ds = load_dataset(path)
        assert f"entangled {int(ds.entangled.sum())} " in out
        assert f"separable {int((~ds.entangled).sum())} " in out

    def test_bad_mix_exit_2(self, tmp_path):
        assert main(["gen-dataset", "--count", "10", "--mix", "bures(1)", "--out", str(tmp_path / "x.csv")]) == 2

    def test_unwritable_exit_3(self, tmp_path):
        assert main(["gen-dataset", "--count", "10", "--out", str(tmp_path / "no" / "x.csv")]) == 3


class TestPipeline:
    def test_training_report(self, work):
        d, _, model = work
        rows = read_csv(d / "m5.training.csv", "entwit-training")
        assert [int(r["epoch"]) for r in rows] == [0, 1, 2]
        meta = json.loads(model.read_text())["train_meta"]
        assert meta["n_in"] == 5 and meta["seed"] == 1

    def test_eval_outputs(self, work):
        d, data, model = work
        prefix = d / "ev"
        assert main(["eval", "--data", str(data), "--model", str(model), "--max-type1", "0.05",
                     "--out", str(prefix)]) == 0
        sweep = read_csv(f"{prefix}_sweep.csv", "entwit-sweep")
        assert len(sweep) == 99
        bins = read_csv(f"{prefix}_bins.csv", "entwit-bins")
        assert sum(int(b["count"]) for b in bins) == 3000
        summary = json.loads(open(f"{prefix}_summary.json").read())
        assert summary["selected"]["type1_rate"] <= 0.05
        assert set(summary["fixed_epsilons"]) == {"0.5", "0.9"}

    def test_eval_rejects_wrong_n(self, work, tmp_path):
        _, _, model = work
        other = tmp_path / "n6.csv"
        main(["gen-dataset", "--count", "50", "--catalog", "6", "--out", str(other)])
        assert main(["eval", "--data", str(other), "--model", str(model), "--out", str(tmp_path / "e")]) == 2

    def test_witness_bench(self, work):
        d, data, _ = work
        out = d / "wb.csv"
        assert main(["witness-bench", "--data", str(data), "--out", str(out)]) == 0
        rows = read_csv(out, "entwit-witness")
        assert [r["witness"] for r in rows] == ["collectibility", "fef", "entropic", "chsh"]
        assert all(int(r["fe"]) == 0 for r in rows)

    def test_witness_bench_needs_states(self, tmp_path):
        path = tmp_path / "a.csv"
        main(["gen-dataset", "--count", "20", "--out", str(path)])
        assert main(["witness-bench", "--data", str(path), "--out", str(tmp_path / "w.csv")]) == 2

    def test_compare(self, work):
        d, data, model = work
        out = d / "cmp.csv"
        assert main(["compare", "--data", str(data), "--models", str(model), "--max-type1", "0.05",
                     "--out", str(out)]) == 0
        rows = read_csv(out, "entwit-compare")
        assert rows[0]["method"] == "ann-5" and len(rows) == 5

    def test_missing_file_exit_3(self, tmp_path):
        assert main(["eval", "--data", str(tmp_path / "none.csv"), "--model", "x",
                     "--out", str(tmp_path / "e")]) == 3


class TestWernerScan:
    def test_noiseless_endpoints(self, work):
        d, _, model = work
        out = d / "ws0.csv"
        assert main(["werner-scan", "--model", str(model), "--shots", "0", "--out", str(out)]) == 0
        rows = read_csv(out, "entwit-werner")
        assert len(rows) == 51
        first, last = rows[0], rows[-1]
        assert first["collectibility_detected"] == "0" and last["collectibility_detected"] == "1"
        assert "ann_entangled_eps0.5" in first and "ann_entangled_eps0.9" in first
        assert all(abs(float(first[f"P_{n}"]) - 0.25) < 1e-12 for n in ("HH", "VV", "DD", "RR", "HV"))
        summary = json.loads((d / "ws0.summary.json").read_text())
        assert abs(summary["collectibility_onset"] - 0.9) < 1e-9

    def test_large_shots_converge(self, work):
        d, _, model = work
        exact, noisy = d / "e.csv", d / "n.csv"
        grid = "0:1:0.25"
        main(["werner-scan", "--model", str(model), "--shots", "0", "--p-grid", grid, "--out", str(exact)])
        main(["werner-scan", "--model", str(model), "--shots", "1000000", "--p-grid", grid,
              "--seed", "5", "--out", str(noisy)])
        for a, b in zip(read_csv(exact, "entwit-werner"), read_csv(noisy, "entwit-werner")):
            for n in ("HH", "VV", "DD", "RR", "HV"):
                p, q, post = float(a[f"P_{n}"]), float(b[f"P_{n}"]), int(b[f"post_{n}"])
                sigma = np.sqrt(max(p * (1 - p), 1e-12) / post)
                assert abs(p - q) <= 3 * sigma + 1e-12

    def test_requires_n5(self, tmp_path):
        data, model = tmp_path / "d.csv", tmp_path / "m.json"
        main(["gen-dataset", "--count", "300", "--catalog", "3", "--out", str(data)])
        main(["train", "--data", str(data), "--epochs", "1", "--out", str(model)])
        assert main(["werner-scan", "--model", str(model), "--out", str(tmp_path / "w.csv")]) == 2


def test_every_stage_is_byte_deterministic(tmp_path):
    def run(tag):
        d = tmp_path / tag
        d.mkdir()
        data, model = d / "d.csv", d / "m.json"
        cmds = [
            ["gen-dataset", "--count", "800", "--seed", "4", "--with-states", "--out", str(data)],
            ["train", "--data", str(data), "--epochs", "2", "--seed", "2", "--out", str(model)],
            ["eval", "--data", str(data), "--model", str(model), "--max-type1", "0.5", "--out", str(d / "ev")],
            ["witness-bench", "--data", str(data), "--out", str(d / "wb.csv")],
            ["compare", "--data", str(data), "--models", str(model), "--max-type1", "0.5", "--out", str(d / "cmp.csv")],
            ["werner-scan", "--model", str(model), "--shots", "500", "--seed", "3", "--out", str(d / "ws.csv")],
        ]
        for c in cmds:
            assert main(c) == 0
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    a, b = run("a"), run("b")
    assert len(a) == 11
    assert a == b


def test_grid_parser():
    assert np.allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(parse_grid("0.5, 0.9"), [0.5, 0.9])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "entwit", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "entwit" in res.stdout
