import json

import numpy as np
import pytest

from entwit.ann import TrainingHyper, init_model, predict, train
from entwit.collective import default_catalog
from entwit.errors import CountMismatch, SchemaError, VersionMismatch
from entwit.io import (build_features, header_path, load_dataset, load_model, read_csv, save_dataset,
                       save_model, write_csv, write_json)
from entwit.sampling import DEFAULT_MIX, sample_dataset


@pytest.fixture(scope="module")
def states():
    return sample_dataset(DEFAULT_MIX, 300, seed=21)


def saved(tmp_path, states, n=5, keep=False):
    path = tmp_path / "d.csv"
    save_dataset(build_features(states, default_catalog(n), keep_states=keep), path)
    return path


class TestDataset:
    @pytest.mark.parametrize("keep", [False, True])
    def test_byte_stable_round_trip(self, tmp_path, states, keep):
        path = saved(tmp_path, states, 12, keep)
        body, head = path.read_bytes(), header_path(path).read_bytes()
        ds = load_dataset(path)
        again = tmp_path / "e.csv"
        save_dataset(ds, again)
        assert again.read_bytes() == body
        assert header_path(again).read_bytes() == head

    def test_values_exact(self, tmp_path, states):
        fd = build_features(states, default_catalog(6), keep_states=True)
        path = tmp_path / "d.csv"
        save_dataset(fd, path)
        ds = load_dataset(path)
        assert np.array_equal(ds.probs, fd.probs)
        assert np.array_equal(ds.rho, fd.rho)
        assert np.array_equal(ds.entangled, fd.entangled)
        assert np.array_equal(ds.degenerate, fd.degenerate)
        assert ds.catalog.same_as(fd.catalog) and ds.mix == fd.mix and ds.seed == 21

    def test_header_matches_body(self, tmp_path, states):
        path = saved(tmp_path, states)
        head = json.loads(header_path(path).read_text())
        assert len(head["catalog"]["settings"]) == 5
        assert head["counts"]["entangled"] == int(states.entangled.sum())

    def test_truncated_body(self, tmp_path, states):
        path = saved(tmp_path, states)
        lines = path.read_text().splitlines(keepends=True)
        path.write_text("".join(lines[:-3]))
        with pytest.raises(CountMismatch):
            load_dataset(path)

    def test_version(self, tmp_path, states):
        path = saved(tmp_path, states)
        head = json.loads(header_path(path).read_text())
        head["version"] = 99
        header_path(path).write_text(json.dumps(head))
        with pytest.raises(VersionMismatch):
            load_dataset(path)

    def test_nan(self, tmp_path, states):
        path = saved(tmp_path, states)
        lines = path.read_text().splitlines(keepends=True)
        cells = lines[1].split(",")
        cells[5] = "nan"
        lines[1] = ",".join(cells)
        path.write_text("".join(lines))
        with pytest.raises(SchemaError, match="non-finite"):
            load_dataset(path)

    def test_relabeled_row(self, tmp_path, states):
        path = saved(tmp_path, states)
        text = path.read_text()
        target = "separable" if "\nentangled," in text else "entangled"
        source = "entangled" if target == "separable" else "separable"
        path.write_text(text.replace(f"\n{source},", f"\n{target},", 1))
        with pytest.raises(CountMismatch):
            load_dataset(path)

    def test_missing_header(self, tmp_path, states):
        path = saved(tmp_path, states)
        header_path(path).unlink()
        with pytest.raises(OSError):
            load_dataset(path)


class TestModel:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(400, 5))
        ent = x[:, 0] + rng.normal(0, 0.1, 400) > 0.5
        m, _ = train(init_model(5, 4), x, ent, TrainingHyper(epochs=2, seed=4))
        path = tmp_path / "m.json"
        save_model(m, path)
        back = load_model(path)
        probe = rng.uniform(size=(100, 5))
        assert np.array_equal(predict(m, probe), predict(back, probe))
        assert back.train_meta == json.loads(json.dumps(m.train_meta))
        save_model(back, tmp_path / "n.json")
        assert (tmp_path / "n.json").read_bytes() == path.read_bytes()

    def test_version(self, tmp_path):
        path = tmp_path / "m.json"
        save_model(init_model(3), path)
        d = json.loads(path.read_text())
        d["version"] = 2
        path.write_text(json.dumps(d))
        with pytest.raises(VersionMismatch):
            load_model(path)

    def test_shape_error(self, tmp_path):
        path = tmp_path / "m.json"
        save_model(init_model(3), path)
        d = json.loads(path.read_text())
        d["layer_sizes"][0] = 4
        path.write_text(json.dumps(d))
        with pytest.raises(SchemaError):
            load_model(path)

    def test_garbage(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_model(path)


class TestReports:
    def test_csv_schema_line(self, tmp_path):
        path = tmp_path / "r.csv"
        write_csv(path, "sweep", ["a", "b"], [{"a": 1, "b": 0.5}, (True, float("nan"))])
        assert path.read_text().splitlines()[0] == "# schema: sweep/1"
        assert read_csv(path, "sweep") == [{"a": "1", "b": "0.5"}, {"a": "1", "b": "nan"}]
        with pytest.raises(VersionMismatch):
            read_csv(path, "bins")

    def test_json_nan_becomes_null(self, tmp_path):
        path = tmp_path / "s.json"
        write_json(path, {"b": np.float64("nan"), "a": np.int64(3)})
        assert json.loads(path.read_text()) == {"a": 3, "b": None}
