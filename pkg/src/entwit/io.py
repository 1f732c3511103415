"""Dataset and model persistence plus the versioned CSV/JSON report writers.

A dataset is a CSV body ``name.csv`` and a JSON header ``name.header.json``.
Floats are written with ``repr`` so that save -> load -> save is byte-stable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ann import MlpModel
from .collective import SettingsCatalog, batch_features
from .errors import CountMismatch, SchemaError, VersionMismatch
from .sampling import EnsembleSpec, StateDataset, format_mix

__all__ = [
    "DATASET_VERSION",
    "MODEL_VERSION",
    "REPORT_VERSION",
    "FeatureDataset",
    "build_features",
    "header_path",
    "save_dataset",
    "load_dataset",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
    "write_csv",
    "read_csv",
    "write_json",
]

DATASET_VERSION = 1
MODEL_VERSION = 1
REPORT_VERSION = 1


@dataclass
class FeatureDataset:
    probs: np.ndarray  # (n, N)
    entangled: np.ndarray
    min_pt_eig: np.ndarray
    purity: np.ndarray
    degenerate: np.ndarray  # (n, N) bool
    catalog: SettingsCatalog
    mix: list
    seed: int
    rho: np.ndarray | None = None

    def __len__(self):
        return len(self.probs)

    @property
    def n(self) -> int:
        return self.probs.shape[1]

    def class_counts(self) -> dict:
        ent = int(np.sum(self.entangled))
        return {"entangled": ent, "separable": len(self) - ent}


def build_features(states: StateDataset, catalog: SettingsCatalog, keep_states: bool = False) -> FeatureDataset:
    probs, degenerate = batch_features(states.rho, catalog)
    return FeatureDataset(probs, states.entangled.copy(), states.min_pt_eig.copy(),
                          states.purity.copy(), degenerate, catalog, list(states.mix), states.seed,
                          states.rho.copy() if keep_states else None)


def header_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".header.json")


def _fmt(x) -> str:
    return repr(float(x))


def _dataset_columns(catalog, with_states):
    cols = ["label", "min_pt_eig", "purity", "degenerate_mask"] + [f"P_{s}" for s in catalog.names]
    if with_states:
        cols += [f"rho_{i}{j}_{part}" for i in range(4) for j in range(4) for part in ("re", "im")]
    return cols


def save_dataset(ds: FeatureDataset, path) -> dict:
    """Write body and header; returns the header dict."""
    path = Path(path)
    with_states = ds.rho is not None
    cols = _dataset_columns(ds.catalog, with_states)
    header = {
        "format": "entwit-dataset",
        "version": DATASET_VERSION,
        "catalog": ds.catalog.to_json(),
        "mix": format_mix(ds.mix),
        "seed": int(ds.seed),
        "count": len(ds),
        "counts": ds.class_counts(),
        "with_states": with_states,
        "columns": cols,
    }
    weights = 1 << np.arange(ds.n)
    masks = (ds.degenerate.astype(np.int64) * weights).sum(axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(len(ds)):
            row = ["entangled" if ds.entangled[i] else "separable", _fmt(ds.min_pt_eig[i]),
                   _fmt(ds.purity[i]), str(int(masks[i]))]
            row += [_fmt(v) for v in ds.probs[i]]
            if with_states:
                flat = ds.rho[i].reshape(-1)
                row += [_fmt(v) for c in flat for v in (c.real, c.imag)]
            w.writerow(row)
    write_json(header_path(path), header)
    return header


def _mix_from_json(items):
    try:
        return [(EnsembleSpec(d["kind"], d["param"]), float(d["weight"])) for d in items]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed mix in header: {exc}") from None


def load_dataset(path) -> FeatureDataset:
    path = Path(path)
    try:
        with open(header_path(path)) as fh:
            header = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"unreadable dataset header: {exc}") from None
    if header.get("format") != "entwit-dataset":
        raise SchemaError(f"{header_path(path)} is not a dataset header")
    if header.get("version") != DATASET_VERSION:
        raise VersionMismatch(f"dataset version {header.get('version')} != {DATASET_VERSION}")
    catalog = SettingsCatalog.from_json(header["catalog"])
    with_states = bool(header["with_states"])
    cols = _dataset_columns(catalog, with_states)
    if header.get("columns") != cols:
        raise SchemaError("header columns do not match the catalog")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != cols:
            raise SchemaError("CSV column header does not match the dataset header")
        rows = list(reader)
    if len(rows) != header["count"]:
        raise CountMismatch(f"header declares {header['count']} records, body has {len(rows)}")
    n = catalog.n
    try:
        labels = np.array([r[0] for r in rows])
        num = np.array([r[1:] for r in rows], dtype=object)
        if any(len(r) != len(cols) for r in rows):
            raise ValueError("ragged row")
        min_eig = num[:, 0].astype(float) if rows else np.zeros(0)
        pur = num[:, 1].astype(float) if rows else np.zeros(0)
        masks = num[:, 2].astype(np.int64) if rows else np.zeros(0, dtype=np.int64)
        probs = num[:, 3:3 + n].astype(float) if rows else np.zeros((0, n))
        rho = None
        if with_states:
            flat = num[:, 3 + n:].astype(float)
            rho = (flat[:, 0::2] + 1j * flat[:, 1::2]).reshape(-1, 4, 4)
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"malformed dataset body: {exc}") from None
    if not set(labels) <= {"entangled", "separable"}:
        raise SchemaError("labels must be 'entangled' or 'separable'")
    for name, arr in (("min_pt_eig", min_eig), ("purity", pur), ("probabilities", probs)):
        if not np.isfinite(arr).all():
            raise SchemaError(f"non-finite values in {name}")
    if rho is not None and not np.isfinite(rho).all():
        raise SchemaError("non-finite values in embedded states")
    entangled = labels == "entangled"
    counts = {"entangled": int(entangled.sum()), "separable": int((~entangled).sum())}
    if counts != header["counts"]:
        raise CountMismatch(f"class counts {counts} differ from header {header['counts']}")
    degenerate = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    return FeatureDataset(probs, entangled, min_eig, pur, degenerate, catalog,
                          _mix_from_json(header["mix"]), int(header["seed"]), rho)


def model_to_json(model: MlpModel) -> dict:
    return {
        "format": "entwit-model",
        "version": MODEL_VERSION,
        "layer_sizes": [int(s) for s in model.layer_sizes],
        "activation": model.activation,
        "output_activation": model.output_activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "train_meta": model.train_meta,
    }


def model_from_json(d: dict) -> MlpModel:
    if d.get("format") != "entwit-model":
        raise SchemaError("not a model file")
    if d.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"model version {d.get('version')} != {MODEL_VERSION}")
    if d.get("activation") != "relu" or d.get("output_activation") != "sigmoid":
        raise SchemaError("only relu hidden / sigmoid output models are supported")
    try:
        return MlpModel(list(d["layer_sizes"]), [np.array(w, dtype=float) for w in d["weights"]],
                        [np.array(b, dtype=float) for b in d["biases"]], d["activation"],
                        d["output_activation"], dict(d.get("train_meta", {})))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed model file: {exc}") from None


def save_model(model: MlpModel, path) -> None:
    write_json(path, model_to_json(model), indent=None)


def load_model(path) -> MlpModel:
    try:
        with open(path) as fh:
            return model_from_json(json.load(fh))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"unreadable model file: {exc}") from None


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return "" if v is None else str(v)


def write_csv(path, schema: str, columns, rows) -> None:
    """CSV preceded by a ``# schema: <name>/<version>`` line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema}/{REPORT_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            w.writerow([_cell(v) for v in values])


def read_csv(path, schema: str) -> list[dict]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        expected = f"# schema: {schema}/{REPORT_VERSION}"
        if first != expected:
            raise VersionMismatch(f"{path}: expected '{expected}', found '{first}'")
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


def write_json(path, obj, indent: int | None = 2) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=indent, sort_keys=True, allow_nan=False)
        fh.write("\n")
