"""Confusion matrices, threshold sweeps and error-vs-boundary curves.

All rates are fractions of the whole evaluated set, so for any report
``type1_rate + type2_rate + success_rate == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ann import MlpModel, predict
from .errors import NoFeasibleEpsilon

__all__ = [
    "ConfusionReport",
    "ErrorBinCurve",
    "confusion",
    "threshold_sweep",
    "sweep_model",
    "select_epsilon",
    "bin_errors_by_min_eig",
    "ComparisonRow",
    "table1_compare",
    "epsilon_grid",
]


@dataclass(frozen=True)
class ConfusionReport:
    te: int
    fe: int
    ts: int
    fs: int
    epsilon: float | None = None

    @property
    def total(self) -> int:
        return self.te + self.fe + self.ts + self.fs

    @property
    def type1_rate(self) -> float:
        return self.fe / self.total

    @property
    def type2_rate(self) -> float:
        return self.fs / self.total

    @property
    def success_rate(self) -> float:
        return (self.te + self.ts) / self.total

    @property
    def predicted_entangled(self) -> int:
        return self.te + self.fe

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "te": self.te, "fe": self.fe, "ts": self.ts,
                "fs": self.fs, "type1_rate": self.type1_rate, "type2_rate": self.type2_rate,
                "success_rate": self.success_rate}


@dataclass(frozen=True)
class ErrorBinCurve:
    bin_edges: np.ndarray
    error_prob: np.ndarray
    counts: np.ndarray
    errors: np.ndarray

    def bin_of(self, value: float) -> int:
        idx = int(np.searchsorted(self.bin_edges, value, side="right")) - 1
        return min(max(idx, 0), len(self.counts) - 1)


def confusion(predicted_entangled, true_entangled, epsilon: float | None = None) -> ConfusionReport:
    pred = np.asarray(predicted_entangled, dtype=bool)
    true = np.asarray(true_entangled, dtype=bool)
    if pred.size == 0:
        raise ValueError("cannot build a confusion matrix from no decisions")
    if pred.shape != true.shape:
        raise ValueError("prediction and label arrays differ in shape")
    return ConfusionReport(
        te=int(np.sum(pred & true)),
        fe=int(np.sum(pred & ~true)),
        ts=int(np.sum(~pred & ~true)),
        fs=int(np.sum(~pred & true)),
        epsilon=epsilon,
    )


def epsilon_grid(start: float = 0.01, stop: float = 0.99, step: float = 0.01) -> np.ndarray:
    n = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(n), 10)


def threshold_sweep(w, true_entangled, epsilons) -> list[ConfusionReport]:
    """One report per ``epsilon``, applying ``w < epsilon`` => entangled."""
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(eps >= 1) or np.any(np.diff(eps) <= 0):
        raise ValueError("epsilons must be ascending and inside (0, 1)")
    w = np.asarray(w)
    return [confusion(w < e, true_entangled, float(e)) for e in eps]


def sweep_model(model: MlpModel, features, true_entangled, epsilons) -> tuple[list, np.ndarray]:
    w = predict(model, features)
    return threshold_sweep(w, true_entangled, epsilons), w


def select_epsilon(reports, max_type1: float) -> ConfusionReport:
    """Best success rate among reports with Type-I <= ``max_type1``; ties go to smaller epsilon."""
    feasible = [r for r in reports if r.type1_rate <= max_type1]
    if not feasible:
        raise NoFeasibleEpsilon(f"no threshold keeps Type-I error <= {max_type1}")
    return min(feasible, key=lambda r: (-r.success_rate, r.epsilon))


def bin_errors_by_min_eig(min_eig, wrong, n_bins: int = 20) -> ErrorBinCurve:
    """Fraction of wrong decisions in equal-width bins of the minimal PT eigenvalue."""
    if n_bins < 3:
        raise ValueError("need at least 3 bins")
    min_eig = np.asarray(min_eig, dtype=float)
    wrong = np.asarray(wrong, dtype=bool)
    edges = np.linspace(min_eig.min(), min_eig.max(), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, min_eig, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    errors = np.bincount(idx, weights=wrong.astype(float), minlength=n_bins).astype(int)
    with np.errstate(invalid="ignore", divide="ignore"):
        prob = np.where(counts > 0, errors / np.maximum(counts, 1), np.nan)
    return ErrorBinCurve(edges, prob, counts, errors)


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    n_settings: int
    report: ConfusionReport

    def as_dict(self) -> dict:
        d = {"method": self.method, "n_settings": self.n_settings}
        d.update(self.report.as_dict())
        return d


def table1_compare(true_entangled, ann_confidences: dict, witness_detections: dict,
                   max_type1: float = 0.01, epsilons=None, projection_counts=None) -> list[ComparisonRow]:
    """ANN rows (one per N, epsilon chosen by ``select_epsilon``) followed by witness rows.

    ``ann_confidences`` maps N to the model's ``w`` on the shared test set;
    ``witness_detections`` maps a witness name to its boolean detections.
    """
    from .witnesses import PROJECTION_COUNTS

    counts = projection_counts or PROJECTION_COUNTS
    epsilons = epsilon_grid() if epsilons is None else epsilons
    rows = []
    for n in sorted(ann_confidences):
        reports = threshold_sweep(ann_confidences[n], true_entangled, epsilons)
        rows.append(ComparisonRow(f"ann-{n}", n, select_epsilon(reports, max_type1)))
    for name, detected in witness_detections.items():
        rows.append(ComparisonRow(name, counts.get(name, 0), confusion(detected, true_entangled)))
    return rows
