"""End-to-end desk-scale comparison: sample, featurize, train per N, evaluate.

One set of training states and one shared test set are used for every N, so
the rows of the comparison differ only in which projection settings the
network sees.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .ann import MlpModel, TrainingHyper, TrainingReport, init_model, predict, train
from .collective import batch_features, default_catalog
from .evaluation import (ConfusionReport, ErrorBinCurve, bin_errors_by_min_eig, confusion,
                         epsilon_grid, select_epsilon, threshold_sweep)
from .sampling import DEFAULT_MIX, StateDataset, sample_dataset
from .witnesses import WITNESSES, evaluate_all

__all__ = ["DeskScaleConfig", "DeskScaleResult", "run_desk_scale"]

log = logging.getLogger(__name__)


@dataclass
class DeskScaleConfig:
    n_train: int = 200_000
    n_test: int = 20_000
    ns: tuple = (3, 5, 6, 12, 15)
    train_seed: int = 2024
    test_seed: int = 4048
    max_type1: float = 0.015
    n_bins: int = 20
    hyper: TrainingHyper = field(default_factory=lambda: TrainingHyper(epochs=60))
    mix: list = field(default_factory=lambda: list(DEFAULT_MIX))


@dataclass
class DeskScaleResult:
    config: DeskScaleConfig
    test: StateDataset
    models: dict  # N -> MlpModel
    reports: dict  # N -> TrainingReport
    confidences: dict  # N -> w on the test set
    sweeps: dict  # N -> list[ConfusionReport]
    selected: dict  # N -> ConfusionReport
    curves: dict  # N -> ErrorBinCurve
    witness: dict  # name -> ConfusionReport
    witness_detected: dict
    train_entangled_fraction: float
    timings: dict


def run_desk_scale(config: DeskScaleConfig | None = None) -> DeskScaleResult:
    cfg = config or DeskScaleConfig()
    timings = {}
    t0 = time.perf_counter()
    train_states = sample_dataset(cfg.mix, cfg.n_train, cfg.train_seed)
    test_states = sample_dataset(cfg.mix, cfg.n_test, cfg.test_seed)
    timings["generation"] = time.perf_counter() - t0

    models: dict[int, MlpModel] = {}
    reports: dict[int, TrainingReport] = {}
    conf, sweeps, selected, curves = {}, {}, {}, {}
    eps = epsilon_grid()
    for n in cfg.ns:
        cat = default_catalog(n)
        t0 = time.perf_counter()
        x_train, _ = batch_features(train_states.rho, cat)
        x_test, _ = batch_features(test_states.rho, cat)
        timings[f"features_{n}"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        model, rep = train(init_model(n, cfg.hyper.seed), x_train, train_states.entangled, cfg.hyper)
        model.train_meta["catalog"] = cat.to_json()
        timings[f"train_{n}"] = time.perf_counter() - t0
        w = predict(model, x_test)
        sweep = threshold_sweep(w, test_states.entangled, eps)
        chosen = select_epsilon(sweep, cfg.max_type1)
        wrong = (w < chosen.epsilon) != test_states.entangled
        models[n], reports[n], conf[n], sweeps[n], selected[n] = model, rep, w, sweep, chosen
        curves[n] = bin_errors_by_min_eig(test_states.min_pt_eig, wrong, cfg.n_bins)
        log.info("N=%d eps=%.2f success=%.4f type1=%.4f (%d epochs, %.0fs)", n, chosen.epsilon,
                 chosen.success_rate, chosen.type1_rate, rep.epochs_run, timings[f"train_{n}"])

    t0 = time.perf_counter()
    results = evaluate_all(test_states.rho, WITNESSES)
    timings["witnesses"] = time.perf_counter() - t0
    detected = {name: det for name, (_, det) in results.items()}
    witness = {name: confusion(det, test_states.entangled) for name, det in detected.items()}
    return DeskScaleResult(cfg, test_states, models, reports, conf, sweeps, selected, curves,
                           witness, detected, train_states.entangled_fraction, timings)
