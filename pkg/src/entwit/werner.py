"""Synthetic Werner-state experiment.

For each mixing weight ``p`` the collective probabilities of every setting are
turned into simulated counts.  Each of ``shots`` trials of a setting ends in
one of three outcomes: both local projections pass and the singlet fires,
both pass and it does not, or a local projection fails.  The ANN sees the
post-selected singlet fraction; collectibility sees the joint rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ann import MlpModel, predict
from .collective import SettingsCatalog, batch_joint, default_catalog
from .errors import DimensionMismatch, SchemaError
from .quantum import min_pt_eigenvalues
from .sampling import make_rng, werner_state
from .witnesses import COLLECTIBILITY_CATALOG, GUARD, collectibility_from_joint

__all__ = ["WernerScanRecord", "werner_scan", "simulate_counts", "onset", "model_catalog",
           "default_p_grid", "scan_rows"]


@dataclass
class WernerScanRecord:
    p: float
    min_pt_eig: float
    successes: dict  # setting name -> singlet coincidences
    postselected: dict  # setting name -> trials passing both local projections
    probs: np.ndarray  # model inputs
    ann_w: float
    ann_entangled: dict = field(default_factory=dict)  # epsilon -> bool
    collectibility_value: float = 0.0
    collectibility_detected: bool = False


def default_p_grid(step: float = 0.02) -> np.ndarray:
    return np.round(np.linspace(0.0, 1.0, int(round(1 / step)) + 1), 10)


def model_catalog(model: MlpModel) -> SettingsCatalog:
    meta = model.train_meta.get("catalog")
    if meta is None:
        return default_catalog(model.n_in)
    return SettingsCatalog.from_json(meta)


def simulate_counts(num, den, shots: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Multinomial draw per setting; returns (singlet successes, post-selected totals)."""
    num = np.clip(np.asarray(num, dtype=float), 0.0, 1.0)
    den = np.clip(np.asarray(den, dtype=float), num, 1.0)
    succ = np.empty(len(num), dtype=np.int64)
    post = np.empty(len(num), dtype=np.int64)
    for i, (a, b) in enumerate(zip(num, den)):
        k = rng.multinomial(shots, [a, b - a, max(0.0, 1.0 - b)])
        succ[i], post[i] = k[0], k[0] + k[1]
    return succ, post


def _union(*catalogs):
    seen = {}
    for cat in catalogs:
        for s in cat.settings:
            if s.name in seen:
                prev = seen[s.name]
                if not (np.allclose(prev.x, s.x) and np.allclose(prev.y, s.y)):
                    raise SchemaError(f"setting {s.name} is defined twice with different vectors")
            else:
                seen[s.name] = s
    return SettingsCatalog("union", list(seen.values()))


def werner_scan(model: MlpModel, p_grid, shots: int, seed: int = 0,
                epsilons=(0.5, 0.9)) -> list[WernerScanRecord]:
    if model.n_in != 5:
        raise DimensionMismatch(f"the Werner scan needs an N=5 model, got n_in={model.n_in}")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    cat = model_catalog(model)
    union = _union(cat, COLLECTIBILITY_CATALOG)
    records = []
    for k, p in enumerate(p_grid):
        rho = werner_state(float(p))
        num, den = batch_joint(rho, union)
        num, den = num[0], den[0]
        if shots == 0:
            succ = post = None
            joint = num
            frac = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        else:
            succ, post = simulate_counts(num, den, shots, make_rng(seed, k))
            joint = succ / shots
            frac = np.divide(succ, post, out=np.zeros(len(succ)), where=post > 0)
        by_name = dict(zip(union.names, frac))
        probs = np.array([by_name[n] for n in cat.names])
        w = float(predict(model, probs[None, :])[0])
        coll = float(collectibility_from_joint(dict(zip(union.names, joint))))
        records.append(WernerScanRecord(
            p=float(p),
            min_pt_eig=float(min_pt_eigenvalues(rho[None])[0]),
            successes={} if succ is None else dict(zip(union.names, succ.tolist())),
            postselected={} if post is None else dict(zip(union.names, post.tolist())),
            probs=probs,
            ann_w=w,
            ann_entangled={float(e): w < e for e in epsilons},
            collectibility_value=coll,
            collectibility_detected=coll < -GUARD,
        ))
    return records


def onset(ps, detected) -> float | None:
    """Smallest grid ``p`` from which every larger grid point is detected."""
    ps = np.asarray(ps, dtype=float)
    detected = np.asarray(detected, dtype=bool)
    order = np.argsort(ps)
    ps, detected = ps[order], detected[order]
    if not detected[-1]:
        return None
    k = len(ps) - 1
    while k > 0 and detected[k - 1]:
        k -= 1
    return float(ps[k])


def scan_rows(records, setting_names, model_names) -> tuple[list, list]:
    """Column names and row dicts for the scan CSV."""
    eps = sorted(records[0].ann_entangled) if records else []
    cols = ["p", "min_pt_eig"]
    cols += [f"succ_{n}" for n in setting_names] + [f"post_{n}" for n in setting_names]
    cols += [f"P_{n}" for n in model_names] + ["ann_w"]
    cols += [f"ann_entangled_eps{e:g}" for e in eps]
    cols += ["collectibility_value", "collectibility_detected"]
    rows = []
    for r in records:
        row = {"p": r.p, "min_pt_eig": r.min_pt_eig, "ann_w": r.ann_w,
               "collectibility_value": r.collectibility_value,
               "collectibility_detected": r.collectibility_detected}
        for n in setting_names:
            row[f"succ_{n}"] = r.successes.get(n)
            row[f"post_{n}"] = r.postselected.get(n)
        for n, v in zip(model_names, r.probs):
            row[f"P_{n}"] = v
        for e in eps:
            row[f"ann_entangled_eps{e:g}"] = r.ann_entangled[e]
        rows.append(row)
    return cols, rows
