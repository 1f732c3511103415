"""Labeled random two-qubit states.

Randomness comes from Philox generators keyed by ``SeedSequence(seed,
spawn_key=(ensemble_index, chunk_index))``, so a dataset is reproducible no
matter how many worker threads generate its chunks.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEnsemble
from .quantum import bell_state, min_pt_eigenvalues

__all__ = [
    "EnsembleSpec",
    "LabeledState",
    "StateDataset",
    "parse_mix",
    "format_mix",
    "DEFAULT_MIX",
    "make_rng",
    "werner_state",
    "sample_states",
    "sample_state",
    "sample_dataset",
    "worker_count",
]

KINDS = ("ginibre_full", "ginibre_rank_k", "haar_pure", "werner", "product")
CHUNK = 8192
PPT_TOL = 1e-12


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    param: float | int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidEnsemble(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "ginibre_rank_k":
            if self.param is None or int(self.param) != self.param or not 1 <= self.param <= 4:
                raise InvalidEnsemble(f"ginibre rank must be in 1..4, got {self.param!r}")
            object.__setattr__(self, "param", int(self.param))
        elif self.kind == "werner":
            if self.param is None or not 0.0 <= float(self.param) <= 1.0:
                raise InvalidEnsemble(f"werner p must be in [0, 1], got {self.param!r}")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise InvalidEnsemble(f"{self.kind} takes no parameter")

    def __str__(self):
        if self.param is None:
            return self.kind
        return f"{self.kind}({self.param!r})"

    @classmethod
    def parse(cls, text: str) -> "EnsembleSpec":
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*", text)
        if not m:
            raise InvalidEnsemble(f"cannot parse ensemble {text!r}")
        kind, arg = m.groups()
        if arg is None or arg == "":
            return cls(kind)
        try:
            value = int(arg) if kind == "ginibre_rank_k" else float(arg)
        except ValueError:
            raise InvalidEnsemble(f"bad parameter in {text!r}") from None
        return cls(kind, value)


@dataclass(frozen=True)
class LabeledState:
    rho: np.ndarray
    entangled: bool
    min_pt_eig: float
    purity: float

    @property
    def label(self) -> str:
        return "entangled" if self.entangled else "separable"


@dataclass
class StateDataset:
    """Column-oriented batch of labeled states."""

    rho: np.ndarray  # (n, 4, 4) complex
    min_pt_eig: np.ndarray
    purity: np.ndarray
    entangled: np.ndarray  # bool
    kind: np.ndarray  # index into ``mix``
    mix: list
    seed: int

    def __len__(self):
        return len(self.rho)

    @property
    def entangled_fraction(self) -> float:
        return float(np.mean(self.entangled))

    def __getitem__(self, i) -> LabeledState:
        return LabeledState(self.rho[i], bool(self.entangled[i]), float(self.min_pt_eig[i]),
                            float(self.purity[i]))

    def subset(self, idx) -> "StateDataset":
        return StateDataset(self.rho[idx], self.min_pt_eig[idx], self.purity[idx],
                            self.entangled[idx], self.kind[idx], self.mix, self.seed)


DEFAULT_MIX = [(EnsembleSpec("ginibre_rank_k", k), 1.0) for k in (1, 2, 3, 4)]


def parse_mix(text: str) -> list[tuple[EnsembleSpec, float]]:
    """Parse ``"ginibre_rank_k(1):1, werner(0.5):2"``; ``"default"`` gives DEFAULT_MIX."""
    if text.strip() == "default":
        return list(DEFAULT_MIX)
    mix = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        spec, _, weight = part.rpartition(":") if re.search(r":[^)]*$", part) else (part, "", "1")
        try:
            w = float(weight)
        except ValueError:
            raise InvalidEnsemble(f"bad weight in {part!r}") from None
        mix.append((EnsembleSpec.parse(spec), w))
    _check_mix(mix)
    return mix


def format_mix(mix) -> list[dict]:
    return [{"kind": s.kind, "param": s.param, "weight": float(w)} for s, w in mix]


def _check_mix(mix):
    if not mix:
        raise InvalidEnsemble("empty mix")
    weights = np.array([w for _, w in mix], dtype=float)
    if np.any(weights < 0) or not np.isfinite(weights).all() or weights.sum() <= 0:
        raise InvalidEnsemble("mix weights must be non-negative with a positive sum")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def worker_count() -> int:
    try:
        n = int(os.environ.get("ENTWIT_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def werner_state(p: float) -> np.ndarray:
    return p * bell_state("psi-") + (1 - p) * np.eye(4, dtype=complex) / 4


def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _ginibre(rng, n, dim, rank):
    g = _complex_gaussian(rng, (n, dim, rank))
    r = g @ g.conj().transpose(0, 2, 1)
    return r / np.trace(r, axis1=1, axis2=2).real[:, None, None]


def sample_states(spec: EnsembleSpec, n: int, rng) -> np.ndarray:
    """Draw ``n`` density matrices of one ensemble, shape ``(n, 4, 4)``."""
    if spec.kind == "ginibre_full":
        return _ginibre(rng, n, 4, 4)
    if spec.kind == "ginibre_rank_k":
        return _ginibre(rng, n, 4, spec.param)
    if spec.kind == "haar_pure":
        return _ginibre(rng, n, 4, 1)
    if spec.kind == "werner":
        return np.broadcast_to(werner_state(spec.param), (n, 4, 4)).copy()
    if spec.kind == "product":
        a = _ginibre(rng, n, 2, 2)
        b = _ginibre(rng, n, 2, 2)
        return np.einsum("nij,nkl->nikjl", a, b).reshape(n, 4, 4)
    raise InvalidEnsemble(spec.kind)


def _label(rhos):
    eig = min_pt_eigenvalues(rhos)
    pur = np.einsum("nij,nji->n", rhos, rhos).real
    return eig, pur, eig < -PPT_TOL


def sample_state(spec: EnsembleSpec, rng) -> LabeledState:
    rho = sample_states(spec, 1, rng)
    eig, pur, ent = _label(rho)
    return LabeledState(rho[0], bool(ent[0]), float(eig[0]), float(pur[0]))


def _allocate(weights, count):
    """Largest-remainder split of ``count`` proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    exact = w / w.sum() * count
    base = np.floor(exact).astype(int)
    rem = count - base.sum()
    order = np.argsort(-(exact - base), kind="stable")
    base[order[:rem]] += 1
    return base


def sample_dataset(mix, count: int, seed: int, workers: int | None = None) -> StateDataset:
    """Sample ``count`` labeled states with exact per-ensemble quotas, then shuffle.

    Quotas follow the mix weights by largest remainder, so a grid of eleven
    equally weighted Werner specs with ``count=11`` yields one state each.
    """
    if count <= 0:
        raise InvalidEnsemble("count must be positive")
    mix = list(mix)
    _check_mix(mix)
    quotas = _allocate([w for _, w in mix], count)
    jobs = []
    for j, ((spec, _), q) in enumerate(zip(mix, quotas)):
        for c, start in enumerate(range(0, q, CHUNK)):
            jobs.append((j, c, spec, min(CHUNK, q - start)))

    def run(job):
        j, c, spec, n = job
        return sample_states(spec, n, make_rng(seed, j, c))

    workers = workers or worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    rho = np.concatenate(parts)
    kind = np.concatenate([np.full(job[3], job[0], dtype=np.int64) for job in jobs])
    perm = make_rng(seed, len(mix), 0).permutation(count)
    rho, kind = rho[perm], kind[perm]
    eig, pur, ent = _label(rho)
    return StateDataset(rho, eig, pur, ent, kind, mix, seed)
