"""Two-copy collective measurements.

Qubit order on the 16-dimensional two-copy space is (1, 2 | 3, 4): copy I holds
``rho`` on qubits 1-2 and copy II holds the subsystem-swapped ``rho`` on qubits
3-4.  A setting projects qubit 1 on ``|x>`` and qubit 4 on ``|y>`` (both carry
subsystem A) and post-selects a singlet on qubits 2-3 (both carry B).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDenominator, SchemaError, UnsupportedCatalog
from .quantum import (LOCAL_KETS, bell_state, check_projector, kron, partial_transpose, purity,
                      swap_subsystems)

__all__ = [
    "ProjectionSetting",
    "SettingsCatalog",
    "FeatureVector",
    "DENOMINATOR_FLOOR",
    "two_copy_state",
    "bell_singlet_projector",
    "collective_joint",
    "collective_probability",
    "feature_vector",
    "batch_joint",
    "batch_features",
    "default_catalog",
    "load_catalog",
    "SUPPORTED_N",
]

DENOMINATOR_FLOOR = 1e-12

_CATALOG_ORDER = ["HH", "VV", "DD", "RR", "HV", "DA", "VH", "AA", "LL", "DR", "RD", "HD",
                  "DH", "RH", "VL"]
_CATALOG_SIZES = {3: ["HH", "DD", "RR"], 5: _CATALOG_ORDER[:5], 6: _CATALOG_ORDER[:6],
                  12: _CATALOG_ORDER[:12], 15: _CATALOG_ORDER[:15]}
SUPPORTED_N = tuple(sorted(_CATALOG_SIZES))


@dataclass(frozen=True)
class ProjectionSetting:
    name: str
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        for attr in ("x", "y"):
            v = np.asarray(getattr(self, attr), dtype=complex).reshape(2)
            norm = np.linalg.norm(v)
            if norm < 1e-12:
                raise SchemaError(f"setting {self.name}: zero vector")
            object.__setattr__(self, attr, v / norm)

    @classmethod
    def from_name(cls, name: str) -> "ProjectionSetting":
        if len(name) != 2 or any(c not in LOCAL_KETS for c in name):
            raise UnsupportedCatalog(f"unknown setting name {name!r}")
        return cls(name, LOCAL_KETS[name[0]], LOCAL_KETS[name[1]])

    @property
    def pi_x(self) -> np.ndarray:
        return check_projector(np.outer(self.x, self.x.conj()))

    @property
    def pi_y(self) -> np.ndarray:
        return check_projector(np.outer(self.y, self.y.conj()))

    def to_json(self) -> dict:
        return {"name": self.name,
                "x": [float(v) for c in self.x for v in (c.real, c.imag)],
                "y": [float(v) for c in self.y for v in (c.real, c.imag)]}

    @classmethod
    def from_json(cls, d: dict) -> "ProjectionSetting":
        try:
            x = np.array(d["x"], dtype=float)
            y = np.array(d["y"], dtype=float)
            if x.shape != (4,) or y.shape != (4,):
                raise ValueError
            return cls(str(d["name"]), x[0::2] + 1j * x[1::2], y[0::2] + 1j * y[1::2])
        except (KeyError, TypeError, ValueError):
            raise SchemaError(f"malformed setting entry: {d!r}") from None


@dataclass(frozen=True)
class SettingsCatalog:
    name: str
    settings: tuple

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        names = [s.name for s in self.settings]
        if len(set(names)) != len(names):
            raise SchemaError("setting names must be unique")
        if not names:
            raise SchemaError("catalog is empty")

    @property
    def n(self) -> int:
        return len(self.settings)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.settings]

    def to_json(self) -> dict:
        return {"name": self.name, "settings": [s.to_json() for s in self.settings]}

    @classmethod
    def from_json(cls, d) -> "SettingsCatalog":
        if isinstance(d, list):
            d = {"name": "custom", "settings": d}
        try:
            return cls(str(d.get("name", "custom")),
                       [ProjectionSetting.from_json(s) for s in d["settings"]])
        except (KeyError, AttributeError, TypeError):
            raise SchemaError("catalog must be a list of settings or {name, settings}") from None

    def same_as(self, other: "SettingsCatalog", tol: float = 1e-12) -> bool:
        if self.names != other.names:
            return False
        return all(np.allclose(a.x, b.x, atol=tol) and np.allclose(a.y, b.y, atol=tol)
                   for a, b in zip(self.settings, other.settings))


@dataclass(frozen=True)
class FeatureVector:
    probs: np.ndarray
    entangled: bool
    min_pt_eig: float
    purity: float
    degenerate: tuple = ()


def default_catalog(n: int) -> SettingsCatalog:
    """Nested Pauli-eigenstate catalogs for N in 3, 5, 6, 12, 15."""
    if n not in _CATALOG_SIZES:
        raise UnsupportedCatalog(f"no default catalog for N={n}; choose from {SUPPORTED_N}")
    return SettingsCatalog(f"default-{n}", [ProjectionSetting.from_name(s) for s in _CATALOG_SIZES[n]])


def load_catalog(path) -> SettingsCatalog:
    with open(path) as fh:
        return SettingsCatalog.from_json(json.load(fh))


def two_copy_state(rho) -> np.ndarray:
    """rho (x) swap(rho) on the 16-dimensional two-copy space."""
    rho = np.asarray(rho, dtype=complex)
    return kron(rho, swap_subsystems(rho))


def bell_singlet_projector() -> np.ndarray:
    return bell_state("psi-")


def collective_joint(rho, setting: ProjectionSetting) -> tuple[float, float]:
    """(numerator, denominator) of the post-selected singlet probability.

    numerator   = Tr[rho_T (pi_x (x) |psi-><psi-| (x) pi_y)]
    denominator = Tr[rho_T (pi_x (x) 1_4 (x) pi_y)]
    """
    rho_t = two_copy_state(rho)
    px, py = setting.pi_x, setting.pi_y
    num = np.trace(rho_t @ kron(kron(px, bell_singlet_projector()), py)).real
    den = np.trace(rho_t @ kron(kron(px, np.eye(4)), py)).real
    return float(num), float(den)


def collective_probability(rho, setting: ProjectionSetting) -> float:
    num, den = collective_joint(rho, setting)
    if den < DENOMINATOR_FLOOR:
        raise DegenerateDenominator(f"setting {setting.name}: denominator {den:.3e}")
    return num / den


def feature_vector(rho, catalog: SettingsCatalog) -> FeatureVector:
    """Probabilities for every catalog setting; degenerate entries are 0 and flagged."""
    rho = np.asarray(rho, dtype=complex)
    probs = np.zeros(catalog.n)
    flags = []
    for i, s in enumerate(catalog.settings):
        try:
            probs[i] = collective_probability(rho, s)
        except DegenerateDenominator:
            flags.append(i)
    pt = np.linalg.eigvalsh(partial_transpose(rho, "B"))[0]
    return FeatureVector(probs, bool(pt < -1e-12), float(pt), purity(rho), tuple(flags))


def _conditional_b(rhos, ket):
    """Unnormalized state of B after projecting A on ``ket``: <k|_A rho |k>_A."""
    t = rhos.reshape(-1, 2, 2, 2, 2)
    return np.einsum("a,nabcd,c->nbd", ket.conj(), t, ket)


def batch_joint(rhos, catalog: SettingsCatalog) -> tuple[np.ndarray, np.ndarray]:
    """Numerators and denominators for a stack of states, shape ``(n, N)`` each.

    Uses the factorization through conditional B states:
    num = (Tr s_x Tr s_y - Tr[s_x s_y]) / 2, den = Tr s_x Tr s_y.
    """
    rhos = np.asarray(rhos, dtype=complex).reshape(-1, 4, 4)
    cache = {}

    def cond(v):
        key = v.tobytes()
        if key not in cache:
            cache[key] = _conditional_b(rhos, v)
        return cache[key]

    num = np.empty((len(rhos), catalog.n))
    den = np.empty((len(rhos), catalog.n))
    for i, s in enumerate(catalog.settings):
        sx, sy = cond(s.x), cond(s.y)
        tx = np.trace(sx, axis1=1, axis2=2).real
        ty = np.trace(sy, axis1=1, axis2=2).real
        overlap = np.einsum("nij,nji->n", sx, sy).real
        den[:, i] = tx * ty
        num[:, i] = 0.5 * (tx * ty - overlap)
    return num, den


def batch_features(rhos, catalog: SettingsCatalog) -> tuple[np.ndarray, np.ndarray]:
    """Post-selected probabilities ``(n, N)`` and a boolean degeneracy mask."""
    num, den = batch_joint(rhos, catalog)
    degenerate = den < DENOMINATOR_FLOOR
    probs = np.divide(num, den, out=np.zeros_like(num), where=~degenerate)
    return np.clip(probs, 0.0, 1.0), degenerate
