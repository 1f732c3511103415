"""PPT ground truth, a concurrence oracle and four one-sided entanglement witnesses.

Every witness here is one-sided: ``detected`` means "certainly entangled", and
no separable state is ever flagged.  Boundary states fall on the undetected
side thanks to the small guard bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collective import ProjectionSetting, SettingsCatalog, batch_joint
from .quantum import PAULIS, SIGMA_Y, partial_trace, partial_transpose

__all__ = [
    "WitnessVerdict",
    "WITNESSES",
    "PROJECTION_COUNTS",
    "COLLECTIBILITY_CATALOG",
    "COLLECTIBILITY_WEIGHT",
    "ppt_label",
    "concurrence",
    "collectibility",
    "collectibility_from_joint",
    "fef",
    "chsh",
    "entropic",
    "evaluate_all",
]

PPT_TOL = 1e-12
GUARD = 1e-9

WITNESSES = ("collectibility", "fef", "entropic", "chsh")
# Projection settings each method consumes, for bookkeeping next to the ANN rows.
PROJECTION_COUNTS = {"collectibility": 5, "fef": 12, "entropic": 12, "chsh": 12}

COLLECTIBILITY_CATALOG = SettingsCatalog(
    "collectibility", [ProjectionSetting.from_name(n) for n in ("HH", "VV", "DD", "RR", "HV")]
)
# Weight of the same-basis singlet rates against the orthogonal-basis rate.
# Separable states need a weight >= ~1.2 (pairwise product bound); 9/4 puts the
# Werner onset at p = 2/sqrt(5) ~ 0.894.
COLLECTIBILITY_WEIGHT = 9.0 / 4.0

_MAGIC = np.array(
    [[1, 1j, 0, 0], [0, 0, 1j, 1], [0, 0, 1j, -1], [1, -1j, 0, 0]], dtype=complex
) / np.sqrt(2)
_YY = np.kron(SIGMA_Y, SIGMA_Y)


@dataclass(frozen=True)
class WitnessVerdict:
    witness: str
    value: float
    detected: bool


def ppt_label(rho) -> WitnessVerdict:
    """Peres-Horodecki: value is the smallest eigenvalue of the partial transpose."""
    value = float(np.linalg.eigvalsh(partial_transpose(np.asarray(rho), "B"))[0])
    return WitnessVerdict("ppt", value, value < -PPT_TOL)


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4)."""
    rho = np.asarray(rho, dtype=complex)
    tilde = _YY @ rho.conj() @ _YY
    s = _psd_sqrt(rho)
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(s @ tilde @ s), 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def collectibility_from_joint(joint) -> float:
    """Witness value from the five singlet joint probabilities, keyed by setting name.

    ``W = k (N_HH + N_VV + N_DD + N_RR) - N_HV``.  For a pure state every
    same-basis rate vanishes and ``N_HV = C^2 / 8``, so all pure entangled
    states give ``W < 0``.  For ``rho = sum_i p_i |a_i b_i><a_i b_i|`` the value
    is a sum of ``p_i p_j g(a_i, a_j) (1 - |<b_i|b_j>|^2) / 2`` with ``g >= 0``
    for the chosen weight, so separable states give ``W >= 0``.
    """
    same = joint["HH"] + joint["VV"] + joint["DD"] + joint["RR"]
    return COLLECTIBILITY_WEIGHT * same - joint["HV"]


def collectibility(rho) -> WitnessVerdict:
    num, _ = batch_joint(rho, COLLECTIBILITY_CATALOG)
    value = float(collectibility_from_joint(dict(zip(COLLECTIBILITY_CATALOG.names, num[0]))))
    return WitnessVerdict("collectibility", value, value < -GUARD)


def fef(rho) -> WitnessVerdict:
    """Fully entangled fraction via the largest eigenvalue of Re(rho) in the magic basis."""
    rho = np.asarray(rho, dtype=complex)
    in_magic = _MAGIC.conj().T @ rho @ _MAGIC
    value = float(np.linalg.eigvalsh(in_magic.real)[-1])
    return WitnessVerdict("fef", value, value > 0.5 + GUARD)


def correlation_matrix(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([[np.trace(rho @ np.kron(a, b)).real for b in PAULIS] for a in PAULIS])


def chsh(rho) -> WitnessVerdict:
    """Horodecki M(rho): sum of the two largest eigenvalues of T^T T."""
    t = correlation_matrix(rho)
    ev = np.linalg.eigvalsh(t.T @ t)
    value = float(ev[-1] + ev[-2])
    return WitnessVerdict("chsh", value, value > 1 + GUARD)


def entropic(rho) -> WitnessVerdict:
    """Renyi-2 form: the global state is purer than its purest marginal."""
    rho = np.asarray(rho, dtype=complex)
    pa = partial_trace(rho, "A")
    pb = partial_trace(rho, "B")
    pur = lambda m: float(np.einsum("ij,ji->", m, m).real)  # noqa: E731
    value = pur(rho) - max(pur(pa), pur(pb))
    return WitnessVerdict("entropic", value, value > GUARD)


_FUNCS = {"collectibility": collectibility, "fef": fef, "entropic": entropic, "chsh": chsh,
          "ppt": ppt_label}


def evaluate_all(rhos, names=WITNESSES) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Evaluate witnesses on a stack of states: ``{name: (values, detected)}``."""
    out = {}
    for name in names:
        verdicts = [_FUNCS[name](r) for r in rhos]
        out[name] = (np.array([v.value for v in verdicts]),
                     np.array([v.detected for v in verdicts], dtype=bool))
    return out
