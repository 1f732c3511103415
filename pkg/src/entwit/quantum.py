"""Dense density-matrix primitives for one and two qubits.

Basis ordering is |00>, |01>, |10>, |11> with the left ket belonging to qubit A.
A two-qubit matrix reshaped to ``(2, 2, 2, 2)`` is indexed ``[a, b, a', b']``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidState, NotHermitian

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULIS",
    "LOCAL_KETS",
    "kron",
    "hermitian_eigenvalues",
    "partial_transpose",
    "partial_trace",
    "swap_subsystems",
    "purity",
    "ket_to_dm",
    "bell_state",
    "is_hermitian",
    "check_density_matrix",
    "check_projector",
    "min_pt_eigenvalues",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

_S2 = 1 / np.sqrt(2)
LOCAL_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S2, _S2], dtype=complex),
    "A": np.array([_S2, -_S2], dtype=complex),
    "R": np.array([_S2, 1j * _S2], dtype=complex),
    "L": np.array([_S2, -1j * _S2], dtype=complex),
}

SWAP = np.eye(4)[[0, 2, 1, 3]].astype(complex)


def kron(a, b):
    """Kronecker product; the row/column dimensions multiply."""
    return np.kron(np.asarray(a), np.asarray(b))


def is_hermitian(m, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= tol


def hermitian_eigenvalues(m, tol: float = 1e-8, max_sweeps: int = 64) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    The complex matrix ``H = A + iB`` is embedded as the real symmetric
    ``[[A, -B], [B, A]]``, whose spectrum is that of ``H`` with every value
    doubled, so a classical real Jacobi sweep is enough.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise NotHermitian("matrix is not Hermitian within %.1e" % tol)
    n = m.shape[0]
    h = 0.5 * (m + m.conj().T)
    a = np.block([[h.real, -h.imag], [h.imag, h.real]])
    size = 2 * n
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= 1e-16 * scale:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    ev = np.sort(np.diag(a))
    # Each eigenvalue of H appears twice in the embedding.
    return 0.5 * (ev[0::2] + ev[1::2])


def _as_two_qubit(rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 two-qubit matrix, got shape {rho.shape}")
    return rho


def partial_transpose(rho, subsystem: str = "B") -> np.ndarray:
    """Transpose the indices of qubit ``subsystem`` ('A' or 'B'); works on stacks."""
    rho = _as_two_qubit(rho)
    lead = rho.shape[:-2]
    t = rho.reshape(lead + (2, 2, 2, 2))
    k = len(lead)
    axes = list(range(k + 4))
    if subsystem == "A":
        axes[k], axes[k + 2] = axes[k + 2], axes[k]
    elif subsystem == "B":
        axes[k + 1], axes[k + 3] = axes[k + 3], axes[k + 1]
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.transpose(axes).reshape(lead + (4, 4))


def partial_trace(rho, keep: str = "A") -> np.ndarray:
    rho = _as_two_qubit(rho)
    t = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    if keep == "A":
        return np.einsum("...abcb->...ac", t)
    if keep == "B":
        return np.einsum("...abad->...bd", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def swap_subsystems(rho) -> np.ndarray:
    """Exchange the two qubits: S rho S with S the SWAP gate."""
    rho = _as_two_qubit(rho)
    t = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    k = t.ndim - 4
    axes = list(range(k)) + [k + 1, k, k + 3, k + 2]
    return t.transpose(axes).reshape(rho.shape)


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def bell_state(name: str = "psi-") -> np.ndarray:
    """Density matrix of one of the four Bell states."""
    vecs = {
        "phi+": [1, 0, 0, 1],
        "phi-": [1, 0, 0, -1],
        "psi+": [0, 1, 1, 0],
        "psi-": [0, 1, -1, 0],
    }
    return ket_to_dm(np.array(vecs[name], dtype=complex))


def check_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    """Raise InvalidState unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4, 16):
        raise DimensionMismatch(f"density matrix must be 2x2, 4x4 or 16x16, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise InvalidState("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvalidState(f"trace {tr.real:.12g} differs from 1")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def check_projector(p, tol: float = 1e-10) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.shape != (2, 2):
        raise DimensionMismatch(f"single-qubit projector must be 2x2, got {p.shape}")
    if not is_hermitian(p, tol) or np.max(np.abs(p @ p - p)) > tol or abs(np.trace(p) - 1) > tol:
        raise InvalidState("not a rank-1 projector")
    return p


def min_pt_eigenvalues(rhos) -> np.ndarray:
    """Smallest partial-transpose eigenvalue for a stack of two-qubit states (LAPACK)."""
    rhos = np.asarray(rhos)
    pt = partial_transpose(rhos, "B")
    return np.linalg.eigvalsh(pt)[..., 0]
