"""Dense linear algebra primitives: Pauli strings, spectra, PSD square roots."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-10
MAX_QUBITS = 12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SpectrumError(ValueError):
    pass


def pauli_string(labels) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, first label = most significant qubit.

    ``labels`` may be a string such as ``"IZX"`` or a sequence of one-letter labels.
    """
    labels = [str(s).upper() for s in labels]
    if not labels:
        raise ValueError("pauli_string needs at least one qubit")
    if len(labels) > MAX_QUBITS:
        raise ValueError(f"at most {MAX_QUBITS} qubits supported, got {len(labels)}")
    try:
        mats = [_PAULI[s] for s in labels]
    except KeyError as exc:
        raise ValueError(f"unknown Pauli label {exc.args[0]!r}") from None
    return reduce(np.kron, mats)


def single_qubit_op(label: str, site: int, n_qubits: int) -> np.ndarray:
    """Pauli ``label`` acting on qubit ``site`` (0-based) of an n-qubit register."""
    labels = ["I"] * n_qubits
    labels[site] = label
    return pauli_string(labels)


def basis_ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string like ``"010"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) < tol


def hermitian_eigendecomposition(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (as columns)."""
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a):
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


@dataclass(frozen=True)
class HamiltonianSpectrum:
    """Distinct eigenvalues (descending) with an orthonormal basis for each eigenspace."""

    eigenvalues: tuple[float, ...]
    groups: tuple[np.ndarray, ...]  # each of shape (dim, N_i), columns are kets
    dim: int

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(g.shape[1] for g in self.groups)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for h, g in zip(self.eigenvalues, self.groups):
            out += h * (g @ g.conj().T)
        return out


def _canonical_eigenbasis(vecs: np.ndarray) -> np.ndarray:
    # Degenerate eigenspaces from eigh carry an arbitrary unitary mixing. When the
    # eigenspace is spanned by computational basis states (all preset Hamiltonians are
    # diagonal), return exactly those states in lexicographic order.
    proj = vecs @ vecs.conj().T
    diag = np.real(np.diag(proj))
    support = np.flatnonzero(diag > 1e-9)
    if len(support) == vecs.shape[1] and np.allclose(diag[support], 1.0, atol=1e-9):
        out = np.zeros_like(vecs)
        out[support, np.arange(len(support))] = 1.0
        return out
    # Otherwise orthonormalise the projector's columns in basis order (QR with the
    # deterministic column ordering), which is reproducible given the subspace.
    q, r = np.linalg.qr(proj[:, support])
    keep = np.abs(np.diag(r)) > 1e-8
    q = q[:, keep][:, : vecs.shape[1]]
    phases = q[np.argmax(np.abs(q) > 1e-12, axis=0), np.arange(q.shape[1])]
    return q * (np.abs(phases) / phases)


def group_spectrum(h: np.ndarray, tol: float = 1e-9) -> HamiltonianSpectrum:
    """Cluster the spectrum of Hermitian ``h`` into distinct eigenvalues.

    Two eigenvalues share a group iff ``|a - b| <= tol * max(1, |a|)``. A value
    that would chain two groups whose representatives are further apart than
    the tolerance is rejected as ambiguous.
    """
    vals, vecs = hermitian_eigendecomposition(h)
    clusters: list[list[int]] = []
    for k, v in enumerate(vals):
        if clusters:
            rep = vals[clusters[-1][0]]
            if abs(v - vals[clusters[-1][-1]]) <= tol * max(1.0, abs(v)):
                if abs(v - rep) > tol * max(1.0, abs(rep)):
                    raise SpectrumError(
                        f"ambiguous eigenvalue clustering near {v:.6g}: joins a group "
                        f"represented by {rep:.6g} beyond tolerance {tol:g}"
                    )
                clusters[-1].append(k)
                continue
        clusters.append([k])
    eigenvalues = tuple(float(np.mean(vals[c])) for c in clusters)
    groups = tuple(_canonical_eigenbasis(vecs[:, c]) for c in clusters)
    return HamiltonianSpectrum(eigenvalues=eigenvalues, groups=groups, dim=h.shape[0])


def matrix_sqrt_psd(c: np.ndarray, neg_tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root D of a real symmetric matrix, so that D.T @ D == C."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("correlation matrix must be square")
    if np.max(np.abs(c - c.T), initial=0.0) > 1e-12:
        raise ValueError("correlation matrix not symmetric")
    vals, vecs = np.linalg.eigh((c + c.T) / 2)
    if vals.size and vals.min() < -neg_tol:
        raise ValueError(f"correlation matrix not PSD (min eigenvalue {vals.min():.3g})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def ket_to_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
