"""Natural dissipation models and the recursive error sets built from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import commutator, matrix_sqrt_psd, single_qubit_op

DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Lindblad operators sharing rate ``kappa``.

    ``correlation`` and ``factor`` are kept when the operators came from a
    correlated-dephasing matrix, ``L_i = sum_j D_ij Z_j`` with ``D.T @ D = C``.
    """

    lindblad_ops: tuple[np.ndarray, ...]
    kappa: float
    dim: int
    correlation: np.ndarray | None = None
    factor: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        for op in self.lindblad_ops:
            if op.shape != (self.dim, self.dim):
                raise ValueError(f"Lindblad operator shape {op.shape} != ({self.dim}, {self.dim})")

    @property
    def from_correlation(self) -> bool:
        return self.correlation is not None


def correlated_dephasing(
    c,
    kappa: float,
    factor=None,
    n_ancilla: int = 0,
) -> NoiseModel:
    """Correlated Z noise with correlation matrix ``c``.

    By default the symmetric square root of ``c`` is used. A specific
    factorisation may be passed as ``factor``; it must satisfy ``D.T @ D == C``.
    Ancilla qubits are appended after the noisy qubits and left untouched.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = c.shape[0]
    if factor is None:
        d = matrix_sqrt_psd(c)
    else:
        d = np.asarray(factor, dtype=float)
        if d.shape[1] != n:
            raise ValueError(f"factor must have {n} columns, got shape {d.shape}")
        if np.max(np.abs(d.T @ d - c)) > 1e-9:
            raise ValueError("factor does not satisfy D.T @ D == C")
    n_total = n + n_ancilla
    zs = [single_qubit_op("Z", j, n_total) for j in range(n)]
    ops = []
    for row in d:
        if np.max(np.abs(row), initial=0.0) < 1e-14:
            continue
        ops.append(sum(coef * z for coef, z in zip(row, zs)))
    return NoiseModel(
        lindblad_ops=tuple(ops),
        kappa=float(kappa),
        dim=2**n_total,
        correlation=c,
        factor=d,
        label="correlated-dephasing",
    )


def local_pauli_noise(
    label: str, n_qubits: int, kappa: float, n_ancilla: int = 0, sites=None
) -> NoiseModel:
    """Independent single-qubit Pauli ``label`` noise on each system qubit."""
    n_total = n_qubits + n_ancilla
    sites = range(n_qubits) if sites is None else sites
    ops = tuple(single_qubit_op(label, s, n_total) for s in sites)
    return NoiseModel(lindblad_ops=ops, kappa=float(kappa), dim=2**n_total, label=f"local-{label}")


def local_dephasing(n_qubits: int, kappa: float, n_ancilla: int = 0) -> NoiseModel:
    return local_pauli_noise("Z", n_qubits, kappa, n_ancilla)


def local_bitflip(n_qubits: int, kappa: float, n_ancilla: int = 0) -> NoiseModel:
    return local_pauli_noise("X", n_qubits, kappa, n_ancilla)


@dataclass(frozen=True)
class ErrorStructure:
    """Error sets E^[0..c], the no-jump operator B and the product set K.

    ``products[k] == levels_flat[a].conj().T @ levels_flat[b]`` with
    ``(a, b) = provenance[k]``, where ``levels_flat`` is E^[~c] in level order.
    """

    levels: tuple[tuple[np.ndarray, ...], ...]
    no_jump: np.ndarray
    products: tuple[np.ndarray, ...]
    provenance: tuple[tuple[int, int], ...]
    n_products_raw: int = field(default=0)

    @property
    def order(self) -> int:
        return len(self.levels) - 1

    @property
    def flat(self) -> list[np.ndarray]:
        return [e for level in self.levels for e in level]

    def up_to(self, order: int) -> list[np.ndarray]:
        return [e for level in self.levels[: order + 1] for e in level]


def _phase_normalised(op: np.ndarray) -> np.ndarray:
    flat = op.ravel()
    nz = np.flatnonzero(np.abs(flat) > DEDUP_TOL)
    if nz.size == 0:
        return op
    ph = flat[nz[0]] / abs(flat[nz[0]])
    return op / ph


def dedup_operators(ops, tol: float = DEDUP_TOL) -> list[int]:
    """Indices of the first occurrence of each operator, equality up to global phase."""
    keep: list[int] = []
    seen: dict[bytes, list[int]] = {}
    normed = [_phase_normalised(o) for o in ops]
    for k, o in enumerate(normed):
        # Bucket on a coarse rounding so comparisons stay near-linear.
        key = (np.round(o, 6) + 0.0).tobytes()  # + 0.0 folds -0.0 into 0.0
        bucket = seen.setdefault(key, [])
        if any(np.max(np.abs(o - normed[j])) < tol for j in bucket):
            continue
        bucket.append(k)
        keep.append(k)
    return keep


def build_error_structure(model: NoiseModel, c: int) -> ErrorStructure:
    if c < 1:
        raise ValueError("AutoQEC order c must be >= 1")
    ls = list(model.lindblad_ops)
    eye = np.eye(model.dim, dtype=complex)
    b = sum((l.conj().T @ l for l in ls), np.zeros_like(eye))
    levels: list[list[np.ndarray]] = [[eye]]
    for n in range(1, c + 1):
        level = [l @ e for e in levels[n - 1] for l in ls]
        if n >= 2 and ls:
            level += [b @ e for e in levels[n - 2]]
        levels.append(level)
    flat = [e for level in levels for e in level]
    raw, pairs = [], []
    for a, ea in enumerate(flat):
        ead = ea.conj().T
        for bi, eb in enumerate(flat):
            raw.append(ead @ eb)
            pairs.append((a, bi))
    keep = dedup_operators(raw)
    return ErrorStructure(
        levels=tuple(tuple(lv) for lv in levels),
        no_jump=b,
        products=tuple(raw[k] for k in keep),
        provenance=tuple(pairs[k] for k in keep),
        n_products_raw=len(raw),
    )


def commutes_with_hamiltonian(model: NoiseModel, h: np.ndarray, tol: float = 1e-10) -> list[bool]:
    if h.shape != (model.dim, model.dim):
        raise ValueError(f"Hamiltonian shape {h.shape} does not match noise dimension {model.dim}")
    return [bool(np.max(np.abs(commutator(h, l)), initial=0.0) < tol) for l in model.lindblad_ops]
