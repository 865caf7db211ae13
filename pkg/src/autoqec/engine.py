"""Correctable-space bases and the engineered dissipation that pumps errors back to the code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodePair
from .noise import ErrorStructure

DROP_TOL = 1e-10
OVERLAP_TOL = 1e-9


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class CorrectableBasis:
    codewords: tuple[np.ndarray, np.ndarray]
    # error_bases[alpha][n - 1] has shape (d, p_n): orthonormal columns mu^[n]_{alpha, i}
    error_bases: tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]
    residual: np.ndarray  # (d, q_max)
    p_n: tuple[int, ...]  # p_0 = 1 first

    @property
    def order(self) -> int:
        return len(self.p_n) - 1

    @property
    def q_max(self) -> int:
        return self.residual.shape[1]

    @property
    def dim(self) -> int:
        return self.codewords[0].shape[0]

    def level(self, alpha: int, n: int) -> np.ndarray:
        if n == 0:
            return self.codewords[alpha][:, None]
        return self.error_bases[alpha][n - 1]

    def code_projector(self) -> np.ndarray:
        return self.order_projector(0)

    def order_projector(self, n: int) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for alpha in (0, 1):
            v = self.level(alpha, n)
            out += v @ v.conj().T
        return out

    def residual_projector(self) -> np.ndarray:
        return self.residual @ self.residual.conj().T

    def all_vectors(self) -> np.ndarray:
        cols = [self.level(a, n) for n in range(self.order + 1) for a in (0, 1)]
        return np.hstack(cols + [self.residual])


def _orthogonalise(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # modified Gram-Schmidt, two passes
    for _ in range(2):
        for u in basis:
            v = v - np.vdot(u, v) * u
    return v


def _codeword_family(mu: np.ndarray, errs: ErrorStructure, c: int) -> list[list[np.ndarray]]:
    accepted = [mu]
    by_level: list[list[np.ndarray]] = [[mu]]
    for n in range(1, c + 1):
        level = []
        for e in errs.levels[n]:
            v = _orthogonalise(e @ mu, accepted)
            norm = np.linalg.norm(v)
            if norm < DROP_TOL:
                continue
            v = v / norm
            accepted.append(v)
            level.append(v)
        by_level.append(level)
    return by_level


def build_correctable_basis(code: CodePair, errs: ErrorStructure, c: int | None = None) -> CorrectableBasis:
    c = errs.order if c is None else c
    if c > errs.order:
        raise ValueError(f"error structure only built to order {errs.order}, asked for {c}")
    fam0 = _codeword_family(code.mu0, errs, c)
    fam1 = _codeword_family(code.mu1, errs, c)
    p0 = [len(lv) for lv in fam0]
    p1 = [len(lv) for lv in fam1]
    if p0 != p1:
        raise BasisError(f"correctable space dimensions differ between codewords: {p0} vs {p1}")
    v0 = np.stack([v for lv in fam0 for v in lv], axis=1)
    v1 = np.stack([v for lv in fam1 for v in lv], axis=1)
    overlap = np.max(np.abs(v0.conj().T @ v1))
    if overlap > OVERLAP_TOL:
        raise BasisError(f"error spaces of the two codewords overlap ({overlap:.3g}); Knill-Laflamme violated")

    d = code.dim
    accepted = [v for lv in fam0 for v in lv] + [v for lv in fam1 for v in lv]
    residual = []
    for k in range(d):
        if len(accepted) == d:
            break
        e = np.zeros(d, dtype=complex)
        e[k] = 1.0
        v = _orthogonalise(e, accepted)
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            continue
        v = v / norm
        accepted.append(v)
        residual.append(v)
    res = np.stack(residual, axis=1) if residual else np.zeros((d, 0), dtype=complex)

    def as_blocks(fam):
        return tuple(
            np.stack(lv, axis=1) if lv else np.zeros((d, 0), dtype=complex) for lv in fam[1:]
        )

    return CorrectableBasis(
        codewords=(fam0[0][0], fam1[0][0]),
        error_bases=(as_blocks(fam0), as_blocks(fam1)),
        residual=res,
        p_n=tuple(p0),
    )


@dataclass(frozen=True)
class AutoQecScheme:
    basis: CorrectableBasis
    correction_ops: tuple[np.ndarray, ...]
    reset_ops: tuple[np.ndarray, ...]
    reset_targets: tuple[np.ndarray, ...]
    R: float
    kappa: float

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def engineered_ops(self) -> tuple[np.ndarray, ...]:
        return self.correction_ops + self.reset_ops

    @property
    def rate(self) -> float:
        return self.R * self.kappa

    def with_rate(self, R: float) -> AutoQecScheme:
        return AutoQecScheme(self.basis, self.correction_ops, self.reset_ops, self.reset_targets, float(R), self.kappa)


def build_engineered_dissipation(
    basis: CorrectableBasis, reset_targets=None, R: float = 1.0, kappa: float = 1.0
) -> AutoQecScheme:
    """Correction operators sum_j |mu_j><mu^[n]_{j,i}| and resets |Phi_q><phi_q|.

    ``reset_targets`` is one ket used for every residual vector, a list with
    one ket per residual vector, or None for (|mu0> + |mu1>)/sqrt(2).
    """
    mu0, mu1 = basis.codewords
    corrections = []
    for n in range(1, basis.order + 1):
        b0, b1 = basis.level(0, n), basis.level(1, n)
        for i in range(b0.shape[1]):
            corrections.append(np.outer(mu0, b0[:, i].conj()) + np.outer(mu1, b1[:, i].conj()))

    q_max = basis.q_max
    if reset_targets is None:
        targets = [(mu0 + mu1) / np.sqrt(2)] * q_max
    else:
        arr = np.asarray(reset_targets, dtype=complex)
        targets = [arr] * q_max if arr.ndim == 1 else list(arr)
        if len(targets) != q_max:
            raise ValueError(f"need {q_max} reset targets, got {len(targets)}")
    pc = basis.code_projector()
    for phi in targets:
        if abs(np.linalg.norm(phi) - 1) > 1e-9:
            raise ValueError("reset targets must be normalized")
        if np.linalg.norm(phi - pc @ phi) > 1e-10:
            raise ValueError("reset target lies outside the code space")
    resets = [np.outer(phi, basis.residual[:, q].conj()) for q, phi in enumerate(targets)]
    return AutoQecScheme(
        basis=basis,
        correction_ops=tuple(corrections),
        reset_ops=tuple(resets),
        reset_targets=tuple(targets),
        R=float(R),
        kappa=float(kappa),
    )


class CPTPProjector:
    """Infinite-time limit of the engineered dissipation, in Kraus form."""

    def __init__(self, scheme: AutoQecScheme):
        self.kraus = (scheme.basis.code_projector(),) + scheme.engineered_ops

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def completeness(self) -> np.ndarray:
        return sum(k.conj().T @ k for k in self.kraus)


def cptp_projector(scheme: AutoQecScheme) -> CPTPProjector:
    return CPTPProjector(scheme)


@dataclass(frozen=True)
class BlockFormReport:
    residual: float
    passed: bool


def verify_hamiltonian_block_form(h: np.ndarray, basis: CorrectableBasis, code: CodePair, tol: float = 1e-9) -> BlockFormReport:
    target = np.zeros_like(h, dtype=complex)
    for alpha, h_alpha in ((0, code.h0), (1, code.h1)):
        for n in range(basis.order + 1):
            v = basis.level(alpha, n)
            target += h_alpha * (v @ v.conj().T)
    pr = basis.residual_projector()
    target += pr @ h @ pr
    residual = float(np.max(np.abs(h - target), initial=0.0))
    return BlockFormReport(residual=residual, passed=residual < tol)
