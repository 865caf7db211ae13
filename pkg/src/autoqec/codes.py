"""Metrology code search: A-matrices, LP feasibility and correctability diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import HamiltonianSpectrum, commutator
from .noise import ErrorStructure
from .simplex import solve_lp

log = logging.getLogger(__name__)

KL_TOL = 1e-9
LP_RESIDUAL_TOL = 1e-8
ROW_ZERO_TOL = 1e-12
COND_WARN = 1e12


@dataclass(frozen=True)
class AMatrix:
    entries: np.ndarray  # |K| x (N_i + N_j), complex
    pair: tuple[int, int]
    n_i: int
    n_j: int


@dataclass(frozen=True)
class CodePair:
    """Two-dimensional code. ``pair``/``p_i``/``p_j`` are None for explicit codewords."""

    mu0: np.ndarray
    mu1: np.ndarray
    h0: float
    h1: float
    pair: tuple[int, int] | None = None
    p_i: np.ndarray | None = None
    p_j: np.ndarray | None = None

    @property
    def logical_gap(self) -> float:
        return self.h0 - self.h1

    @property
    def dim(self) -> int:
        return self.mu0.shape[0]

    def logical_hamiltonian(self) -> np.ndarray:
        return self.h0 * np.outer(self.mu0, self.mu0.conj()) + self.h1 * np.outer(self.mu1, self.mu1.conj())

    def plus_probe(self) -> np.ndarray:
        return (self.mu0 + self.mu1) / np.sqrt(2)


@dataclass(frozen=True)
class KLReport:
    satisfied: bool
    sigma: np.ndarray
    max_offdiag: float
    max_diag_gap: float


@dataclass
class PairAttempt:
    pair: tuple[int, int]
    gap: float
    feasible: bool
    ill_conditioned: bool = False


@dataclass
class SearchTrace:
    attempts: list[PairAttempt] = field(default_factory=list)


def build_a_matrix(spectrum: HamiltonianSpectrum, errs: ErrorStructure, i: int, j: int) -> AMatrix:
    if i == j:
        raise ValueError("A-matrix needs two distinct eigenvalue groups")
    gi, gj = spectrum.groups[i], spectrum.groups[j]
    k = np.stack(errs.products)  # (|K|, d, d)
    # <v|K|v> for each column v of each group
    left = np.einsum("al,kab,bl->kl", gi.conj(), k, gi)
    right = np.einsum("al,kab,bl->kl", gj.conj(), k, gj)
    return AMatrix(entries=np.hstack([left, -right]), pair=(i, j), n_i=gi.shape[1], n_j=gj.shape[1])


def _constraint_rows(a: AMatrix) -> np.ndarray:
    rows = np.vstack([a.entries.real, a.entries.imag])
    scale = np.max(np.abs(rows), axis=1)
    rows = rows[scale >= ROW_ZERO_TOL] / scale[scale >= ROW_ZERO_TOL, None]
    if rows.size == 0:
        return rows.reshape(0, a.entries.shape[1])
    _, first = np.unique(np.round(rows, 12) + 0.0, axis=0, return_index=True)
    return rows[np.sort(first)]


def lp_feasible(a: AMatrix, trace: PairAttempt | None = None):
    """Probability vectors ``(p_i, p_j)`` with ``A @ concat(p_i, p_j) == 0``, or None."""
    n = a.n_i + a.n_j
    rows = _constraint_rows(a)
    sums = np.zeros((2, n))
    sums[0, : a.n_i] = 1.0
    sums[1, a.n_i :] = 1.0
    lhs = np.vstack([rows, sums])
    rhs = np.concatenate([np.zeros(rows.shape[0]), [1.0, 1.0]])

    sv = np.linalg.svd(lhs, compute_uv=False)
    nz = sv[sv > 1e-14 * sv[0]]
    cond = nz[0] / nz[-1]
    if cond > COND_WARN:
        log.warning("A-matrix for pair %s ill-conditioned (cond ~ %.2e)", a.pair, cond)
        if trace is not None:
            trace.ill_conditioned = True

    res = solve_lp(lhs, rhs)
    if res.status != "optimal":
        return None
    p = res.x.copy()
    if p.min() < -1e-9:
        return None
    p[p < 0] = 0.0
    resid = a.entries @ p
    if (
        np.max(np.abs(resid.real), initial=0.0) >= LP_RESIDUAL_TOL
        or np.max(np.abs(resid.imag), initial=0.0) >= LP_RESIDUAL_TOL
        or abs(p[: a.n_i].sum() - 1) > 1e-9
        or abs(p[a.n_i :].sum() - 1) > 1e-9
    ):
        log.warning("simplex point for pair %s fails residual check; treating as infeasible", a.pair)
        return None
    return p[: a.n_i], p[a.n_i :]


def code_from_probabilities(spectrum: HamiltonianSpectrum, i: int, j: int, p_i, p_j) -> CodePair:
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    for p in (p_i, p_j):
        if p.min() < 0 or abs(p.sum() - 1) > 1e-9:
            raise ValueError("probability vectors must be nonnegative and sum to 1")
    mu0 = spectrum.groups[i] @ np.sqrt(p_i)
    mu1 = spectrum.groups[j] @ np.sqrt(p_j)
    return CodePair(
        mu0=mu0 / np.linalg.norm(mu0),
        mu1=mu1 / np.linalg.norm(mu1),
        h0=spectrum.eigenvalues[i],
        h1=spectrum.eigenvalues[j],
        pair=(i, j),
        p_i=p_i,
        p_j=p_j,
    )


def explicit_code(mu0, mu1, h: np.ndarray) -> CodePair:
    """Code from given codewords; h0/h1 are the codeword energies <mu|H|mu>."""
    mu0 = np.asarray(mu0, dtype=complex)
    mu1 = np.asarray(mu1, dtype=complex)
    if abs(np.linalg.norm(mu0) - 1) > 1e-9 or abs(np.linalg.norm(mu1) - 1) > 1e-9:
        raise ValueError("codewords must be normalized")
    if abs(np.vdot(mu0, mu1)) > 1e-9:
        raise ValueError("codewords must be orthogonal")
    return CodePair(
        mu0=mu0,
        mu1=mu1,
        h0=float(np.real(np.vdot(mu0, h @ mu0))),
        h1=float(np.real(np.vdot(mu1, h @ mu1))),
    )


def sorted_pairs(eigenvalues) -> list[tuple[int, int]]:
    """Unordered pairs i < j by descending gap, ties by ascending (i, j)."""
    d = len(eigenvalues)
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    return sorted(pairs, key=lambda ij: (-abs(eigenvalues[ij[0]] - eigenvalues[ij[1]]), ij))


def search_code(
    spectrum: HamiltonianSpectrum, errs: ErrorStructure, trace: SearchTrace | None = None
) -> CodePair | None:
    if len(spectrum) < 2:
        raise ValueError("code search needs at least two distinct eigenvalues")
    for i, j in sorted_pairs(spectrum.eigenvalues):
        attempt = PairAttempt(pair=(i, j), gap=abs(spectrum.eigenvalues[i] - spectrum.eigenvalues[j]), feasible=False)
        p = lp_feasible(build_a_matrix(spectrum, errs, i, j), attempt)
        attempt.feasible = p is not None
        if trace is not None:
            trace.attempts.append(attempt)
        if p is not None:
            return code_from_probabilities(spectrum, i, j, *p)
    return None


def check_knill_laflamme(code: CodePair, errs: ErrorStructure, tol: float = KL_TOL) -> KLReport:
    k = np.stack(errs.products)
    kmu0 = k @ code.mu0
    kmu1 = k @ code.mu1
    s00 = kmu0 @ code.mu0.conj()
    s11 = kmu1 @ code.mu1.conj()
    s01 = kmu1 @ code.mu0.conj()  # <mu0|K|mu1>
    s10 = kmu0 @ code.mu1.conj()
    offdiag = float(max(np.max(np.abs(s01)), np.max(np.abs(s10))))
    diag_gap = float(np.max(np.abs(s00 - s11)))
    return KLReport(
        satisfied=offdiag < tol and diag_gap < tol,
        sigma=s00,
        max_offdiag=offdiag,
        max_diag_gap=diag_gap,
    )


def first_order_products(errs: ErrorStructure) -> list[np.ndarray]:
    """K^[~1]: all E_a^dag E_b with E_a, E_b in E^[0] + E^[1]."""
    es = errs.up_to(1)
    return [ea.conj().T @ eb for ea in es for eb in es]


def check_hnls(h: np.ndarray, errs: ErrorStructure, tol: float = 1e-8) -> tuple[bool, np.ndarray]:
    """Whether H has a Hilbert-Schmidt component outside span K^[~1]; returns (ok, H_perp)."""
    ks = first_order_products(errs)
    m = np.stack([k.ravel() for k in ks], axis=1)
    coef, *_ = np.linalg.lstsq(m, h.ravel(), rcond=None)
    h_par = (m @ coef).reshape(h.shape)
    h_perp = h - h_par
    return bool(np.linalg.norm(h_perp) > tol), h_perp


def check_p1_p2(code: CodePair, basis, h: np.ndarray, errs: ErrorStructure, tol: float = 1e-10) -> tuple[bool, bool]:
    """(P1) H commutes with every error in E^[~c]; (P2) H commutes with each order projector."""
    c = basis.order
    p1 = all(np.max(np.abs(commutator(h, e)), initial=0.0) < tol for e in errs.up_to(c))
    p2 = all(np.max(np.abs(commutator(basis.order_projector(n), h)), initial=0.0) < tol for n in range(c + 1))
    return p1, p2


def uniform_code_applies(h: np.ndarray, spectrum: HamiltonianSpectrum, errs: ErrorStructure, tol: float = 1e-10) -> bool:
    """Traceless H with two opposite eigenvalues of equal multiplicity, orthogonal to all of K."""
    if len(spectrum) != 2 or spectrum.multiplicities[0] != spectrum.multiplicities[1]:
        return False
    if abs(np.trace(h)) > tol:
        return False
    return all(abs(np.trace(h @ k)) < tol for k in errs.products)
