import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoqec.codes import explicit_code
from autoqec.core import basis_ket, ket_to_density, pauli_string
from autoqec.engine import build_correctable_basis, build_engineered_dissipation
from autoqec.lindblad import SimulationConfig
from autoqec.metrology import (
    data_processing_check,
    fit_scaling,
    ideal_qfi,
    qfi_curve,
    qfi_sld,
    scaling_experiment,
)
from autoqec.noise import build_error_structure, local_dephasing

from oracles import random_hermitian

S2 = np.sqrt(2)
SUM_Z3 = sum(pauli_string(s) for s in ("ZII", "IZI", "IIZ"))


def rep_code(n):
    plus = np.ones(2**n) / 2 ** (n / 2)
    minus = pauli_string("Z" * n) @ plus
    return (plus + minus) / S2, (plus - minus) / S2


@pytest.fixture(scope="module")
def rep3():
    h = pauli_string("ZZZ")
    model = local_dephasing(3, 0.1)
    code = explicit_code(*rep_code(3), h)
    scheme = build_engineered_dissipation(build_correctable_basis(code, build_error_structure(model, 1), 1), R=100, kappa=0.1)
    return h, model, code, scheme


def test_ideal_qfi_examples():
    for n in (2, 3, 4):
        h = sum(pauli_string("I" * k + "Z" + "I" * (n - k - 1)) for k in range(n))
        ghz = (basis_ket("0" * n) + basis_ket("1" * n)) / S2
        assert ideal_qfi(h, ket_to_density(ghz), 1.5) == pytest.approx(4 * n**2 * 1.5**2)
    m0, m1 = rep_code(3)
    assert ideal_qfi(pauli_string("ZZZ"), ket_to_density((m0 + m1) / S2), 2.0) == pytest.approx(16.0)
    assert ideal_qfi(SUM_Z3, ket_to_density(basis_ket("010")), 3.0) == pytest.approx(0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.floats(0.1, 3.0), st.integers(0, 2**32 - 1))
def test_pure_state_qfi(d, t, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng)
    psi0 = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi0 /= np.linalg.norm(psi0)
    vals, vecs = np.linalg.eigh(h)
    w = 0.8
    u = vecs @ np.diag(np.exp(-1j * w * t * vals)) @ vecs.conj().T
    psi = u @ psi0
    dpsi = -1j * t * h @ psi
    rho = ket_to_density(psi)
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    ref = ideal_qfi(h, ket_to_density(psi0), t)
    assert abs(qfi_sld(rho, drho) - ref) <= 1e-6 * max(1.0, ref)


def test_qfi_sld_closed_forms():
    rho = np.eye(2) / 2
    eps = 0.3
    assert qfi_sld(rho, eps * pauli_string("Z") / 2) == pytest.approx(eps**2)
    assert qfi_sld(rho, np.zeros((2, 2))) == 0.0


def test_noiseless_curve_matches_ideal(rep3):
    h, model, code, scheme = rep3
    rho0 = ket_to_density(code.plus_probe())
    cfg = SimulationConfig(t_max=3.0, n_samples=15, kappa=0.0)
    curve = qfi_curve(h, rho0, scheme, model, cfg)
    ideal = ideal_qfi(h, rho0, curve.times)
    assert np.all(np.abs(curve.qfi - ideal) <= 1e-3 * np.maximum(1.0, ideal))


def test_eigenstate_probe_gives_zero():
    rho0 = ket_to_density(basis_ket("011"))
    curve = qfi_curve(SUM_Z3, rho0, None, None, SimulationConfig(t_max=2.0, n_samples=10))
    assert np.all(np.abs(curve.qfi) < 1e-6)


def test_dw_sensitivity(rep3):
    h, model, code, scheme = rep3
    rho0 = ket_to_density(code.plus_probe())
    cfg = SimulationConfig(t_max=2.0, n_samples=4)
    a = qfi_curve(h, rho0, scheme, model, cfg, dw=1e-4).qfi[1:]
    b = qfi_curve(h, rho0, scheme, model, cfg, dw=5e-5).qfi[1:]
    assert np.all(np.abs(a - b) <= 1e-3 * np.abs(a))
    with pytest.raises(ValueError):
        qfi_curve(h, rho0, scheme, model, cfg, dw=0.0)


def test_projected_and_dpi(rep3):
    h, model, code, scheme = rep3
    rho0 = ket_to_density(code.plus_probe())
    cfg = SimulationConfig(t_max=2.0, n_samples=10)
    curve = qfi_curve(h, rho0, scheme, model, cfg, projected=True, workers=2)
    ideal = ideal_qfi(h, rho0, curve.times)
    assert np.all(data_processing_check(curve.qfi, curve.qfi_projected, ideal))
    base = qfi_curve(h, rho0, None, model, cfg)
    assert np.all(base.qfi <= ideal + 1e-4 * ideal + 1e-8)
    assert np.all(curve.qfi[1:] > base.qfi[1:])
    assert np.all(curve.qfi_clipped >= 0)


def test_dpi_check_flags_violations():
    ok = data_processing_check([1.0, 2.0], [0.5, 2.5], [2.0, 2.0])
    assert ok.tolist() == [True, False]


def test_fit_scaling():
    ratios, c, flagged = fit_scaling([1, 2, 4], [8.0, 2.0, 0.5])
    assert ratios == [4.0, 4.0] and c == pytest.approx(2.0) and not flagged
    _, c, flagged = fit_scaling([1, 2], [1.0, 0.0])
    assert c is None and flagged
    _, c, flagged = fit_scaling([1, 2], [1e-14, 1e-14], floor=1e-9)
    assert c is None and flagged


def test_scaling_noiseless_is_flagged(rep3):
    h, model, code, scheme = rep3
    rho0 = ket_to_density(code.plus_probe())
    rep = scaling_experiment(h, rho0, scheme, model, [100, 200], 1.0, SimulationConfig(kappa=0.0))
    assert rep.flagged and rep.fitted_c is None
    assert max(abs(e) for e in rep.eps) < 1e-6
    with pytest.raises(ValueError):
        scaling_experiment(h, rho0, scheme, model, [100, 300], 1.0, SimulationConfig())


def test_scaling_three_qubit_first_order(rep3):
    h, model, code, scheme = rep3
    rho0 = ket_to_density(code.plus_probe())
    rep = scaling_experiment(h, rho0, scheme, model, [100, 200, 400], 5.0, SimulationConfig(), workers=2)
    assert not rep.flagged
    assert abs(rep.fitted_c - 1) < 0.3
    assert rep.to_dict()["ratio"] == rep.ratios
