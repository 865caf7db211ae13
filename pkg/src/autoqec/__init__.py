"""Autonomous quantum error correction for noisy quantum metrology."""

from .codes import CodePair, build_a_matrix, check_hnls, check_knill_laflamme, check_p1_p2, explicit_code, search_code
from .core import group_spectrum, hermitian_eigendecomposition, pauli_string
from .engine import build_correctable_basis, build_engineered_dissipation, cptp_projector
from .lindblad import SimulationConfig, integrate
from .metrology import ideal_qfi, qfi_curve, qfi_sld, scaling_experiment
from .noise import NoiseModel, build_error_structure, correlated_dephasing, local_pauli_noise
from .scenarios import Scenario, load_config, preset, preset_names, run

__all__ = [
    "CodePair",
    "NoiseModel",
    "Scenario",
    "SimulationConfig",
    "build_a_matrix",
    "build_correctable_basis",
    "build_engineered_dissipation",
    "build_error_structure",
    "check_hnls",
    "check_knill_laflamme",
    "check_p1_p2",
    "correlated_dephasing",
    "cptp_projector",
    "explicit_code",
    "group_spectrum",
    "hermitian_eigendecomposition",
    "ideal_qfi",
    "integrate",
    "load_config",
    "local_pauli_noise",
    "pauli_string",
    "preset",
    "preset_names",
    "qfi_curve",
    "qfi_sld",
    "run",
    "scaling_experiment",
    "search_code",
]
