"""Scenario definitions, presets for the published experiments, and the run pipeline."""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np

from .codes import (
    SearchTrace,
    check_hnls,
    check_knill_laflamme,
    check_p1_p2,
    explicit_code,
    search_code,
)
from .core import group_spectrum, ket_to_density, pauli_string
from .engine import BasisError, build_correctable_basis, build_engineered_dissipation, verify_hamiltonian_block_form
from .lindblad import SimulationConfig
from .metrology import data_processing_check, default_dw, ideal_qfi, qfi_curve, scaling_experiment
from .noise import NoiseModel, build_error_structure, commutes_with_hamiltonian, correlated_dephasing, local_pauli_noise

log = logging.getLogger(__name__)

SCHEMA_VERSION = "autoqec-report/1"


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    n_qubits: int
    hamiltonian: str | list
    noise: dict
    ancilla_qubits: int = 0
    code: str | list = "search"
    order: int | list = 1
    w: float = 1.0
    kappa: float = 0.1
    R: float | list = 100.0
    T: float = 5.0
    probe: str | list = "code-plus"
    reset_target: list | None = None
    n_samples: int = 50
    dt: float | None = None
    dw: float | None = None
    scaling: dict | None = None
    notes: str = ""

    @property
    def orders(self) -> list[int]:
        return [int(c) for c in np.atleast_1d(self.order)]

    @property
    def R_values(self) -> list[float]:
        return [float(r) for r in np.atleast_1d(self.R)]

    @property
    def total_qubits(self) -> int:
        return self.n_qubits + self.ancilla_qubits

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))


# ---------------------------------------------------------------- builders

_SINGLE = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / math.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / math.sqrt(2),
}


def _coef(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(x[0], x[1])
    return complex(x)


def _pad(label: str, sc: Scenario) -> str:
    if len(label) == sc.total_qubits:
        return label
    if len(label) == sc.n_qubits:
        return label + "I" * sc.ancilla_qubits
    raise ConfigError(f"Pauli string {label!r} has {len(label)} sites; expected {sc.n_qubits} or {sc.total_qubits}")


def pauli_polynomial(terms, sc: Scenario) -> np.ndarray:
    return sum(_coef(c) * pauli_string(_pad(s, sc)) for c, s in terms)


def build_hamiltonian(sc: Scenario) -> np.ndarray:
    spec = sc.hamiltonian
    n, na = sc.n_qubits, sc.ancilla_qubits
    if spec == "sum-z":
        terms = [[1.0, "I" * k + "Z" + "I" * (n - k - 1)] for k in range(n)]
    elif spec == "product-z":
        terms = [[1.0, "Z" * n]]
    elif isinstance(spec, list):
        terms = spec
    else:
        raise ConfigError(f"hamiltonian: unknown spec {spec!r}")
    h = pauli_polynomial(terms, sc)
    if na and h.shape[0] != 2 ** (n + na):
        raise ConfigError("hamiltonian: dimension mismatch with ancilla")
    return h


def build_noise(sc: Scenario, kappa: float | None = None) -> NoiseModel:
    kappa = sc.kappa if kappa is None else kappa
    spec = sc.noise
    kind = spec.get("type")
    if kind == "correlation":
        c = np.asarray(spec["matrix"], dtype=float).reshape(sc.n_qubits, sc.n_qubits)
        factor = spec.get("factor")
        if factor is not None:
            factor = np.asarray(factor, dtype=float).reshape(-1, sc.n_qubits)
        return correlated_dephasing(c, kappa, factor=factor, n_ancilla=sc.ancilla_qubits)
    if kind in ("local-dephasing", "local-bitflip"):
        label = "Z" if kind == "local-dephasing" else "X"
        return local_pauli_noise(label, sc.n_qubits, kappa, sc.ancilla_qubits, sites=spec.get("sites"))
    if kind == "lindblad":
        ops = tuple(pauli_polynomial(terms, sc) for terms in spec["ops"])
        return NoiseModel(lindblad_ops=ops, kappa=kappa, dim=2**sc.total_qubits, label="lindblad")
    raise ConfigError(f"noise.type: unknown noise type {kind!r}")


def product_ket(label: str) -> np.ndarray:
    return reduce(np.kron, [_SINGLE[ch] for ch in label])


def ket_from_terms(terms, sc: Scenario) -> np.ndarray:
    psi = 0
    for c, label in terms:
        if len(label) == sc.n_qubits and sc.ancilla_qubits:
            raise ConfigError(f"ket label {label!r} must include ancilla qubits")
        psi = psi + _coef(c) * product_ket(label)
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


# ---------------------------------------------------------------- presets

_C_FIG2 = [[1.6, -0.4, -0.4], [-0.4, 0.7, -0.5], [-0.4, -0.5, 0.7]]
_D_FIG2 = [
    [2 / math.sqrt(5), -1 / math.sqrt(5), 0.0],
    [0.0, 1 / math.sqrt(2), -1 / math.sqrt(2)],
    [2 / math.sqrt(5), 0.0, -1 / math.sqrt(5)],
]
_C_S4A = [[8, 6, 4], [6, 6, 6], [4, 6, 8]]
_D_S4A = [[2, 1, 0], [0, 1, 2], [2, 2, 2]]


def _repetition_x(n: int) -> list:
    return [[[1, "+" * n], [1, "-" * n]], [[1, "+" * n], [-1, "-" * n]]]


_T_NOTE = "figure time axes are not numeric in the source; horizon T defaults to 5"

_PRESETS = {
    "fig2-correlated-dephasing": dict(
        n_qubits=3,
        hamiltonian="sum-z",
        noise={"type": "correlation", "matrix": _C_FIG2, "factor": _D_FIG2},
        code=[
            [[2, "100"], [math.sqrt(3), "010"], [math.sqrt(3), "001"]],
            [[2, "011"], [math.sqrt(3), "101"], [math.sqrt(3), "110"]],
        ],
        order=1,
        R=[100.0, 200.0, 400.0],
        scaling={"R": [100.0, 200.0, 400.0], "order": 1},
        notes=_T_NOTE,
    ),
    "fig3-repetition": dict(
        n_qubits=5,
        hamiltonian="product-z",
        noise={"type": "local-dephasing"},
        code=_repetition_x(5),
        order=[1, 2],
        R=100.0,
        scaling={"R": [50.0, 100.0, 200.0], "order": 2},
        notes=_T_NOTE,
    ),
    "sm-s3b-p1-violated": dict(
        n_qubits=3,
        hamiltonian="product-z",
        noise={"type": "local-bitflip"},
        code=[[[1, "000"]], [[1, "111"]]],
        order=1,
        R=[100.0, 200.0, 400.0],
        notes=_T_NOTE,
    ),
    "sm-s3b-p2-violated": dict(
        n_qubits=3,
        hamiltonian=[[0.5, "ZZZ"], [0.5, "ZII"], [0.5, "IZI"], [0.5, "IIZ"]],
        noise={"type": "local-dephasing"},
        code=_repetition_x(3),
        order=1,
        R=[100.0, 200.0, 400.0],
        notes=_T_NOTE,
    ),
    "sm-s3a-hnls-ok": dict(
        n_qubits=1,
        ancilla_qubits=1,
        hamiltonian=[[1.0, "Z"]],
        noise={"type": "local-bitflip"},
        code=[[[1, "00"]], [[1, "11"]]],
        order=1,
        R=1e4,
        T=2.0,
        notes="R = 1e4 forces dt ~ 2e-5; horizon capped at T = 2",
    ),
    "sm-s3a-hnls-violated": dict(
        n_qubits=1,
        ancilla_qubits=1,
        hamiltonian=[[1.0, "Z"]],
        noise={"type": "local-dephasing"},
        code=[[[1, "++"]], [[1, "--"]]],
        order=1,
        R=1e4,
        T=2.0,
        notes="R = 1e4 forces dt ~ 2e-5; horizon capped at T = 2",
    ),
    "sm-s4a-infeasible": dict(
        n_qubits=3,
        hamiltonian="sum-z",
        noise={"type": "correlation", "matrix": _C_S4A, "factor": _D_S4A},
        code="search",
        order=1,
        R=100.0,
        notes="code search is expected to fail for this correlation matrix",
    ),
    "sm-s3b-sufficient": dict(
        n_qubits=3,
        hamiltonian="product-z",
        noise={"type": "local-dephasing"},
        code=_repetition_x(3),
        order=1,
        R=[100.0, 200.0, 400.0],
        notes=_T_NOTE,
    ),
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset(name: str) -> Scenario:
    try:
        fields = copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(_PRESETS)}") from None
    return Scenario(name=name, **fields)


# ---------------------------------------------------------------- config files

_REQUIRED = ("name", "n_qubits", "hamiltonian", "noise")


def _err(field_name, msg):
    return ConfigError(f"{field_name}: {msg}")


def scenario_from_dict(data: dict) -> Scenario:
    data = copy.deepcopy(data)
    if "c" in data:
        data["order"] = data.pop("c")
    if "preset" in data:
        base = preset(data.pop("preset")).to_dict()
        base.update(data)
        data = base
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise _err(missing[0], "required field missing")
    known = set(Scenario.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise _err(unknown[0], "unknown field")

    n = data["n_qubits"]
    if not isinstance(n, int) or not 1 <= n <= 12:
        raise _err("n_qubits", "must be an integer in 1..12")
    na = data.get("ancilla_qubits", 0)
    if not isinstance(na, int) or na < 0 or n + na > 12:
        raise _err("ancilla_qubits", "must be a non-negative integer with n_qubits + ancilla_qubits <= 12")

    noise = data["noise"]
    if isinstance(noise, str):
        noise = {"type": noise}
        data["noise"] = noise
    if not isinstance(noise, dict) or "type" not in noise:
        raise _err("noise", "must be an object with a 'type'")
    if noise["type"] == "correlation":
        flat = np.asarray(noise.get("matrix", []), dtype=float).ravel()
        if flat.size != n * n:
            raise _err("noise.matrix", f"expected {n * n} row-major entries ({n}x{n}), got {flat.size}")
        if "factor" in noise and noise["factor"] is not None:
            fl = np.asarray(noise["factor"], dtype=float).ravel()
            if fl.size % n:
                raise _err("noise.factor", f"entry count {fl.size} is not a multiple of {n}")
    elif noise["type"] not in ("local-dephasing", "local-bitflip", "lindblad"):
        raise _err("noise.type", f"unknown noise type {noise['type']!r}")

    h = data["hamiltonian"]
    if not (h in ("sum-z", "product-z") or isinstance(h, list)):
        raise _err("hamiltonian", "must be 'sum-z', 'product-z' or a list of [coef, pauli-string]")

    for key in ("w", "kappa", "T"):
        if key in data and not isinstance(data[key], (int, float)):
            raise _err(key, "must be a number")
    if data.get("kappa", 0.1) < 0:
        raise _err("kappa", "must be non-negative")
    if data.get("T", 5.0) < 0:
        raise _err("T", "must be non-negative")
    for r in np.atleast_1d(data.get("R", 100.0)):
        if not isinstance(r, (int, float, np.floating, np.integer)) or r < 0:
            raise _err("R", "must be a non-negative number or list of them")
    for c in np.atleast_1d(data.get("order", 1)):
        if int(c) != c or c < 1:
            raise _err("order", "AutoQEC order must be a positive integer")
    code = data.get("code", "search")
    if code != "search" and not (isinstance(code, list) and len(code) == 2):
        raise _err("code", "must be 'search' or a list of two codewords")

    sc = Scenario(**data)
    if isinstance(code, list):
        try:
            mu0 = ket_from_terms(code[0], sc)
            mu1 = ket_from_terms(code[1], sc)
        except (KeyError, ValueError) as exc:
            raise _err("code", f"bad codeword: {exc}") from None
        if mu0.shape[0] != 2**sc.total_qubits:
            raise _err("code", "codeword dimension does not match qubit count")
        if abs(np.vdot(mu0, mu1)) > 1e-9:
            raise _err("code", "codewords must be orthogonal")
    return sc


def load_config(path) -> Scenario:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    return scenario_from_dict(data)


def save_config(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(sc.to_dict(), indent=2, sort_keys=True))


# ---------------------------------------------------------------- pipeline


@dataclass
class RunReport:
    scenario: dict
    search: dict
    diagnostics: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    scaling: dict | None = None
    search_failed: bool = False
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        curves = {
            k: {key: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for key, v in c.items()}
            for k, c in self.curves.items()
        }
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "search": self.search,
            "search_failed": self.search_failed,
            "diagnostics": self.diagnostics,
            "bases": self.bases,
            "curves": curves,
            "scaling": self.scaling,
            "wall_time": self.wall_time,
        }


@dataclass
class Pipeline:
    """Everything built for a scenario before any time evolution."""

    scenario: Scenario
    h: np.ndarray
    model: NoiseModel
    errs: dict
    spectrum: object
    code: object
    trace: SearchTrace
    searched: object

    def basis(self, c: int):
        return build_correctable_basis(self.code, self.errs[c], c)

    def scheme(self, c: int, R: float):
        reset = None
        if self.scenario.reset_target is not None:
            reset = ket_from_terms(self.scenario.reset_target, self.scenario)
        return build_engineered_dissipation(self.basis(c), reset, R=R, kappa=self.scenario.kappa)

    def probe(self) -> np.ndarray:
        if self.scenario.probe == "code-plus":
            return ket_to_density(self.code.plus_probe())
        return ket_to_density(ket_from_terms(self.scenario.probe, self.scenario))

    def sim_config(self, **kw) -> SimulationConfig:
        sc = self.scenario
        base = dict(w=sc.w, t_max=sc.T, kappa=sc.kappa, dt=sc.dt, n_samples=sc.n_samples)
        base.update(kw)
        return SimulationConfig(**base)


def prepare(sc: Scenario) -> Pipeline:
    h = build_hamiltonian(sc)
    model = build_noise(sc)
    errs = {c: build_error_structure(model, c) for c in sorted(set(sc.orders))}
    spectrum = group_spectrum(h)
    trace = SearchTrace()
    searched = None
    if len(spectrum) >= 2:
        searched = search_code(spectrum, errs[max(errs)], trace)
    if sc.code == "search":
        code = searched
    else:
        code = explicit_code(ket_from_terms(sc.code[0], sc), ket_from_terms(sc.code[1], sc), h)
    return Pipeline(sc, h, model, errs, spectrum, code, trace, searched)


def diagnostics(p: Pipeline) -> tuple[dict, dict]:
    errs_max = p.errs[max(p.errs)]
    hnls_ok, h_perp = check_hnls(p.h, errs_max)
    diag = {
        "t1_commutes": all(commutes_with_hamiltonian(p.model, p.h)),
        "hnls": hnls_ok,
        "hnls_perp_norm": float(np.linalg.norm(h_perp)),
        "per_order": {},
    }
    bases = {}
    if p.code is None:
        return diag, bases
    for c, errs in p.errs.items():
        kl = check_knill_laflamme(p.code, errs)
        entry = {"kl": kl.satisfied, "kl_max_offdiag": kl.max_offdiag, "kl_max_diag_gap": kl.max_diag_gap}
        try:
            basis = p.basis(c)
        except BasisError as exc:
            entry["basis_error"] = str(exc)
        else:
            p1, p2 = check_p1_p2(p.code, basis, p.h, errs)
            block = verify_hamiltonian_block_form(p.h, basis, p.code)
            entry.update(p1=p1, p2=p2, block_form=block.passed, block_residual=block.residual)
            bases[str(c)] = {"p_n": list(basis.p_n), "q_max": basis.q_max}
        diag["per_order"][str(c)] = entry
    return diag, bases


def _search_summary(p: Pipeline) -> dict:
    out = {
        "eigenvalues": list(p.spectrum.eigenvalues),
        "multiplicities": list(p.spectrum.multiplicities),
        "feasible_pair_found": p.searched is not None,
        "attempts": [
            {"pair": list(a.pair), "gap": a.gap, "feasible": a.feasible, "ill_conditioned": a.ill_conditioned}
            for a in p.trace.attempts
        ],
    }
    if p.searched is not None:
        out.update(
            pair=list(p.searched.pair),
            gap=abs(p.searched.logical_gap),
            p_i=p.searched.p_i.tolist(),
            p_j=p.searched.p_j.tolist(),
        )
    return out


def run_curves(p: Pipeline, dw: float | None = None, workers: int = 1, with_baseline: bool = True) -> dict:
    sc = p.scenario
    rho0 = p.probe()
    cfg = p.sim_config()
    curves = {}
    baseline = None
    if with_baseline:
        base = qfi_curve(p.h, rho0, None, p.model, cfg, dw=dw, label="noqec", workers=workers)
        baseline = base.qfi
    for c in sc.orders:
        for R in sc.R_values:
            scheme = p.scheme(c, R)
            cur = qfi_curve(p.h, rho0, scheme, p.model, cfg.with_(R=R), dw=dw, projected=True, workers=workers)
            ideal = ideal_qfi(p.h, rho0, cur.times)
            curves[f"c{c}_R{R:g}"] = {
                "c": c,
                "R": R,
                "t": cur.times,
                "qfi": cur.qfi,
                "qfi_projected": cur.qfi_projected,
                "qfi_ideal": ideal,
                "qfi_noqec": baseline,
                "dpi_ok": bool(np.all(data_processing_check(cur.qfi, cur.qfi_projected, ideal))),
            }
    return curves


def _fmt(x) -> str:
    return "" if x is None else f"{float(x):.12g}"


CURVE_COLUMNS = ("t", "qfi", "qfi_projected", "qfi_ideal", "qfi_noqec")


def write_curve_csv(curve: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for k in range(len(curve["t"])):
            w.writerow([_fmt(None if curve.get(col) is None else curve[col][k]) for col in CURVE_COLUMNS])


def write_curves_csv(curves: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("label",) + CURVE_COLUMNS)
        for label, curve in curves.items():
            for k in range(len(curve["t"])):
                w.writerow([label] + [_fmt(None if curve.get(col) is None else curve[col][k]) for col in CURVE_COLUMNS])


def run(
    sc: Scenario,
    out_dir=None,
    dw: float | None = None,
    simulate: bool = True,
    scaling: bool = True,
    workers: int = 1,
) -> RunReport:
    start = time.perf_counter()
    p = prepare(sc)
    report = RunReport(scenario=sc.to_dict(), search=_search_summary(p))
    report.diagnostics, report.bases = diagnostics(p)
    report.search_failed = sc.code == "search" and p.code is None
    if p.code is None:
        log.info("code search failed for %s; stopping after diagnostics", sc.name)
        simulate = scaling = False
    if simulate:
        report.curves = run_curves(p, dw=dw, workers=workers)
    if scaling and sc.scaling:
        c = int(sc.scaling.get("order", sc.orders[-1]))
        r_list = sc.scaling["R"]
        T = float(sc.scaling.get("T", sc.T))
        scheme = p.scheme(c, r_list[0])
        rep = scaling_experiment(p.h, p.probe(), scheme, p.model, r_list, T, p.sim_config(), dw=dw, workers=workers)
        report.scaling = {"order": c, **rep.to_dict()}
    report.wall_time = time.perf_counter() - start
    if out_dir is not None:
        write_outputs(report, Path(out_dir) / sc.name)
    return report


def write_outputs(report: RunReport, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    payload["effective_config"] = report.scenario
    payload["effective_config"]["dw"] = report.scenario.get("dw") or default_dw(report.scenario["w"])
    (folder / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    if report.curves:
        write_curves_csv(report.curves, folder / "curves.csv")
        for label, curve in report.curves.items():
            write_curve_csv(curve, folder / f"curve_{label}.csv")
    if report.scaling is not None:
        (folder / "scaling.json").write_text(
            json.dumps({"schema_version": SCHEMA_VERSION, **report.scaling}, indent=2, sort_keys=True)
        )


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
