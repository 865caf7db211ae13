"""Master-equation dynamics: signal Hamiltonian, natural noise and engineered dissipation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .engine import AutoQecScheme
from .noise import NoiseModel

# Above this dimension the d^2 x d^2 propagator gets too large; step in operator form.
SUPEROP_MAX_DIM = 32
TRACE_ABORT = 1e-6
NEG_EIG_ABORT = -1e-6


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    """Integration settings. ``kappa``/``R`` default to the noise model and scheme values."""

    w: float = 1.0
    t_max: float = 5.0
    kappa: float | None = None
    R: float | None = None
    dt: float | None = None
    record_every: int = 100
    n_samples: int | None = None
    enforce_hermiticity: bool = True

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def with_(self, **kw) -> SimulationConfig:
        return replace(self, **kw)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, d, d)
    trace_err: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    dt: float

    def to_csv(self, path, include_states: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            header = ["t", "trace_err", "min_eig"]
            d = self.states.shape[1]
            if include_states:
                header += [f"rho_{a}_{b}_{part}" for a in range(d) for b in range(d) for part in ("re", "im")]
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [f"{t:.12g}", f"{self.trace_err[k]:.12g}", f"{self.min_eig[k]:.12g}"]
                if include_states:
                    for z in self.states[k].ravel():
                        row += [f"{z.real:.12g}", f"{z.imag:.12g}"]
                w.writerow(row)


def dissipator(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    if a.shape != rho.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"dissipator shape mismatch: {a.shape} vs {rho.shape}")
    ad = a.conj().T
    ada = ad @ a
    return a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada)


def _rates(model: NoiseModel | None, scheme: AutoQecScheme | None, cfg: SimulationConfig):
    if cfg.kappa is not None:
        kappa = cfg.kappa
    elif model is not None:
        kappa = model.kappa
    else:
        kappa = scheme.kappa if scheme is not None else 0.0
    if scheme is None:
        return kappa, 0.0
    r = cfg.R if cfg.R is not None else scheme.R
    return kappa, r * kappa


def _weighted_ops(model, scheme, cfg):
    kappa, eng_rate = _rates(model, scheme, cfg)
    ops = []
    if model is not None and kappa > 0:
        ops += [(kappa, l) for l in model.lindblad_ops]
    if scheme is not None and eng_rate > 0:
        ops += [(eng_rate, l) for l in scheme.engineered_ops]
    return ops


def rhs(rho, h, scheme, model, cfg: SimulationConfig) -> np.ndarray:
    """d rho / dt = -i w [H, rho] + kappa sum D[L_n] rho + R kappa sum D[L_E] rho."""
    if rho.shape != h.shape:
        raise ValueError(f"state shape {rho.shape} does not match Hamiltonian {h.shape}")
    out = -1j * cfg.w * (h @ rho - rho @ h)
    for rate, l in _weighted_ops(model, scheme, cfg):
        out += rate * dissipator(l, rho)
    return out


def liouvillian(h, scheme, model, cfg: SimulationConfig) -> np.ndarray:
    """Generator as a d^2 x d^2 matrix acting on row-major vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * cfg.w * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, l in _weighted_ops(model, scheme, cfg):
        lda = l.conj().T @ l
        gen += rate * (np.kron(l, l.conj()) - 0.5 * (np.kron(lda, eye) + np.kron(eye, lda.T)))
    return gen


def default_dt(h, scheme, model, cfg: SimulationConfig) -> float:
    kappa, eng_rate = _rates(model, scheme, cfg)
    noise_scale = 0.0
    if model is not None:
        noise_scale = kappa * sum(np.max(np.abs(l.conj().T @ l)) for l in model.lindblad_ops)
    scale = eng_rate + abs(cfg.w) * np.max(np.abs(h)) + noise_scale
    return 1e-3 if scale == 0 else min(1e-3, 0.02 / scale)


def _step_plan(cfg: SimulationConfig, dt: float) -> tuple[int, int, float]:
    n_steps = max(1, math.ceil(cfg.t_max / dt - 1e-9)) if cfg.t_max > 0 else 0
    if cfg.n_samples:
        n_steps = cfg.n_samples * max(1, math.ceil(n_steps / cfg.n_samples))
        stride = n_steps // cfg.n_samples
    else:
        stride = cfg.record_every
    dt_eff = cfg.t_max / n_steps if n_steps else dt
    return n_steps, stride, dt_eff


def integrate(rho0, h, scheme, model, cfg: SimulationConfig) -> Trajectory:
    """Fixed-step classical RK4. Samples at t = 0 and every ``stride`` steps, plus the final step."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = h.shape[0]
    if rho0.shape != (d, d):
        raise ValueError(f"initial state shape {rho0.shape} does not match Hamiltonian {h.shape}")
    dt = cfg.dt if cfg.dt is not None else default_dt(h, scheme, model, cfg)
    n_steps, stride, dt = _step_plan(cfg, dt)

    if d <= SUPEROP_MAX_DIM:
        hl = dt * liouvillian(h, scheme, model, cfg)
        eye = np.eye(d * d)
        prop = eye + hl @ (eye + hl / 2 @ (eye + hl / 3 @ (eye + hl / 4)))

        def step(r):
            return (prop @ r.ravel()).reshape(d, d)

    else:
        ops = _weighted_ops(model, scheme, cfg)
        heff = -1j * cfg.w * h - 0.5 * sum((g * l.conj().T @ l for g, l in ops), np.zeros((d, d), complex))
        jumps = [(g, l, l.conj().T) for g, l in ops]

        def f(r):
            out = heff @ r + r @ heff.conj().T
            for g, l, ld in jumps:
                out += g * (l @ r @ ld)
            return out

        def step(r):
            k1 = f(r)
            k2 = f(r + dt / 2 * k1)
            k3 = f(r + dt / 2 * k2)
            k4 = f(r + dt * k3)
            return r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    times, states, tr, he, me = [], [], [], [], []

    def record(t, r, herm):
        trace_err = abs(np.trace(r).real - 1.0)
        min_eig = float(np.linalg.eigvalsh((r + r.conj().T) / 2)[0])
        if trace_err > TRACE_ABORT or min_eig < NEG_EIG_ABORT:
            raise IntegrationError(
                f"integration unstable, reduce dt (t={t:.4g}, trace error {trace_err:.2e}, min eigenvalue {min_eig:.2e})"
            )
        times.append(t)
        states.append(r.copy())
        tr.append(trace_err)
        he.append(herm)
        me.append(min_eig)

    rho = rho0.copy()
    record(0.0, rho, float(np.max(np.abs(rho - rho.conj().T))))
    for k in range(1, n_steps + 1):
        rho = step(rho)
        herm = None
        if k % stride == 0 or k == n_steps:
            herm = float(np.max(np.abs(rho - rho.conj().T)))
        if cfg.enforce_hermiticity:
            rho = (rho + rho.conj().T) / 2
        if herm is not None:
            record(k * dt, rho, herm)
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        trace_err=np.array(tr),
        herm_err=np.array(he),
        min_eig=np.array(me),
        dt=dt,
    )
