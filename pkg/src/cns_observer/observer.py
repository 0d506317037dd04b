"""Observer coupled to a truth run, with convolution feedback applied in Fourier space."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .solver import (
    FieldState,
    GridSpec,
    SolverError,
    TimeStepper,
    make_model,
    ssprk3,
)
from .spectral import TWO_PI, FluidParams, ForcingSpec, KernelCoeffs

DENSITY_FEEDBACK_FORMS = ("divergence", "localized")


@dataclass(frozen=True)
class ObserverConfig:
    """How the observer is built and corrected.

    ``density_feedback`` selects where the density correction acts when only
    part of the domain is observed: ``"divergence"`` differentiates the masked
    mismatch (conserves mass), ``"localized"`` keeps the correction inside the
    observed window only (does not conserve mass). The two coincide for L = 1.
    ``mean_correction`` removes the domain integral of the density feedback,
    scaled by ``gain``.
    """

    kernels: KernelCoeffs = field(default_factory=KernelCoeffs.zero)
    model: str = "nonlinear"
    observed: str = "velocity"
    obs_length: float = 1.0
    mean_correction: bool = False
    gain: float = 1.0
    density_feedback: str = "divergence"
    forcing: Optional[ForcingSpec] = None
    forcing_known: bool = False
    flux: str = "vfroe"
    reconstruction: str = "vanleer"

    def __post_init__(self):
        if self.model not in ("linear", "nonlinear"):
            raise ValueError(f"model must be 'linear' or 'nonlinear', got {self.model!r}")
        if self.observed not in ("velocity", "density"):
            raise ValueError(f"observed must be 'velocity' or 'density', got {self.observed!r}")
        if self.kernels.target != self.observed:
            raise ValueError(
                f"kernels target {self.kernels.target!r} does not match observed variable {self.observed!r}"
            )
        if not 0.0 < self.obs_length <= 1.0:
            raise ValueError(f"obs_length must lie in (0, 1], got {self.obs_length}")
        if self.gain < 0:
            raise ValueError(f"gain must be nonnegative, got {self.gain}")
        if self.density_feedback not in DENSITY_FEEDBACK_FORMS:
            raise ValueError(f"density_feedback must be one of {DENSITY_FEEDBACK_FORMS}, got {self.density_feedback!r}")
        if self.mean_correction and self.observed != "velocity":
            raise ValueError("mean correction applies to velocity observations only")


def observation_mask(grid: GridSpec, L: float) -> np.ndarray:
    """1 on cells whose center lies in [0, L], else 0."""
    return (grid.x <= L + 1e-12).astype(float)


class FeedbackOperator:
    """Precomputed spectral feedback for one grid/config pair."""

    def __init__(self, config: ObserverConfig, params: FluidParams, grid: GridSpec):
        self.config = config
        self.params = params
        self.grid = grid
        k = grid.wavenumbers.astype(float)
        k2 = k * k
        self.coef_rho = config.kernels.rho_array(k2)
        self.coef_u = config.kernels.u_array(k2)
        deriv = 1j * TWO_PI * k
        if grid.n_cells % 2 == 0:
            deriv[-1] = 0.0
        self.deriv = deriv
        self.mask = observation_mask(grid, config.obs_length)
        self.full = bool(np.all(self.mask == 1.0))
        self.n_obs = float(self.mask.sum())
        self.active = bool(np.any(self.coef_rho) or np.any(self.coef_u))

    def __call__(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cfg, p, n = self.config, self.params, self.grid.n_cells
        m = w if self.full else self.mask * w
        spec = np.fft.rfft(m)
        if cfg.observed == "velocity":
            f_u = p.rho0 * np.fft.irfft(self.coef_u * spec, n)
            f_rho = p.rho0 * np.fft.irfft(self.coef_rho * self.deriv * spec, n)
            if not self.full:
                if cfg.density_feedback == "localized":
                    f_rho = f_rho * self.mask
                if cfg.mean_correction:
                    f_rho = f_rho - cfg.gain * self.mask * (f_rho.sum() / self.n_obs)
        else:
            f_rho = np.fft.irfft(self.coef_rho * spec, n)
            f_u = p.sound_speed2 * np.fft.irfft(self.coef_u * self.deriv * spec, n)
        return f_rho, f_u


def apply_feedback(w: np.ndarray, config: ObserverConfig, params: FluidParams,
                   grid: Optional[GridSpec] = None) -> tuple[np.ndarray, np.ndarray]:
    """Feedback terms (F_rho, F_u) for the mismatch ``w`` = observed - estimated."""
    w = np.asarray(w, dtype=float)
    grid = grid or GridSpec(w.size)
    return FeedbackOperator(config, params, grid)(w)


@dataclass
class PairedRun:
    truth: FieldState
    observer: FieldState
    t: np.ndarray
    err_rho: np.ndarray
    err_u: np.ndarray
    modes_rho: np.ndarray
    modes_u: np.ndarray

    def mode_amplitude(self, k: int, var: str = "u") -> np.ndarray:
        """Amplitude of the real Fourier mode k of the error (2|c_k| for k > 0)."""
        c = (self.modes_u if var == "u" else self.modes_rho)[:, k]
        return np.abs(c) * (1.0 if k == 0 else 2.0)

    def sine_coefficient(self, k: int, var: str = "u") -> np.ndarray:
        """Signed coefficient of sin(2 pi k x) in the error."""
        c = (self.modes_u if var == "u" else self.modes_rho)[:, k]
        return -2.0 * c.imag

    def mean_offset(self) -> float:
        """Final difference between observer and truth mean density."""
        return float(np.mean(self.observer.rho) - np.mean(self.truth.rho))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "err_rho", "err_u"])
        for row in zip(self.t, self.err_rho, self.err_u):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def run_pair(truth0: FieldState, observer0: FieldState, config: ObserverConfig, T: float,
             params: Optional[FluidParams] = None, stepper: Optional[TimeStepper] = None,
             record_every: int = 1, record_modes: int = 8) -> PairedRun:
    """Advance truth (no feedback) and observer (with feedback) in lockstep to time T."""
    params = params or FluidParams.from_nu(0.05)
    stepper = stepper or TimeStepper()
    if not T > 0:
        raise ValueError(f"final time must be positive, got {T}")
    n = truth0.rho.size
    if observer0.rho.size != n:
        raise ValueError("truth and observer must share the grid")
    grid = GridSpec(n)
    options = {"flux": config.flux, "reconstruction": config.reconstruction} if config.model == "nonlinear" else {}
    model = make_model(config.model, params, grid, **options)
    feedback = FeedbackOperator(config, params, grid)
    x = grid.x
    observe = model.velocity if config.observed == "velocity" else model.density
    forcing = config.forcing if config.forcing is not None and config.forcing.entries else None

    qt = model.pack(truth0)
    qo = model.pack(observer0)
    static_truth = forcing is None and not np.any(model.rhs(qt))

    def observer_rhs(q, t, q_truth):
        d = model.rhs(q)
        f_rho = f_u = None
        if feedback.active:
            f_rho, f_u = feedback(observe(q_truth) - observe(q))
        f = forcing.evaluate(x, t) if (forcing is not None and config.forcing_known) else None
        return model.add_sources(d, q, f_rho, f_u, f)

    def coupled_rhs(Q, t):
        q_truth, q_obs = Q[:2], Q[2:]
        if static_truth:
            d_truth = np.zeros_like(q_truth)
        else:
            d_truth = model.rhs(q_truth)
            if forcing is not None:
                model.add_sources(d_truth, q_truth, forcing=forcing.evaluate(x, t))
        return np.concatenate([d_truth, observer_rhs(q_obs, t, q_truth)])

    kmax = min(record_modes, n // 2)
    times, e_rho, e_u, m_rho, m_u = [], [], [], [], []
    dx = grid.dx

    def record(t, q_truth, q_obs):
        dr = model.density(q_obs) - model.density(q_truth)
        du = model.velocity(q_obs) - model.velocity(q_truth)
        times.append(t)
        e_rho.append(math.sqrt(float(dr @ dr) * dx))
        e_u.append(math.sqrt(float(du @ du) * dx))
        m_rho.append(np.fft.rfft(dr)[: kmax + 1] / n)
        m_u.append(np.fft.rfft(du)[: kmax + 1] / n)

    t = float(truth0.time)
    t_end = t + T
    Q = np.concatenate([qt, qo])
    record(t, Q[:2], Q[2:])
    step = 0
    while t < t_end - 1e-12:
        halves = (Q[2:],) if static_truth else (Q[:2], Q[2:])
        try:
            states = [model.stability_state(h, t) for h in halves]
        except SolverError as exc:
            raise SolverError(f"{exc} (t={t:.6g})") from exc
        dt = min(stepper.choose_dt(states, params, dx), t_end - t)
        try:
            Q = ssprk3(Q, t, dt, coupled_rhs)
        except SolverError as exc:
            raise SolverError(f"{exc} (t={t:.6g})") from exc
        if not np.all(np.isfinite(Q)):
            raise SolverError(f"non-finite state (t={t + dt:.6g})")
        step += 1
        t = truth0.time + step * dt if not stepper.adaptive else t + dt
        if step % record_every == 0 or t >= t_end - 1e-12:
            record(t, Q[:2], Q[2:])

    try:
        truth = model.unpack(Q[:2], t)
        observer = model.unpack(Q[2:], t)
    except SolverError as exc:
        raise SolverError(f"{exc} (t={t:.6g})") from exc
    return PairedRun(
        truth=truth,
        observer=observer,
        t=np.array(times),
        err_rho=np.array(e_rho),
        err_u=np.array(e_u),
        modes_rho=np.array(m_rho),
        modes_u=np.array(m_u),
    )
