"""1D periodic finite-volume solver for the barotropic compressible Navier-Stokes system."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .spectral import FluidParams


class SolverError(RuntimeError):
    """The discrete solution left the admissible state space."""


class CFLError(ValueError):
    """The requested time step violates the stability limit."""


@dataclass(frozen=True)
class GridSpec:
    n_cells: int = 100

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError(f"n_cells must be an integer >= 8, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def x(self) -> np.ndarray:
        """Cell centers."""
        return (np.arange(self.n_cells) + 0.5) / self.n_cells

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wave numbers of the real FFT coefficients."""
        return np.arange(self.n_cells // 2 + 1)


@dataclass
class FieldState:
    rho: np.ndarray
    mom: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.mom = np.asarray(self.mom, dtype=float)
        if self.rho.shape != self.mom.shape or self.rho.ndim != 1:
            raise ValueError("rho and mom must be 1D arrays of equal length")
        if not (np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.mom))):
            raise SolverError(f"non-finite state at t={self.time}")
        if np.any(self.rho <= 0):
            raise SolverError(f"vacuum (rho <= 0) at t={self.time}")

    @property
    def u(self) -> np.ndarray:
        return self.mom / self.rho

    @classmethod
    def uniform(cls, grid: GridSpec, rho: float = 1.0, u: float = 0.0, time: float = 0.0):
        r = np.full(grid.n_cells, float(rho))
        return cls(r, r * u, time)

    @classmethod
    def perturbed(cls, grid: GridSpec, amplitude: float, mode: int, rho0: float = 1.0,
                  rho_offset: float = 0.0):
        """rho = rho0 + offset + A sin(2 pi k x), u = A sin(2 pi k x), sampled at cell centers."""
        s = amplitude * np.sin(2.0 * np.pi * mode * grid.x)
        rho = rho0 + rho_offset + s
        return cls(rho, rho * s, 0.0)

    def copy(self) -> "FieldState":
        return FieldState(self.rho.copy(), self.mom.copy(), self.time)

    def to_csv(self, params: Optional[FluidParams] = None, tag: Optional[str] = None) -> str:
        """One row per cell: x, rho, u. Header comments carry time, tag and params."""
        buf = io.StringIO()
        buf.write(f"# time={self.time!r}\n")
        if tag is not None:
            buf.write(f"# tag={tag}\n")
        if params is not None:
            buf.write(f"# gamma={params.gamma!r} mu={params.mu!r} lam={params.lam!r} rho0={params.rho0!r}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "rho", "u"])
        n = self.rho.size
        x = (np.arange(n) + 0.5) / n
        for xi, ri, ui in zip(x, self.rho, self.u):
            writer.writerow([repr(float(xi)), repr(float(ri)), repr(float(ui))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FieldState":
        time = 0.0
        rows = []
        for line in text.splitlines():
            if line.startswith("# time="):
                time = float(line.split("=", 1)[1])
            elif line and not line.startswith("#"):
                rows.append(line)
        reader = csv.DictReader(rows)
        data = [(float(r["rho"]), float(r["u"])) for r in reader]
        rho = np.array([d[0] for d in data])
        u = np.array([d[1] for d in data])
        return cls(rho, rho * u, time)


@dataclass(frozen=True)
class TimeStepper:
    """Fixed-step third-order SSP Runge-Kutta with a stability guard.

    With ``adaptive=False`` a step that exceeds the convective CFL number or
    the explicit diffusion limit raises ``CFLError`` instead of shrinking dt.
    """

    dt_max: float = 1e-3
    cfl: float = 0.9
    diffusion_limit: float = 0.6
    adaptive: bool = False

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if not 0 < self.cfl <= 1.5:
            raise ValueError(f"cfl must lie in (0, 1.5], got {self.cfl}")

    def stable_dt(self, rho: np.ndarray, u: np.ndarray, params: FluidParams, dx: float) -> float:
        c = np.sqrt(params.gamma * rho ** (params.gamma - 1.0))
        speed = float(np.max(np.abs(u) + c))
        dt_conv = self.cfl * dx / speed
        dt_diff = self.diffusion_limit * dx * dx * float(np.min(rho)) / params.nu
        return min(dt_conv, dt_diff)

    def choose_dt(self, states, params: FluidParams, dx: float) -> float:
        limit = min(self.stable_dt(s.rho, s.u, params, dx) for s in states)
        if self.adaptive:
            return min(self.dt_max, limit)
        if self.dt_max > limit:
            raise CFLError(f"dt={self.dt_max} exceeds the stability limit {limit:.3e}")
        return self.dt_max


class NonlinearModel:
    """Conservative (rho, rho u) finite volumes: VFRoe or LLF flux, MUSCL faces, central viscosity."""

    kind = "nonlinear"

    def __init__(self, params: FluidParams, grid: GridSpec, flux: str = "vfroe",
                 reconstruction: str = "vanleer"):
        if params.n != 1:
            raise ValueError("the finite-volume solver is one-dimensional")
        if flux not in kernels.FLUXES:
            raise ValueError(f"flux must be one of {sorted(kernels.FLUXES)}, got {flux!r}")
        if reconstruction not in kernels.RECONSTRUCTIONS:
            raise ValueError(f"reconstruction must be one of {sorted(kernels.RECONSTRUCTIONS)}, got {reconstruction!r}")
        self.params = params
        self.grid = grid
        self._flux = kernels.FLUXES[flux]
        self._recon = kernels.RECONSTRUCTIONS[reconstruction]

    def pack(self, state: FieldState) -> np.ndarray:
        return np.stack([state.rho, state.mom])

    def unpack(self, q: np.ndarray, time: float) -> FieldState:
        return FieldState(q[0].copy(), q[1].copy(), time)

    def density(self, q):
        return q[0]

    def velocity(self, q):
        return q[1] / q[0]

    def stability_state(self, q, time: float = 0.0) -> FieldState:
        """State whose wave speeds and density bound the stable step."""
        return self.unpack(q, time)

    def rhs(self, q: np.ndarray) -> np.ndarray:
        p = self.params
        try:
            drho, dmom = kernels.nonlinear_rhs(
                np.ascontiguousarray(q[0]), np.ascontiguousarray(q[1]),
                p.gamma, p.nu, self.grid.dx, self._flux, self._recon,
            )
        except kernels.VACUUM_ERRORS as exc:
            raise SolverError(str(exc)) from exc
        return np.stack([drho, dmom])

    def add_sources(self, dq, q, f_rho=None, f_u=None, forcing=None):
        """Add observer feedback and body forcing.

        The velocity feedback enters rho (u_t + u u_x); in conservative form
        that is ``F_u + u F_rho`` on the momentum equation.
        """
        if f_rho is not None:
            dq[0] += f_rho
            dq[1] += self.velocity(q) * f_rho
        if f_u is not None:
            dq[1] += f_u
        if forcing is not None:
            dq[1] -= q[0] * forcing
        return dq


class LinearModel:
    """Perturbation equations about (rho0, 0); the packed state is (rho, u)."""

    kind = "linear"

    def __init__(self, params: FluidParams, grid: GridSpec):
        if params.n != 1:
            raise ValueError("the finite-volume solver is one-dimensional")
        self.params = params
        self.grid = grid

    def pack(self, state: FieldState) -> np.ndarray:
        return np.stack([state.rho, state.u])

    def unpack(self, q: np.ndarray, time: float) -> FieldState:
        return FieldState(q[0].copy(), q[0] * q[1], time)

    def density(self, q):
        return q[0]

    def velocity(self, q):
        return q[1]

    def stability_state(self, q, time: float = 0.0) -> FieldState:
        # coefficients are frozen at rho0, so the perturbation density does not enter
        rho = np.full(q.shape[1], self.params.rho0)
        return FieldState(rho, rho * q[1], time)

    def rhs(self, q: np.ndarray) -> np.ndarray:
        p = self.params
        dr, dv = kernels.linear_rhs(
            np.ascontiguousarray(q[0] - p.rho0), np.ascontiguousarray(q[1]),
            p.rho0, p.gamma, p.nu, self.grid.dx,
        )
        return np.stack([dr, dv])

    def add_sources(self, dq, q, f_rho=None, f_u=None, forcing=None):
        if f_rho is not None:
            dq[0] += f_rho
        if f_u is not None:
            dq[1] += f_u / self.params.rho0
        if forcing is not None:
            dq[1] -= forcing
        return dq


def make_model(kind: str, params: FluidParams, grid: GridSpec, **options):
    if kind == "nonlinear":
        return NonlinearModel(params, grid, **options)
    if kind == "linear":
        return LinearModel(params, grid)
    raise ValueError(f"model must be 'linear' or 'nonlinear', got {kind!r}")


def rhs_nonlinear(state: FieldState, params: FluidParams, flux: str = "vfroe",
                  reconstruction: str = "vanleer") -> tuple[np.ndarray, np.ndarray]:
    model = NonlinearModel(params, GridSpec(state.rho.size), flux, reconstruction)
    d = model.rhs(model.pack(state))
    return d[0], d[1]


def rhs_linear(r: np.ndarray, v: np.ndarray, params: FluidParams) -> tuple[np.ndarray, np.ndarray]:
    """Tendencies (r_t, v_t) of a perturbation (r, v) about (rho0, 0)."""
    r = np.ascontiguousarray(r, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    return kernels.linear_rhs(r, v, params.rho0, params.gamma, params.nu, 1.0 / r.size)


def ssprk3(q: np.ndarray, t: float, dt: float, rhs: Callable[[np.ndarray, float], np.ndarray]) -> np.ndarray:
    """Shu-Osher three-stage, third-order strong-stability-preserving step."""
    q1 = q + dt * rhs(q, t)
    q2 = 0.75 * q + 0.25 * (q1 + dt * rhs(q1, t + dt))
    return q / 3.0 + (2.0 / 3.0) * (q2 + dt * rhs(q2, t + 0.5 * dt))


def step_rk3(state: FieldState, model, stepper: TimeStepper, sources=None) -> FieldState:
    """Advance one state by one step; ``sources(q, t)`` may return extra tendencies."""
    dt = stepper.choose_dt([model.stability_state(model.pack(state), state.time)], model.params, model.grid.dx)

    def rhs(q, t):
        d = model.rhs(q)
        if sources is not None:
            d = d + sources(q, t)
        return d

    q = ssprk3(model.pack(state), state.time, dt, rhs)
    if not np.all(np.isfinite(q)):
        raise SolverError(f"non-finite state at t={state.time + dt}")
    return model.unpack(q, state.time + dt)


def total_mass(state: FieldState) -> float:
    return float(np.sum(state.rho) / state.rho.size)


def linear_operator_matrix(params: FluidParams, grid: GridSpec) -> np.ndarray:
    """Dense matrix of the semi-discrete linear operator acting on (r, v)."""
    n = grid.n_cells
    out = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = 1.0
        dr, dv = rhs_linear(e[:n], e[n:], params)
        out[:n, j] = dr
        out[n:, j] = dv
    return out
