"""Closed-form linear theory of the observer error modes.

Everything here works for an arbitrary spatial dimension ``n`` (bounded at 8).
Wave numbers are integer vectors; in 1D a plain ``int`` is accepted as well.
Kernels are isotropic, so their Fourier coefficients are keyed by ``|k|^2``.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

TWO_PI = 2.0 * math.pi
FOUR_PI2 = 4.0 * math.pi**2
MAX_DIM = 8

WaveNumberLike = Union[int, Sequence[int], np.ndarray]

# relative size below which a discriminant is treated as exactly zero
_CRITICAL_RTOL = 64 * np.finfo(float).eps


class ResonanceError(ArithmeticError):
    """Forcing frequency hits an undamped natural frequency of the mode."""


@dataclass(frozen=True)
class FluidParams:
    """Physical constants of the compressible fluid.

    ``mu`` and ``lam`` are the Lame parameters; in 1D only ``nu = 2 mu + lam``
    enters the equations.
    """

    gamma: float = 1.4
    mu: float = 0.025
    lam: float = 0.0
    rho0: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.nu > 0:
            raise ValueError(f"nu = 2 mu + lam must be positive, got {self.nu}")
        if not (isinstance(self.n, (int, np.integer)) and 1 <= self.n <= MAX_DIM):
            raise ValueError(f"dimension n must be an integer in [1, {MAX_DIM}], got {self.n}")

    @classmethod
    def from_nu(cls, nu: float = 0.05, gamma: float = 1.4, rho0: float = 1.0, n: int = 1):
        """Parameters with the given 1D viscosity ``nu`` (split as mu = nu/2, lam = 0)."""
        return cls(gamma=gamma, mu=nu / 2.0, lam=0.0, rho0=rho0, n=n)

    @property
    def nu(self) -> float:
        return 2.0 * self.mu + self.lam

    @property
    def sound_speed2(self) -> float:
        """Squared linear sound speed ``gamma rho0^(gamma-1)``."""
        return self.gamma * self.rho0 ** (self.gamma - 1.0)


@dataclass(frozen=True)
class SpectralConstants:
    c1: float
    c2: float
    c3: float
    c4: complex
    c5: complex


def compute_constants(params: FluidParams) -> SpectralConstants:
    rho0 = params.rho0
    return SpectralConstants(
        c1=FOUR_PI2 * params.mu / rho0,
        c2=FOUR_PI2 * (params.lam + params.mu) / rho0,
        c3=FOUR_PI2 * params.gamma * rho0 ** (params.gamma - 1.0),
        c4=-1j * TWO_PI * rho0,
        c5=1j * TWO_PI * params.gamma * rho0 ** (params.gamma - 2.0),
    )


def as_wavenumber(k: WaveNumberLike, n: int) -> np.ndarray:
    """Validate ``k`` as a nonzero integer vector of length ``n``."""
    vec = np.atleast_1d(np.asarray(k))
    if vec.ndim != 1 or vec.size != n:
        raise ValueError(f"wave number must have {n} components, got {k!r}")
    if not np.all(np.equal(np.mod(vec, 1), 0)):
        raise ValueError(f"wave number must be integer, got {k!r}")
    vec = vec.astype(float)
    if not np.any(vec):
        raise ValueError("the zero mode is excluded (means are assumed matched)")
    return vec


@dataclass(frozen=True)
class KernelCoeffs:
    """Fourier coefficients of the two isotropic feedback kernels.

    ``target`` names the observed variable. For velocity observations
    ``coeff_rho``/``coeff_u`` hold (phi_rho_k, phi_u_k); for density
    observations they hold (psi_rho_k, psi_u_k). Both maps are keyed by
    ``|k|^2``; modes absent from a map take the matching ``*_fill`` value.
    Every coefficient beyond ``cutoff`` is zero for ``coeff_rho``; for density
    kernels ``coeff_u`` is truncated the same way.
    """

    target: str = "velocity"
    coeff_rho: Mapping[int, float] = field(default_factory=dict)
    coeff_u: Mapping[int, float] = field(default_factory=dict)
    cutoff: float = math.inf
    rho_fill: float = 0.0
    u_fill: float = 0.0
    allow_negative: bool = False

    def __post_init__(self):
        if self.target not in ("velocity", "density"):
            raise ValueError(f"kernel target must be 'velocity' or 'density', got {self.target!r}")
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        values = [self.rho_fill, self.u_fill, *self.coeff_rho.values(), *self.coeff_u.values()]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("kernel coefficients must be finite")
        if not self.allow_negative and min(values) < 0:
            raise ValueError("negative kernel coefficients need allow_negative=True (not numerically stable)")

    @classmethod
    def uniform(cls, rho: float = 0.0, u: float = 0.0, target: str = "velocity",
                cutoff: float = math.inf, allow_negative: bool = False) -> "KernelCoeffs":
        """Same coefficient on every mode, i.e. pointwise nudging strengths."""
        return cls(target=target, cutoff=cutoff, rho_fill=float(rho), u_fill=float(u),
                   allow_negative=allow_negative)

    @classmethod
    def zero(cls, target: str = "velocity") -> "KernelCoeffs":
        return cls(target=target)

    def _truncated(self, k2: float) -> bool:
        return k2 > self.cutoff**2

    def rho_at(self, k2: float) -> float:
        if self._truncated(k2):
            return 0.0
        return float(self.coeff_rho.get(int(round(k2)), self.rho_fill))

    def u_at(self, k2: float) -> float:
        if self.target == "density" and self._truncated(k2):
            return 0.0
        return float(self.coeff_u.get(int(round(k2)), self.u_fill))

    def rho_array(self, k2: np.ndarray) -> np.ndarray:
        return np.array([self.rho_at(x) for x in np.ravel(k2)]).reshape(np.shape(k2))

    def u_array(self, k2: np.ndarray) -> np.ndarray:
        return np.array([self.u_at(x) for x in np.ravel(k2)]).reshape(np.shape(k2))


@dataclass(frozen=True)
class ModeEigen:
    """Spectrum of one Fourier mode of the error system."""

    lambda_plus: complex
    lambda_minus: complex
    discriminant: float
    decay_rate: float
    period: Optional[float] = None
    lambda_d: Optional[float] = None
    lambda_0: Optional[float] = None
    multiplicity: int = 0

    def spectrum(self, formulation: str = "system") -> list[complex]:
        """Eigenvalue multiset of the mode matrix.

        ``"system"`` is the (n+1)-dimensional density/velocity system,
        ``"wave"`` the 2n-dimensional damped-wave form with the extra
        eigenvalue 0.
        """
        values = [self.lambda_plus, self.lambda_minus]
        if self.lambda_d is not None:
            values += [complex(self.lambda_d)] * self.multiplicity
        if formulation == "wave" and self.lambda_0 is not None:
            values += [complex(self.lambda_0)] * self.multiplicity
        return values


def _pair_roots(trace_abs: float, product: float, linear_term: float):
    """Roots of ``z^2 + trace_abs z + product`` with a given discriminant."""
    disc = linear_term
    scale = max(trace_abs**2, abs(product) * 4.0, 1.0)
    if abs(disc) <= _CRITICAL_RTOL * scale:
        disc = 0.0
    if disc < 0:
        root = 1j * math.sqrt(-disc)
    else:
        root = math.sqrt(disc)
    plus = (-trace_abs + root) / 2.0
    minus = (-trace_abs - root) / 2.0
    period = 4.0 * math.pi / math.sqrt(-disc) if disc < 0 else None
    return complex(plus), complex(minus), disc, period


def eigenvalues_closed_form(params: FluidParams, kernels: KernelCoeffs, k: WaveNumberLike) -> ModeEigen:
    """Closed-form eigenvalues of mode ``k`` for the observer error system.

    The decay rate is the smallest of ``-Re`` over the physical eigenvalues
    (lambda_d only exists for n >= 2; the damped-wave eigenvalue 0 is
    spurious and ignored).
    """
    kv = as_wavenumber(k, params.n)
    k2 = float(kv @ kv)
    c = compute_constants(params)
    a = (c.c1 + c.c2) * k2
    mult = params.n - 1
    if kernels.target == "velocity":
        phi_rho, phi_u = kernels.rho_at(k2), kernels.u_at(k2)
        s = a + phi_u
        product = c.c3 * (1.0 + phi_rho) * k2
        disc = s * s - 4.0 * product
        lam_d = -(c.c1 * k2 + phi_u) if mult else None
        lam_0 = 0.0 if mult else None
    else:
        psi_rho, psi_u = kernels.rho_at(k2), kernels.u_at(k2)
        s = a + psi_rho
        product = a * psi_rho + c.c3 * (1.0 + psi_u) * k2
        disc = (a - psi_rho) ** 2 - 4.0 * c.c3 * (1.0 + psi_u) * k2
        lam_d = -c.c1 * k2 if mult else None
        lam_0 = None
    plus, minus, disc, period = _pair_roots(s, product, disc)
    rates = [-plus.real, -minus.real]
    if lam_d is not None:
        rates.append(-lam_d)
    return ModeEigen(
        lambda_plus=plus,
        lambda_minus=minus,
        discriminant=disc,
        decay_rate=min(rates),
        period=period,
        lambda_d=lam_d,
        lambda_0=lam_0,
        multiplicity=mult,
    )


def _kk(kv: np.ndarray) -> np.ndarray:
    return np.outer(kv, kv)


def assemble_mode_matrix_wave(params: FluidParams, kernels: KernelCoeffs, k: WaveNumberLike) -> np.ndarray:
    """The 2n x 2n matrix of the damped-wave mode equation (state a_k, a_k')."""
    if kernels.target != "velocity":
        raise ValueError("the damped-wave matrix needs velocity kernels")
    n = params.n
    kv = as_wavenumber(k, n)
    k2 = float(kv @ kv)
    c = compute_constants(params)
    phi_rho, phi_u = kernels.rho_at(k2), kernels.u_at(k2)
    eye = np.eye(n)
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = eye
    out[n:, :n] = -c.c3 * (1.0 + phi_rho) * _kk(kv)
    out[n:, n:] = -(c.c1 * k2 + phi_u) * eye - c.c2 * _kk(kv)
    return out


def assemble_mode_matrix_system(params: FluidParams, kernels: KernelCoeffs, k: WaveNumberLike) -> np.ndarray:
    """The (n+1) x (n+1) matrix of the density/velocity mode system, velocity observed."""
    if kernels.target != "velocity":
        raise ValueError("this matrix needs velocity kernels")
    n = params.n
    kv = as_wavenumber(k, n)
    k2 = float(kv @ kv)
    c = compute_constants(params)
    phi_rho, phi_u = kernels.rho_at(k2), kernels.u_at(k2)
    out = np.zeros((n + 1, n + 1), dtype=complex)
    out[0, 1:] = c.c4 * (1.0 + phi_rho) * kv
    out[1:, 0] = -c.c5 * kv
    out[1:, 1:] = -(c.c1 * k2 + phi_u) * np.eye(n) - c.c2 * _kk(kv)
    return out


def assemble_mode_matrix_density_obs(params: FluidParams, kernels: KernelCoeffs, k: WaveNumberLike) -> np.ndarray:
    """The (n+1) x (n+1) mode matrix when density is observed."""
    if kernels.target != "density":
        raise ValueError("this matrix needs density kernels")
    n = params.n
    kv = as_wavenumber(k, n)
    k2 = float(kv @ kv)
    c = compute_constants(params)
    psi_rho, psi_u = kernels.rho_at(k2), kernels.u_at(k2)
    out = np.zeros((n + 1, n + 1), dtype=complex)
    out[0, 0] = -psi_rho
    out[0, 1:] = c.c4 * kv
    out[1:, 0] = -c.c5 * (1.0 + psi_u) * kv
    out[1:, 1:] = -c.c1 * k2 * np.eye(n) - c.c2 * _kk(kv)
    return out


def _check_design_args(D: float, K: float):
    if not D > 0:
        raise ValueError(f"target decay rate must be positive, got {D}")
    if not K > 0:
        raise ValueError(f"mode cutoff must be positive, got {K}")


def design_phi_u(D: float, k2: float, params: FluidParams) -> float:
    c = compute_constants(params)
    candidates = [0.0, 2.0 * D - (c.c1 + c.c2) * k2]
    if params.n > 1:
        candidates.append(D - c.c1 * k2)
    return max(candidates)


def design_phi_rho(phi_u: float, k2: float, params: FluidParams) -> float:
    """Smallest nonnegative phi_rho that makes the discriminant nonpositive."""
    if k2 == 0:
        return 0.0
    c = compute_constants(params)
    return max(0.0, ((c.c1 + c.c2) * k2 + phi_u) ** 2 / (4.0 * c.c3 * k2) - 1.0)


def design_kernels_velocity(D: float, K: float, params: FluidParams) -> KernelCoeffs:
    """Kernels guaranteeing decay rate >= D on every mode with |k| <= K.

    phi_u follows its formula on all modes (it vanishes once diffusion alone
    is fast enough); phi_rho grows like |k|^2 and is cut off beyond K.
    """
    _check_design_args(D, K)
    c = compute_constants(params)
    k2_u = max(K * K, 2.0 * D / (c.c1 + c.c2), D / c.c1 if params.n > 1 else 0.0)
    coeff_u = {k2: design_phi_u(D, k2, params) for k2 in range(int(math.floor(k2_u)) + 1)}
    coeff_rho = {k2: design_phi_rho(coeff_u[k2], k2, params) for k2 in range(int(math.floor(K * K)) + 1)}
    return KernelCoeffs("velocity", coeff_rho, coeff_u, cutoff=K)


def design_kernels_density(D: float, K: float, params: FluidParams) -> KernelCoeffs:
    """Density-observation kernels: the two acoustic eigenvalues decay at >= D for |k| <= K.

    For n >= 2 the incompressible modes keep their diffusion rate c1|k|^2.
    """
    _check_design_args(D, K)
    c = compute_constants(params)
    coeff_rho, coeff_u = {}, {}
    for k2 in range(int(math.floor(K * K)) + 1):
        a = (c.c1 + c.c2) * k2
        psi_rho = max(0.0, 2.0 * D - a)
        coeff_rho[k2] = psi_rho
        coeff_u[k2] = 0.0 if k2 == 0 else max(0.0, (a - psi_rho) ** 2 / (4.0 * c.c3 * k2) - 1.0)
    return KernelCoeffs("density", coeff_rho, coeff_u, cutoff=K)


def guaranteed_density_rate(D: float, k: WaveNumberLike, params: FluidParams) -> float:
    kv = as_wavenumber(k, params.n)
    if params.n == 1:
        return D
    return min(D, compute_constants(params).c1 * float(kv @ kv))


def optimal_nudging(params: FluidParams, k: WaveNumberLike, observed: str = "velocity") -> tuple[float, float]:
    """Best plain-nudging coefficient for mode ``k`` and the decay it achieves.

    Velocity: nudge only the velocity equation (phi_rho = 0). Density: nudge
    only the density equation (psi_u = 0). Rates refer to the acoustic pair;
    with density observations and n >= 2 they are capped by the diffusion
    eigenvalue c1|k|^2.
    """
    kv = as_wavenumber(k, params.n)
    k2 = float(kv @ kv)
    c = compute_constants(params)
    a = (c.c1 + c.c2) * k2
    b = 2.0 * math.sqrt(c.c3 * k2)
    if observed == "velocity":
        if a <= b:
            return b - a, b / 2.0
        disc = a * a - b * b
        return 0.0, (a - math.sqrt(disc)) / 2.0
    if observed == "density":
        rate = a + b / 2.0
        if params.n > 1:
            rate = min(rate, c.c1 * k2)
        return b + a, rate
    raise ValueError(f"observed must be 'velocity' or 'density', got {observed!r}")


def forced_amplitude(params: FluidParams, kernels: KernelCoeffs, k: int, c_k: float, omega_k: float):
    """Steady response of mode ``k`` to the forcing ``c_k sin(2 pi omega_k t)``.

    Returns ``(D_k, E_k, A_k, B_k)``: velocity amplitude, density amplitude and
    the cosine/sine coefficients of the velocity particular solution.
    """
    if params.n != 1:
        raise ValueError("forced amplitudes are derived for the 1D system only")
    kv = as_wavenumber(k, 1)
    k2 = float(kv @ kv)
    if not omega_k > 0:
        raise ValueError(f"forcing frequency must be positive, got {omega_k}")
    c = compute_constants(params)
    phi_rho, phi_u = kernels.rho_at(k2), kernels.u_at(k2)
    alpha = phi_u + (c.c1 + c.c2) * k2
    beta = c.c3 * (1.0 + phi_rho) * k2
    w = TWO_PI * omega_k
    detuning = beta - w * w
    denom = detuning**2 + (w * alpha) ** 2
    if denom == 0.0:
        raise ResonanceError(f"undamped resonance of mode {k} at frequency {omega_k}")
    rhs = c_k * w
    A = rhs * detuning / denom
    B = rhs * w * alpha / denom
    D = abs(rhs) / math.sqrt(denom)
    E = abs(kv[0]) / omega_k * (1.0 + phi_rho) * D
    return D, abs(E), A, B


def partial_obs_rate(params: FluidParams, phi_uk: float, L: float, k: int) -> float:
    """Approximate decay rate with velocity observed on [0, L].

    Keeps only the mean of the indicator function, so it assumes the error
    stays concentrated in mode ``k``; mode mixing is ignored.
    """
    if not 0.0 <= L <= 1.0:
        raise ValueError(f"observation length must lie in [0, 1], got {L}")
    kv = as_wavenumber(k, 1)
    c = compute_constants(params)
    return (phi_uk * L + (c.c1 + c.c2) * float(kv @ kv)) / 2.0


@dataclass(frozen=True)
class IndicatorSeries:
    """Real Fourier series of the indicator of [0, L] on the unit circle.

    ``1_[0,L](x) = mean + sum_k cos_coeff[k] cos(2 pi k x) + sin_coeff[k] sin(2 pi k x)``
    with index 0 of both arrays unused (zero).
    """

    mean: float
    cos_coeff: np.ndarray
    sin_coeff: np.ndarray

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ks = np.arange(1, len(self.cos_coeff))
        phase = TWO_PI * np.multiply.outer(x, ks)
        return self.mean + np.cos(phase) @ self.cos_coeff[1:] + np.sin(phase) @ self.sin_coeff[1:]


def indicator_fourier(L: float, kmax: int) -> IndicatorSeries:
    if not 0.0 < L <= 1.0:
        raise ValueError(f"L must lie in (0, 1], got {L}")
    if kmax < 1:
        raise ValueError(f"kmax must be at least 1, got {kmax}")
    ks = np.arange(kmax + 1, dtype=float)
    cos_c = np.zeros(kmax + 1)
    sin_c = np.zeros(kmax + 1)
    if L < 1.0:
        kk = ks[1:]
        cos_c[1:] = np.sin(TWO_PI * kk * L) / (math.pi * kk)
        sin_c[1:] = (1.0 - np.cos(TWO_PI * kk * L)) / (math.pi * kk)
    return IndicatorSeries(float(L), cos_c, sin_c)


@dataclass(frozen=True)
class ForcingEntry:
    k: int
    c: float
    omega: float


@dataclass(frozen=True)
class ForcingSpec:
    """Zero-mean body force ``f(t, x) = sum c_k sin(2 pi omega_k t) sin(2 pi k x)``.

    Enters the true velocity equation as ``u_t = ... - f``.
    """

    entries: tuple[ForcingEntry, ...] = ()

    def __post_init__(self):
        for e in self.entries:
            if int(e.k) != e.k or e.k == 0:
                raise ValueError(f"forcing modes must be nonzero integers (zero-mean forcing), got {e.k}")

    @classmethod
    def single(cls, k: int = 1, c: float = 1.0, omega: float = 1.0) -> "ForcingSpec":
        return cls((ForcingEntry(int(k), float(c), float(omega)),))

    def evaluate(self, x: np.ndarray, t: float) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        for e in self.entries:
            out += e.c * math.sin(TWO_PI * e.omega * t) * np.sin(TWO_PI * e.k * x)
        return out
