"""Pure numpy implementation of the finite-volume right-hand sides.

Mirrors ``_ckernels.pyx`` operation for operation; used when the compiled
extension is unavailable and as the reference in tests and benchmarks.
"""

import numpy as np

FLUX_VFROE = 0
FLUX_LLF = 1

RECON_FIRST = 0
RECON_MINMOD = 1
RECON_VANLEER = 2
RECON_CENTRAL = 3


class VacuumError(ArithmeticError):
    pass


def _slopes(q, recon):
    dm = q - np.roll(q, 1)
    dp = np.roll(q, -1) - q
    if recon == RECON_MINMOD:
        return np.where(dm * dp > 0, np.sign(dm) * np.minimum(np.abs(dm), np.abs(dp)), 0.0)
    if recon == RECON_VANLEER:
        prod = dm * dp
        with np.errstate(invalid="ignore", divide="ignore"):
            s = 2.0 * prod / (dm + dp)
        return np.where(prod > 0, s, 0.0)
    if recon == RECON_CENTRAL:
        return 0.5 * (dm + dp)
    raise ValueError(f"unknown reconstruction {recon}")


def _face_states(q, recon):
    if recon == RECON_FIRST:
        return q, np.roll(q, -1)
    s = _slopes(q, recon)
    return q + 0.5 * s, np.roll(q - 0.5 * s, -1)


def _physical_flux(rho, u, gamma):
    return rho * u, rho * u * u + rho**gamma


def _llf(rl, ul, rr, ur, gamma):
    cl = np.sqrt(gamma * rl ** (gamma - 1.0))
    cr = np.sqrt(gamma * rr ** (gamma - 1.0))
    s = np.maximum(np.abs(ul) + cl, np.abs(ur) + cr)
    fl0, fl1 = _physical_flux(rl, ul, gamma)
    fr0, fr1 = _physical_flux(rr, ur, gamma)
    f0 = 0.5 * (fl0 + fr0) - 0.5 * s * (rr - rl)
    f1 = 0.5 * (fl1 + fr1) - 0.5 * s * (rr * ur - rl * ul)
    return f0, f1


def _vfroe(rl, ul, rr, ur, gamma):
    rbar = 0.5 * (rl + rr)
    ubar = 0.5 * (ul + ur)
    cbar = np.sqrt(gamma * rbar ** (gamma - 1.0))
    scale = cbar / rbar
    w1l, w1r = scale * rl - ul, scale * rr - ur
    w2l, w2r = scale * rl + ul, scale * rr + ur
    w1 = np.where(ubar - cbar > 0, w1l, w1r)
    w2 = np.where(ubar + cbar > 0, w2l, w2r)
    rs = 0.5 * (w1 + w2) / scale
    us = 0.5 * (w2 - w1)
    bad = rs <= 0
    if np.any(bad):
        rs = np.where(bad, 1.0, rs)
        f0, f1 = _physical_flux(rs, us, gamma)
        g0, g1 = _llf(rl, ul, rr, ur, gamma)
        return np.where(bad, g0, f0), np.where(bad, g1, f1)
    return _physical_flux(rs, us, gamma)


def nonlinear_rhs(rho, mom, gamma, nu, dx, flux=FLUX_VFROE, recon=RECON_VANLEER):
    """Tendencies of (rho, rho u) for the periodic 1D barotropic Navier-Stokes system."""
    if np.any(rho <= 0):
        raise VacuumError("non-positive density")
    u = mom / rho
    rl, rr = _face_states(rho, recon)
    ul, ur = _face_states(u, recon)
    if np.any(rl <= 0) or np.any(rr <= 0):
        raise VacuumError("non-positive reconstructed density")
    if flux == FLUX_VFROE:
        f0, f1 = _vfroe(rl, ul, rr, ur, gamma)
    elif flux == FLUX_LLF:
        f0, f1 = _llf(rl, ul, rr, ur, gamma)
    else:
        raise ValueError(f"unknown flux {flux}")
    inv_dx = 1.0 / dx
    drho = -(f0 - np.roll(f0, 1)) * inv_dx
    dmom = -(f1 - np.roll(f1, 1)) * inv_dx
    dmom += nu * (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) * inv_dx * inv_dx
    return drho, dmom


def linear_rhs(r, v, rho0, gamma, nu, dx):
    """Tendencies of the density/velocity perturbation linearized about (rho0, 0)."""
    inv2dx = 0.5 / dx
    cs2 = gamma * rho0 ** (gamma - 1.0)
    vx = (np.roll(v, -1) - np.roll(v, 1)) * inv2dx
    rx = (np.roll(r, -1) - np.roll(r, 1)) * inv2dx
    vxx = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / (dx * dx)
    dr = -rho0 * vx
    dv = (nu * vxx - cs2 * rx) / rho0
    return dr, dv
