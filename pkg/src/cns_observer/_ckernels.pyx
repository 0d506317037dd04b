# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled finite-volume right-hand sides (same arithmetic as _kernels_py)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs

cnp.import_array()

DEF FLUX_VFROE = 0
DEF FLUX_LLF = 1
DEF RECON_FIRST = 0
DEF RECON_MINMOD = 1
DEF RECON_VANLEER = 2
DEF RECON_CENTRAL = 3


class VacuumError(ArithmeticError):
    pass


cdef inline double _slope(double dm, double dp, int recon) noexcept nogil:
    cdef double prod
    if recon == RECON_MINMOD:
        if dm * dp <= 0.0:
            return 0.0
        if fabs(dm) < fabs(dp):
            return dm
        return dp
    elif recon == RECON_VANLEER:
        prod = dm * dp
        if prod <= 0.0:
            return 0.0
        return 2.0 * prod / (dm + dp)
    elif recon == RECON_CENTRAL:
        return 0.5 * (dm + dp)
    return 0.0


cdef inline void _llf(double rl, double ul, double rr, double ur, double gamma,
                      double* f0, double* f1) noexcept nogil:
    cdef double cl = sqrt(gamma * pow(rl, gamma - 1.0))
    cdef double cr = sqrt(gamma * pow(rr, gamma - 1.0))
    cdef double sl = fabs(ul) + cl
    cdef double sr = fabs(ur) + cr
    cdef double s = sl if sl > sr else sr
    f0[0] = 0.5 * (rl * ul + rr * ur) - 0.5 * s * (rr - rl)
    f1[0] = (0.5 * ((rl * ul * ul + pow(rl, gamma)) + (rr * ur * ur + pow(rr, gamma)))
             - 0.5 * s * (rr * ur - rl * ul))


cdef inline void _vfroe(double rl, double ul, double rr, double ur, double gamma,
                        double* f0, double* f1) noexcept nogil:
    cdef double rbar = 0.5 * (rl + rr)
    cdef double ubar = 0.5 * (ul + ur)
    cdef double cbar = sqrt(gamma * pow(rbar, gamma - 1.0))
    cdef double scale = cbar / rbar
    cdef double w1, w2, rs, us
    if ubar - cbar > 0.0:
        w1 = scale * rl - ul
    else:
        w1 = scale * rr - ur
    if ubar + cbar > 0.0:
        w2 = scale * rl + ul
    else:
        w2 = scale * rr + ur
    rs = 0.5 * (w1 + w2) / scale
    us = 0.5 * (w2 - w1)
    if rs <= 0.0:
        _llf(rl, ul, rr, ur, gamma, f0, f1)
        return
    f0[0] = rs * us
    f1[0] = rs * us * us + pow(rs, gamma)


def nonlinear_rhs(double[::1] rho, double[::1] mom, double gamma, double nu, double dx,
                  int flux=FLUX_VFROE, int recon=RECON_VANLEER):
    """Tendencies of (rho, rho u) for the periodic 1D barotropic Navier-Stokes system."""
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t i, ip, im
    if flux != FLUX_VFROE and flux != FLUX_LLF:
        raise ValueError(f"unknown flux {flux}")
    if recon < RECON_FIRST or recon > RECON_CENTRAL:
        raise ValueError(f"unknown reconstruction {recon}")
    u_arr = np.empty(n)
    sr_arr = np.zeros(n)
    su_arr = np.zeros(n)
    f0_arr = np.empty(n)
    f1_arr = np.empty(n)
    drho_arr = np.empty(n)
    dmom_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] sr = sr_arr
    cdef double[::1] su = su_arr
    cdef double[::1] f0 = f0_arr
    cdef double[::1] f1 = f1_arr
    cdef double[::1] drho = drho_arr
    cdef double[::1] dmom = dmom_arr
    cdef double inv_dx = 1.0 / dx
    cdef double rl, rr, ul, ur
    cdef int bad = 0

    with nogil:
        for i in range(n):
            if rho[i] <= 0.0:
                bad = 1
            u[i] = mom[i] / rho[i]
        if not bad and recon != RECON_FIRST:
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i > 0 else n - 1
                sr[i] = _slope(rho[i] - rho[im], rho[ip] - rho[i], recon)
                su[i] = _slope(u[i] - u[im], u[ip] - u[i], recon)
        if not bad:
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                rl = rho[i] + 0.5 * sr[i]
                rr = rho[ip] - 0.5 * sr[ip]
                ul = u[i] + 0.5 * su[i]
                ur = u[ip] - 0.5 * su[ip]
                if rl <= 0.0 or rr <= 0.0:
                    bad = 2
                    break
                if flux == FLUX_VFROE:
                    _vfroe(rl, ul, rr, ur, gamma, &f0[i], &f1[i])
                else:
                    _llf(rl, ul, rr, ur, gamma, &f0[i], &f1[i])
        if not bad:
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i > 0 else n - 1
                drho[i] = -(f0[i] - f0[im]) * inv_dx
                dmom[i] = (-(f1[i] - f1[im]) * inv_dx
                           + nu * (u[ip] - 2.0 * u[i] + u[im]) * inv_dx * inv_dx)
    if bad == 1:
        raise VacuumError("non-positive density")
    if bad == 2:
        raise VacuumError("non-positive reconstructed density")
    return drho_arr, dmom_arr


def linear_rhs(double[::1] r, double[::1] v, double rho0, double gamma, double nu, double dx):
    """Tendencies of the density/velocity perturbation linearized about (rho0, 0)."""
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i, ip, im
    dr_arr = np.empty(n)
    dv_arr = np.empty(n)
    cdef double[::1] dr = dr_arr
    cdef double[::1] dv = dv_arr
    cdef double inv2dx = 0.5 / dx
    cdef double inv_dx2 = 1.0 / (dx * dx)
    cdef double cs2 = gamma * pow(rho0, gamma - 1.0)
    with nogil:
        for i in range(n):
            ip = i + 1 if i + 1 < n else 0
            im = i - 1 if i > 0 else n - 1
            dr[i] = -rho0 * ((v[ip] - v[im]) * inv2dx)
            dv[i] = (nu * ((v[ip] - 2.0 * v[i] + v[im]) * inv_dx2)
                     - cs2 * ((r[ip] - r[im]) * inv2dx)) / rho0
    return dr_arr, dv_arr
