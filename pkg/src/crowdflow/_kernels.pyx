# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: upwind flux divergence and projected Gauss-Seidel.

Mirrors crowdflow._kernels_py operation by operation; the floating-point
evaluation order is identical so both backends return equal values.  Built
with -ffp-contract=off to rule out fused multiply-add divergence.
"""

import numpy as np


def upwind_fluxes(double[:, ::1] u, double[:, ::1] vx, double[:, ::1] vy,
                  const unsigned char[::1] lt, const unsigned char[::1] rt,
                  const unsigned char[::1] bt, const unsigned char[::1] tt):
    cdef Py_ssize_t ny = u.shape[0]
    cdef Py_ssize_t nx = u.shape[1]
    fx_arr = np.zeros((ny, nx + 1))
    fy_arr = np.zeros((ny + 1, nx))
    cdef double[:, ::1] fx = fx_arr
    cdef double[:, ::1] fy = fy_arr
    cdef Py_ssize_t i, j
    cdef double v, vp, vm
    with nogil:
        for j in range(ny):
            for i in range(1, nx):
                v = vx[j, i]
                vp = v if v > 0.0 else 0.0
                vm = v if v < 0.0 else 0.0
                fx[j, i] = vp * u[j, i - 1] + vm * u[j, i]
        for j in range(1, ny):
            for i in range(nx):
                v = vy[j, i]
                vp = v if v > 0.0 else 0.0
                vm = v if v < 0.0 else 0.0
                fy[j, i] = vp * u[j - 1, i] + vm * u[j, i]
        for j in range(ny):
            if lt[j] == 1:
                v = vx[j, 0]
                vp = v if v > 0.0 else 0.0
                fx[j, 0] = -(vp * u[j, 0])
            if rt[j] == 1:
                v = vx[j, nx]
                vp = v if v > 0.0 else 0.0
                fx[j, nx] = vp * u[j, nx - 1]
        for i in range(nx):
            if bt[i] == 1:
                v = vy[0, i]
                vp = v if v > 0.0 else 0.0
                fy[0, i] = -(vp * u[0, i])
            if tt[i] == 1:
                v = vy[ny, i]
                vp = v if v > 0.0 else 0.0
                fy[ny, i] = vp * u[ny - 1, i]
    return fx_arr, fy_arr


def upwind_divergence(double[:, ::1] u, double[:, ::1] vx, double[:, ::1] vy,
                      const unsigned char[::1] lt, const unsigned char[::1] rt,
                      const unsigned char[::1] bt, const unsigned char[::1] tt,
                      double hx, double hy):
    cdef Py_ssize_t ny = u.shape[0]
    cdef Py_ssize_t nx = u.shape[1]
    fx_arr, fy_arr = upwind_fluxes(u, vx, vy, lt, rt, bt, tt)
    cdef double[:, ::1] fx = fx_arr
    cdef double[:, ::1] fy = fy_arr
    div_arr = np.empty((ny, nx))
    cdef double[:, ::1] div = div_arr
    cdef double vol = hx * hy
    cdef Py_ssize_t i, j
    cdef double ax, ay
    with nogil:
        for j in range(ny):
            for i in range(nx):
                ax = (fx[j, i + 1] - fx[j, i]) * hy
                ay = (fy[j + 1, i] - fy[j, i]) * hx
                div[j, i] = (ax + ay) / vol
    return div_arr


cdef double _residual_one_phase(double[:, ::1] p, double[:, ::1] q,
                                double[:, ::1] diag, double offx, double offy) nogil:
    cdef Py_ssize_t ny = q.shape[0]
    cdef Py_ssize_t nx = q.shape[1]
    cdef Py_ssize_t i, j
    cdef double r, w, m, a, res = 0.0
    for j in range(ny):
        for i in range(nx):
            r = q[j, i]
            if i > 0:
                r -= offx * p[j, i - 1]
            if i < nx - 1:
                r -= offx * p[j, i + 1]
            if j > 0:
                r -= offy * p[j - 1, i]
            if j < ny - 1:
                r -= offy * p[j + 1, i]
            w = r + diag[j, i] * p[j, i]
            m = p[j, i] if p[j, i] < w else w
            a = -m if m < 0.0 else m
            if a > res:
                res = a
    return res


def pgs_one_phase(double[:, ::1] p, double[:, ::1] q, double[:, ::1] diag,
                  double offx, double offy, double tol, int max_sweeps):
    cdef Py_ssize_t ny = q.shape[0]
    cdef Py_ssize_t nx = q.shape[1]
    cdef Py_ssize_t i, j
    cdef int sweep = 0
    cdef double r, pk, res
    res = _residual_one_phase(p, q, diag, offx, offy)
    if res <= tol:
        return 0, res
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            for j in range(ny):
                for i in range(nx):
                    r = q[j, i]
                    if i > 0:
                        r -= offx * p[j, i - 1]
                    if i < nx - 1:
                        r -= offx * p[j, i + 1]
                    if j > 0:
                        r -= offy * p[j - 1, i]
                    if j < ny - 1:
                        r -= offy * p[j + 1, i]
                    pk = -r / diag[j, i]
                    p[j, i] = pk if pk > 0.0 else 0.0
            res = _residual_one_phase(p, q, diag, offx, offy)
            if res <= tol:
                break
    return (sweep if res <= tol else max_sweeps), res


cdef double _residual_two_phase(double[:, ::1] p, double[:, ::1] q,
                                double[:, ::1] diag, double offx, double offy) nogil:
    cdef Py_ssize_t ny = q.shape[0]
    cdef Py_ssize_t nx = q.shape[1]
    cdef Py_ssize_t i, j
    cdef double r, w, s, pp, pm, a, b, res = 0.0
    for j in range(ny):
        for i in range(nx):
            r = q[j, i]
            if i > 0:
                r -= offx * p[j, i - 1]
            if i < nx - 1:
                r -= offx * p[j, i + 1]
            if j > 0:
                r -= offy * p[j - 1, i]
            if j < ny - 1:
                r -= offy * p[j + 1, i]
            w = r + diag[j, i] * p[j, i]
            s = 2.0 - w
            pp = p[j, i] if p[j, i] > 0.0 else 0.0
            pm = -p[j, i] if p[j, i] < 0.0 else 0.0
            a = pp if pp < w else w
            a = -a if a < 0.0 else a
            b = pm if pm < s else s
            b = -b if b < 0.0 else b
            if a > res:
                res = a
            if b > res:
                res = b
    return res


def pgs_two_phase(double[:, ::1] p, double[:, ::1] q, double[:, ::1] diag,
                  double offx, double offy, double tol, int max_sweeps):
    cdef Py_ssize_t ny = q.shape[0]
    cdef Py_ssize_t nx = q.shape[1]
    cdef Py_ssize_t i, j
    cdef int sweep = 0
    cdef double r, res
    res = _residual_two_phase(p, q, diag, offx, offy)
    if res <= tol:
        return 0, res
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            for j in range(ny):
                for i in range(nx):
                    r = q[j, i]
                    if i > 0:
                        r -= offx * p[j, i - 1]
                    if i < nx - 1:
                        r -= offx * p[j, i + 1]
                    if j > 0:
                        r -= offy * p[j - 1, i]
                    if j < ny - 1:
                        r -= offy * p[j + 1, i]
                    if r < 0.0:
                        p[j, i] = -r / diag[j, i]
                    elif r > 2.0:
                        p[j, i] = (2.0 - r) / diag[j, i]
                    else:
                        p[j, i] = 0.0
            res = _residual_two_phase(p, q, diag, offx, offy)
            if res <= tol:
                break
    return (sweep if res <= tol else max_sweeps), res
