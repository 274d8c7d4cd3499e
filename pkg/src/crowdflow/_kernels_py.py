"""Pure-Python reference kernels.

Same contracts and floating-point operation order as the compiled module
(``crowdflow._kernels``), so both backends produce equal results.  The
projected Gauss-Seidel sweeps are plain Python loops here and are orders of
magnitude slower; this module exists as the always-available fallback and as
the reference the compiled kernels are checked against.

Face-value convention (see ``crowdflow.grid``): ``vx[:, 0]`` and ``vy[0, :]``
hold outward-normal components; every other face is oriented along +x / +y.
"""

import numpy as np


def upwind_fluxes(u, vx, vy, lt, rt, bt, tt):
    """Per-face advective fluxes (area not included), oriented +x / +y.

    Upwind value is taken from the cell the flow leaves; Neumann boundary
    faces carry zero flux; Dirichlet boundary faces use the interior cell on
    outflow and a zero ghost value on inflow.
    """
    ny, nx = u.shape
    fx = np.zeros((ny, nx + 1))
    fy = np.zeros((ny + 1, nx))
    if nx > 1:
        v = vx[:, 1:nx]
        fx[:, 1:nx] = np.maximum(v, 0.0) * u[:, : nx - 1] + np.minimum(v, 0.0) * u[:, 1:]
    if ny > 1:
        v = vy[1:ny, :]
        fy[1:ny, :] = np.maximum(v, 0.0) * u[: ny - 1, :] + np.minimum(v, 0.0) * u[1:, :]
    # boundary columns/rows: stored values are outward; +x/+y flux flips sign
    # on the left/bottom.  Outflow only (inflow ghost value is 0).
    fx[:, 0] = np.where(lt == 1, -(np.maximum(vx[:, 0], 0.0) * u[:, 0]), 0.0)
    fx[:, nx] = np.where(rt == 1, np.maximum(vx[:, nx], 0.0) * u[:, nx - 1], 0.0)
    fy[0, :] = np.where(bt == 1, -(np.maximum(vy[0, :], 0.0) * u[0, :]), 0.0)
    fy[ny, :] = np.where(tt == 1, np.maximum(vy[ny, :], 0.0) * u[ny - 1, :], 0.0)
    return fx, fy


def upwind_divergence(u, vx, vy, lt, rt, bt, tt, hx, hy):
    """Discrete divergence of the upwind flux, one value per cell."""
    fx, fy = upwind_fluxes(u, vx, vy, lt, rt, bt, tt)
    vol = hx * hy
    ax = (fx[:, 1:] - fx[:, :-1]) * hy
    ay = (fy[1:, :] - fy[:-1, :]) * hx
    return (ax + ay) / vol


def pgs_one_phase(p, q, diag, offx, offy, tol, max_sweeps):
    """Projected Gauss-Seidel for  w = q + M p >= 0, p >= 0, p.w = 0.

    M has diagonal ``diag`` and off-diagonal entries -offx / -offy to the
    x / y neighbors.  Sweep order is row-major forward (mandated; results
    must be deterministic).  ``p`` is updated in place (warm starts allowed).
    Returns (sweeps_used, residual) with residual = max |min(p, w)|.
    """
    ny, nx = q.shape
    res = _residual_one_phase(p, q, diag, offx, offy)
    if res <= tol:
        return 0, res
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
            return sweep, res
    return max_sweeps, res


def _residual_one_phase(p, q, diag, offx, offy):
    ny, nx = q.shape
    res = 0.0
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


def pgs_two_phase(p, q, diag, offx, offy, tol, max_sweeps):
    """Projected Gauss-Seidel for the bilateral (signed pressure) problem.

    Pointwise inversion of the sign graph: with r the off-diagonal residue,
    r < 0 activates the upper constraint (p > 0, w = 0), r > 2 the lower one
    (p < 0, w = 2, i.e. u = -1), otherwise p = 0.  Residual is
    max(|min(p+, w)|, |min(p-, s)|) with w = q + M p and s = 2 - w.
    """
    ny, nx = q.shape
    res = _residual_two_phase(p, q, diag, offx, offy)
    if res <= tol:
        return 0, res
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
            return sweep, res
    return max_sweeps, res


def _residual_two_phase(p, q, diag, offx, offy):
    ny, nx = q.shape
    res = 0.0
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
