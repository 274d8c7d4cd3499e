"""Explicit upwind finite-volume transport with reaction source.

First-order upwinding only: the monotonicity of the update map under the
time-step bound below is what carries the comparison principle, and that is
the property the tests certify.  For dt <= stable_dt the map
u -> u - dt div(uV) + dt g(., u) is order-preserving and the mass ledger
closes against the Dirichlet boundary flux.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import StepSizeError
from .fields import FaceField, divergence_of_velocity
from .grid import DIRICHLET, Grid
from .reaction import guard_density

SAFETY = 0.9


def upwind_divergence(grid: Grid, face_velocity: FaceField, u: np.ndarray) -> np.ndarray:
    """Per-cell divergence of the upwind advective flux of u."""
    return kernels.upwind_divergence(
        np.ascontiguousarray(u, dtype=float),
        np.ascontiguousarray(face_velocity.x, dtype=float),
        np.ascontiguousarray(face_velocity.y, dtype=float),
        grid.left, grid.right, grid.bottom, grid.top,
        grid.hx, grid.hy,
    )


def cell_outflow_rates(grid: Grid, face_velocity: FaceField) -> np.ndarray:
    """Per-cell sum of positive outward normal velocities times face areas,
    divided by the cell volume.  Neumann faces carry no flux."""
    ny, nx = grid.ny, grid.nx
    vx, vy = face_velocity.x, face_velocity.y
    out = np.zeros((ny, nx))
    if nx > 1:
        v = vx[:, 1:nx]
        out[:, :-1] += np.maximum(v, 0.0) * grid.hy      # east outflow of left cell
        out[:, 1:] += np.maximum(-v, 0.0) * grid.hy      # west outflow of right cell
    if ny > 1:
        v = vy[1:ny, :]
        out[:-1, :] += np.maximum(v, 0.0) * grid.hx
        out[1:, :] += np.maximum(-v, 0.0) * grid.hx
    out[:, 0] += np.where(grid.left == DIRICHLET, np.maximum(vx[:, 0], 0.0), 0.0) * grid.hy
    out[:, -1] += np.where(grid.right == DIRICHLET, np.maximum(vx[:, -1], 0.0), 0.0) * grid.hy
    out[0, :] += np.where(grid.bottom == DIRICHLET, np.maximum(vy[0, :], 0.0), 0.0) * grid.hx
    out[-1, :] += np.where(grid.top == DIRICHLET, np.maximum(vy[-1, :], 0.0), 0.0) * grid.hx
    return out / grid.vol


def stable_dt(grid: Grid, face_velocity: FaceField, lipschitz: float,
              div_v: np.ndarray, horizon: float = None) -> float:
    """Largest dt keeping the explicit update order-preserving (with safety 0.9).

    With a zero denominator there is no restriction and the scenario horizon
    (if given) is returned.
    """
    outflow = float(cell_outflow_rates(grid, face_velocity).max())
    denom = outflow + float(lipschitz) + float(np.max(np.abs(div_v)))
    if denom == 0.0:
        return float(horizon) if horizon is not None else np.inf
    return SAFETY / denom


def dirichlet_advective_outflux(grid: Grid, face_velocity: FaceField, u: np.ndarray) -> float:
    """Sum of upwind fluxes through the Dirichlet boundary (times face areas)."""
    vx, vy = face_velocity.x, face_velocity.y
    total = float(np.sum(np.where(grid.left == DIRICHLET,
                                  np.maximum(vx[:, 0], 0.0) * u[:, 0], 0.0)) * grid.hy)
    total += float(np.sum(np.where(grid.right == DIRICHLET,
                                   np.maximum(vx[:, -1], 0.0) * u[:, -1], 0.0)) * grid.hy)
    total += float(np.sum(np.where(grid.bottom == DIRICHLET,
                                   np.maximum(vy[0, :], 0.0) * u[0, :], 0.0)) * grid.hx)
    total += float(np.sum(np.where(grid.top == DIRICHLET,
                                   np.maximum(vy[-1, :], 0.0) * u[-1, :], 0.0)) * grid.hx)
    return total


def explicit_step(u: np.ndarray, dt: float, grid: Grid, face_velocity: FaceField,
                  term, t: float, *, stable_bound: float = None, mode: str = "one_phase",
                  slack: float = 1e-12) -> np.ndarray:
    """One transport-reaction step: u* = u - dt div(uV) + dt g(t, ., u).

    Raises StepSizeError when dt exceeds the monotonicity bound.  u* may
    exceed the density ceiling (the pressure projection handles that).
    """
    if stable_bound is None:
        div_v = divergence_of_velocity(grid, face_velocity)
        stable_bound = stable_dt(grid, face_velocity, term.lipschitz, div_v)
    if dt > stable_bound * (1.0 + 1e-12):
        raise StepSizeError(f"dt={dt!r} exceeds the monotonicity bound {stable_bound!r}")
    guard_density(u, mode, slack)
    xc, yc = grid.cell_centers()
    g = term.rate(t, xc, yc, u)
    div = upwind_divergence(grid, face_velocity, u)
    return (u - dt * div) + dt * g
