"""Density-ceiling enforcement via a linear complementarity problem.

After each explicit step the pressure p solves

    p >= 0,   w = (1 - u*) + dt A p >= 0,   p . w = 0     (one phase)

with A the 5-point mixed-boundary Laplacian (ghost reflection p_ghost = -p
across Dirichlet faces, p_ghost = p across Neumann faces).  A is a symmetric
M-matrix, positive definite whenever the Dirichlet boundary is nonempty, so
the problem has a unique solution and the projection preserves ordering.
The required solver is projected Gauss-Seidel with a deterministic row-major
forward sweep; an active-set enumeration oracle provides the independent
cross-check on small problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .errors import ConfigurationError, ConvergenceError
from .grid import DIRICHLET, Grid


@dataclass(frozen=True, eq=False)
class LaplacianOperator:
    """5-point -Laplacian with mixed ghost closure, stored as a stencil."""

    grid: Grid
    diag: np.ndarray      # (ny, nx)
    invhx2: float
    invhy2: float

    def apply(self, p: np.ndarray) -> np.ndarray:
        out = self.diag * p
        out[:, 1:] -= self.invhx2 * p[:, :-1]
        out[:, :-1] -= self.invhx2 * p[:, 1:]
        out[1:, :] -= self.invhy2 * p[:-1, :]
        out[:-1, :] -= self.invhy2 * p[1:, :]
        return out

    def dense(self) -> np.ndarray:
        grid = self.grid
        n = grid.ncells
        mat = np.zeros((n, n))
        for j in range(grid.ny):
            for i in range(grid.nx):
                k = grid.cell_id(i, j)
                mat[k, k] = self.diag[j, i]
                if i > 0:
                    mat[k, k - 1] = -self.invhx2
                if i < grid.nx - 1:
                    mat[k, k + 1] = -self.invhx2
                if j > 0:
                    mat[k, k - grid.nx] = -self.invhy2
                if j < grid.ny - 1:
                    mat[k, k + grid.nx] = -self.invhy2
        return mat

    def dirichlet_boundary_flux(self, p: np.ndarray) -> float:
        """Sum over Dirichlet faces of the outward pressure flux 2 p_K A_f / h."""
        grid = self.grid
        total = float(np.sum(np.where(grid.left == DIRICHLET, p[:, 0], 0.0))
                      * 2.0 * grid.hy / grid.hx)
        total += float(np.sum(np.where(grid.right == DIRICHLET, p[:, -1], 0.0))
                       * 2.0 * grid.hy / grid.hx)
        total += float(np.sum(np.where(grid.bottom == DIRICHLET, p[0, :], 0.0))
                       * 2.0 * grid.hx / grid.hy)
        total += float(np.sum(np.where(grid.top == DIRICHLET, p[-1, :], 0.0))
                       * 2.0 * grid.hx / grid.hy)
        return total

    def gradient_energy(self, p: np.ndarray) -> float:
        """Sum over faces of |grad_h p|^2 A_f h_f (Dirichlet ghost = -p)."""
        grid = self.grid
        ax = grid.hy * grid.hx
        gx = (p[:, 1:] - p[:, :-1]) / grid.hx
        gy = (p[1:, :] - p[:-1, :]) / grid.hy
        total = float(np.sum(gx * gx)) * ax + float(np.sum(gy * gy)) * ax
        gl = np.where(grid.left == DIRICHLET, -2.0 * p[:, 0] / grid.hx, 0.0)
        gr = np.where(grid.right == DIRICHLET, -2.0 * p[:, -1] / grid.hx, 0.0)
        gb = np.where(grid.bottom == DIRICHLET, -2.0 * p[0, :] / grid.hy, 0.0)
        gt = np.where(grid.top == DIRICHLET, -2.0 * p[-1, :] / grid.hy, 0.0)
        total += (float(np.sum(gl * gl)) + float(np.sum(gr * gr))) * ax
        total += (float(np.sum(gb * gb)) + float(np.sum(gt * gt))) * ax
        return total


def assemble_laplacian(grid: Grid) -> LaplacianOperator:
    invhx2 = 1.0 / (grid.hx * grid.hx)
    invhy2 = 1.0 / (grid.hy * grid.hy)
    diag = np.zeros((grid.ny, grid.nx))
    diag[:, 1:] += invhx2
    diag[:, :-1] += invhx2
    diag[1:, :] += invhy2
    diag[:-1, :] += invhy2
    diag[:, 0] += np.where(grid.left == DIRICHLET, 2.0 * invhx2, 0.0)
    diag[:, -1] += np.where(grid.right == DIRICHLET, 2.0 * invhx2, 0.0)
    diag[0, :] += np.where(grid.bottom == DIRICHLET, 2.0 * invhy2, 0.0)
    diag[-1, :] += np.where(grid.top == DIRICHLET, 2.0 * invhy2, 0.0)
    return LaplacianOperator(grid=grid, diag=diag, invhx2=invhx2, invhy2=invhy2)


def default_max_sweeps(ncells: int) -> int:
    return 10 * ncells + 1000


@dataclass(frozen=True, eq=False)
class LcpProblem:
    """Find p >= 0 with q + dt A p >= 0 and componentwise complementarity."""

    operator: LaplacianOperator
    dt: float
    q: np.ndarray         # (ny, nx); one phase: q = 1 - u*

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError("LCP needs dt > 0")

    @property
    def grid(self) -> Grid:
        return self.operator.grid

    def m_dense(self) -> np.ndarray:
        return self.dt * self.operator.dense()


def _solve_pgs(problem: LcpProblem, tol, max_sweeps, p_start, two_phase: bool):
    grid = problem.grid
    if max_sweeps is None:
        max_sweeps = default_max_sweeps(grid.ncells)
    if p_start is None:
        p = np.zeros((grid.ny, grid.nx))
    elif two_phase:
        p = np.asarray(p_start, dtype=float).copy()
    else:
        p = np.maximum(np.asarray(p_start, dtype=float), 0.0)
    q = np.ascontiguousarray(problem.q, dtype=float)
    diag = np.ascontiguousarray(problem.dt * problem.operator.diag)
    offx = problem.dt * problem.operator.invhx2
    offy = problem.dt * problem.operator.invhy2
    kernel = kernels.pgs_two_phase if two_phase else kernels.pgs_one_phase
    sweeps, res = kernel(p, q, diag, offx, offy, tol, int(max_sweeps))
    if res > tol:
        raise ConvergenceError(
            f"projected Gauss-Seidel stalled at residual {res:.3e} after {sweeps} sweeps",
            residual=res, sweeps=sweeps,
        )
    return p, sweeps, res


def lcp_solve_pgs(problem: LcpProblem, tol: float = 1e-10, max_sweeps: int = None,
                  p_start: np.ndarray = None) -> np.ndarray:
    """Projected Gauss-Seidel solve; raises ConvergenceError on sweep exhaustion."""
    p, _, _ = _solve_pgs(problem, tol, max_sweeps, p_start, two_phase=False)
    return p


def lcp_solve_pgs_two_phase(problem: LcpProblem, tol: float = 1e-10, max_sweeps: int = None,
                            p_start: np.ndarray = None) -> np.ndarray:
    p, _, _ = _solve_pgs(problem, tol, max_sweeps, p_start, two_phase=True)
    return p


ORACLE_CELL_CAP = 20


def lcp_oracle_enumerate(problem: LcpProblem) -> np.ndarray:
    """Exact solve by enumeration of active sets (test oracle, <= 20 cells).

    The M-matrix property makes the solution unique, so the first feasible
    active set is the answer.  Sets are visited in order of Hamming distance
    from the heuristic guess {q < 0}, which only affects speed.
    """
    n = problem.grid.ncells
    if n > ORACLE_CELL_CAP:
        raise ConfigurationError(f"enumeration oracle capped at {ORACLE_CELL_CAP} cells, got {n}")
    m = problem.m_dense()
    q = np.asarray(problem.q, dtype=float).ravel()
    guess = frozenset(int(k) for k in np.nonzero(q < 0.0)[0])
    all_cells = list(range(n))
    feas_tol = 1e-11
    for dist in range(n + 1):
        for flips in combinations(all_cells, dist):
            active = sorted(guess.symmetric_difference(flips))
            p = np.zeros(n)
            if active:
                sub = m[np.ix_(active, active)]
                try:
                    p_act = np.linalg.solve(sub, -q[active])
                except np.linalg.LinAlgError:
                    continue
                if (p_act < -feas_tol).any():
                    continue
                p[active] = np.maximum(p_act, 0.0)
            w = q + m @ p
            if (w < -feas_tol).any():
                continue
            return p.reshape(problem.grid.ny, problem.grid.nx)
    raise ConvergenceError("active-set enumeration found no feasible set")  # unreachable


@dataclass(frozen=True)
class ProjectionInfo:
    sweeps: int
    residual: float
    comp_residual: float
    dirichlet_pressure_flux: float


def projection_step_one_phase(u_star: np.ndarray, dt: float, grid: Grid,
                              laplacian: LaplacianOperator, tol: float = 1e-10,
                              max_sweeps: int = None, p_start: np.ndarray = None):
    """Project u* below the ceiling: u_next = u* - dt A p with the LCP pressure.

    Returns (u_next, p, info); the Dirichlet pressure flux in ``info`` closes
    the mass ledger: sum |K| u_next = sum |K| u* - dt * flux.
    """
    q = 1.0 - u_star
    if float(q.min()) >= 0.0:
        p = np.zeros_like(u_star)
        return u_star.copy(), p, ProjectionInfo(0, 0.0, 0.0, 0.0)
    problem = LcpProblem(operator=laplacian, dt=dt, q=q)
    p, sweeps, res = _solve_pgs(problem, tol, max_sweeps, p_start, two_phase=False)
    u_next = u_star - dt * laplacian.apply(p)
    comp = float(np.max(np.abs(p * (1.0 - u_next))))
    flux = laplacian.dirichlet_boundary_flux(p)
    return u_next, p, ProjectionInfo(sweeps, res, comp, flux)


def projection_step_two_phase(u_star: np.ndarray, dt: float, grid: Grid,
                              laplacian: LaplacianOperator, tol: float = 1e-10,
                              max_sweeps: int = None, p_start: np.ndarray = None):
    """Bilateral projection: -1 <= u_next <= 1 with signed pressure,
    p+ . (1 - u_next) = 0 and p- . (1 + u_next) = 0."""
    q = 1.0 - u_star
    if float(q.min()) >= 0.0 and float(q.max()) <= 2.0:
        p = np.zeros_like(u_star)
        return u_star.copy(), p, ProjectionInfo(0, 0.0, 0.0, 0.0)
    problem = LcpProblem(operator=laplacian, dt=dt, q=q)
    p, sweeps, res = _solve_pgs(problem, tol, max_sweeps, p_start, two_phase=True)
    u_next = u_star - dt * laplacian.apply(p)
    comp = float(max(
        np.max(np.abs(np.maximum(p, 0.0) * (1.0 - u_next))),
        np.max(np.abs(np.maximum(-p, 0.0) * (1.0 + u_next))),
    ))
    flux = laplacian.dirichlet_boundary_flux(p)
    return u_next, p, ProjectionInfo(sweeps, res, comp, flux)
