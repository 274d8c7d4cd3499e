"""Time stepping: splitting loop, fixed-point verification mode, envelopes.

The splitting order is fixed: explicit transport-reaction first, pressure
projection last, so the density ceiling holds at every reported time.  The
run is deterministic: an identical scenario on an identical build produces a
bitwise identical trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, StepSizeError
from .grid import Grid
from .pressure import projection_step_one_phase, projection_step_two_phase
from .reaction import FrozenSource, guard_density
from .scenario import RunSetup, Scenario, materialize
from .transport import (dirichlet_advective_outflux, stable_dt, upwind_divergence)

DIAG_COLUMNS = ("step", "t", "mass", "adv_outflux_D", "pressure_outflux_D",
                "reaction_integral", "p_max", "comp_residual", "pressure_energy")


@dataclass
class SolverState:
    t: float
    u: np.ndarray
    p: np.ndarray
    step: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots plus a per-step diagnostics ledger."""

    scenario: Scenario
    grid: Grid
    term: object
    face_velocity: object
    div_v: np.ndarray
    dt: float
    times: np.ndarray            # snapshot times, strictly increasing
    u: np.ndarray                # (n_snapshots, ny, nx)
    p: np.ndarray
    diagnostics: dict            # column -> (n_steps,) array, see DIAG_COLUMNS
    step_max_u: np.ndarray
    step_min_u: np.ndarray
    step_times: Optional[np.ndarray] = None   # (n_steps + 1,) when recorded
    u_steps: Optional[np.ndarray] = None      # (n_steps + 1, ny, nx) when recorded

    @property
    def n_steps(self) -> int:
        return len(self.diagnostics.get("step", ()))

    def state(self, k: int) -> SolverState:
        """Solver state at snapshot k."""
        return SolverState(t=float(self.times[k]), u=self.u[k], p=self.p[k],
                           step=int(k * (self.n_steps // max(len(self.times) - 1, 1))))

    def l1_norm(self, cellfield: np.ndarray) -> float:
        return float(np.sum(np.abs(cellfield))) * self.grid.vol

    def total_pressure_energy(self) -> float:
        return float(np.sum(self.diagnostics["pressure_energy"]))


def resolve_dt(scenario: Scenario, stable_bound: float):
    """dt and step counts: dt = min(stable bound, snapshot interval), with an
    integer number of steps per snapshot interval so snapshot times are hit
    exactly.  A fixed dt policy must respect the stability bound."""
    if scenario.horizon == 0.0:
        return 0.0, 0, 0
    interval = scenario.horizon / (scenario.snapshots - 1)
    if isinstance(scenario.dt_policy, str):
        target = min(stable_bound, interval)
    else:
        target = float(scenario.dt_policy)
        if target > stable_bound * (1.0 + 1e-12):
            raise StepSizeError(
                f"fixed dt={target!r} exceeds the monotonicity bound {stable_bound!r}")
        target = min(target, interval)
    per_interval = max(1, int(math.ceil(interval / target - 1e-12)))
    dt = interval / per_interval
    return dt, per_interval, per_interval * (scenario.snapshots - 1)


def run(scenario: Scenario, *, pressure_enabled: bool = True, record_steps: bool = False,
        dt_override: float = None, setup: RunSetup = None) -> Trajectory:
    """Simulate a scenario: explicit step then projection, every step.

    ``pressure_enabled=False`` skips the projection (pure transport mode;
    only meaningful under the congestion-avoidance conditions).
    ``dt_override`` forces the step size (it must satisfy the bound), which
    keeps step grids aligned across fixed-point iterates.
    """
    if setup is None:
        setup = materialize(scenario)
    grid = setup.grid
    term = setup.term
    bound = stable_dt(grid, setup.face_velocity, term.lipschitz, setup.div_v,
                      horizon=scenario.horizon)
    if dt_override is not None:
        if dt_override > bound * (1.0 + 1e-12):
            raise StepSizeError(f"dt override {dt_override!r} exceeds bound {bound!r}")
        interval = scenario.horizon / (scenario.snapshots - 1) if scenario.horizon else 0.0
        per_interval = max(1, round(interval / dt_override)) if interval else 0
        if interval and abs(per_interval * dt_override - interval) > 1e-9 * max(interval, 1.0):
            raise ConfigurationError("dt override must divide the snapshot interval")
        dt = dt_override
        n_steps = per_interval * (scenario.snapshots - 1)
    else:
        dt, per_interval, n_steps = resolve_dt(scenario, bound)

    xc, yc = grid.cell_centers()
    slack = max(1e-12, 10.0 * scenario.lcp_tol)
    u = setup.u0.copy()
    p = np.zeros_like(u)
    guard_density(u, scenario.mode, slack)

    snap_times = [0.0]
    snaps_u = [u.copy()]
    snaps_p = [p.copy()]
    diag = {name: [] for name in DIAG_COLUMNS}
    step_max = np.empty(n_steps)
    step_min = np.empty(n_steps)
    rec_times = [0.0] if record_steps else None
    rec_u = [u.copy()] if record_steps else None

    project = (projection_step_one_phase if scenario.mode == "one_phase"
               else projection_step_two_phase)
    vol = grid.vol

    for k in range(n_steps):
        t = k * dt
        guard_density(u, scenario.mode, slack)
        g = term.rate(t, xc, yc, u)
        div = upwind_divergence(grid, setup.face_velocity, u)
        u_star = (u - dt * div) + dt * g
        adv_out = dirichlet_advective_outflux(grid, setup.face_velocity, u)
        reaction_integral = float(np.sum(g)) * vol
        if pressure_enabled:
            u, p, info = project(u_star, dt, grid, setup.laplacian,
                                 tol=scenario.lcp_tol, max_sweeps=setup.max_sweeps,
                                 p_start=p)
            press_out = info.dirichlet_pressure_flux
            comp_res = info.comp_residual
        else:
            u, p = u_star, np.zeros_like(u_star)
            press_out = 0.0
            comp_res = 0.0
        t_next = (k + 1) * dt
        step_max[k] = u.max()
        step_min[k] = u.min()
        diag["step"].append(k + 1)
        diag["t"].append(t_next)
        diag["mass"].append(float(np.sum(u)) * vol)
        diag["adv_outflux_D"].append(adv_out)
        diag["pressure_outflux_D"].append(press_out)
        diag["reaction_integral"].append(reaction_integral)
        diag["p_max"].append(float(np.max(np.abs(p))))
        diag["comp_residual"].append(comp_res)
        diag["pressure_energy"].append(dt * setup.laplacian.gradient_energy(p) / 3.0)
        if record_steps:
            rec_times.append(t_next)
            rec_u.append(u.copy())
        if per_interval and (k + 1) % per_interval == 0:
            snap_times.append(t_next)
            snaps_u.append(u.copy())
            snaps_p.append(p.copy())

    return Trajectory(
        scenario=scenario, grid=grid, term=term, face_velocity=setup.face_velocity,
        div_v=setup.div_v, dt=dt,
        times=np.asarray(snap_times), u=np.stack(snaps_u), p=np.stack(snaps_p),
        diagnostics={name: np.asarray(vals) for name, vals in diag.items()},
        step_max_u=step_max, step_min_u=step_min,
        step_times=np.asarray(rec_times) if record_steps else None,
        u_steps=np.stack(rec_u) if record_steps else None,
    )


def picard_global(scenario: Scenario, n_iters: int):
    """Global fixed-point verification: iterate n solves the full horizon
    with the reaction source frozen at iterate n-1.

    Iterate 0 is the reaction-free solve.  Returns the final trajectory and
    the sup-in-time L1 gaps d_n = max_t ||u_n(t) - u_{n-1}(t)||_1 for
    n = 1..n_iters.
    """
    if n_iters < 2:
        raise ConfigurationError("fixed-point verification needs n_iters >= 2")
    setup = materialize(scenario)
    term = setup.term
    bound = stable_dt(setup.grid, setup.face_velocity, term.lipschitz, setup.div_v,
                      horizon=scenario.horizon)
    dt, _, _ = resolve_dt(scenario, bound)
    xc, yc = setup.grid.cell_centers()

    def frozen_from(history_times, history_u):
        tables = np.stack([
            term.rate(float(history_times[k]), xc, yc, history_u[k])
            for k in range(len(history_times) - 1)
        ])
        return FrozenSource(times=history_times[:-1].copy(), tables=tables)

    zero_scn = _with_term(scenario, {"kind": "zero"})
    traj = run(zero_scn, record_steps=True, dt_override=dt)
    gaps = []
    for _ in range(n_iters):
        source = frozen_from(traj.step_times, traj.u_steps)
        setup_n = RunSetup(scenario=scenario, grid=setup.grid,
                           face_velocity=setup.face_velocity, div_v=setup.div_v,
                           term=source, u0=setup.u0, laplacian=setup.laplacian,
                           admissibility=setup.admissibility)
        nxt = run(scenario, record_steps=True, dt_override=dt, setup=setup_n)
        gap = float(np.max(np.sum(np.abs(nxt.u_steps - traj.u_steps), axis=(1, 2)))
                    * setup.grid.vol)
        gaps.append(gap)
        traj = nxt
    return traj, gaps


def _with_term(scenario: Scenario, reaction_cfg: dict) -> Scenario:
    return replace(scenario, reaction=dict(reaction_cfg))


@dataclass(frozen=True, eq=False)
class Envelope:
    """Spatially uniform sub/supersolution pair and the congestion horizon."""

    times: np.ndarray
    lower: np.ndarray     # subsolution samples
    upper: np.ndarray     # supersolution samples
    tau_c: float


def integrate_envelope(grid: Grid, div_v: np.ndarray, term, upper0: float, lower0: float,
                       horizon: float, dt_ode: float) -> Envelope:
    """Integrate the tight uniform envelopes with classical RK4.

    upper' = max over cells of (g(t, x, upper) - upper div V),
    lower' = min over cells of (g(t, x, lower) - lower div V).
    tau_c is the first time the pair leaves -1 <= lower <= upper <= 1
    (bisected between samples to dt_ode / 1024), else the horizon.
    """
    if not (-1.0 <= lower0 <= upper0 <= 1.0):
        raise ConfigurationError("envelope start values must satisfy -1 <= lower0 <= upper0 <= 1")
    xc, yc = grid.cell_centers()

    def rhs(t, w, reduce_fn):
        r = np.clip(np.full_like(div_v, w), -1.0, 1.0)
        values = term.rate(t, xc, yc, r) - w * div_v
        out = float(reduce_fn(values))
        if not np.isfinite(out):
            raise ConfigurationError(f"envelope ODE right-hand side non-finite at t={t}")
        return out

    def rk4_step(t, state, h):
        w1, w2 = state
        k1 = (rhs(t, w1, np.min), rhs(t, w2, np.max))
        k2 = (rhs(t + 0.5 * h, w1 + 0.5 * h * k1[0], np.min),
              rhs(t + 0.5 * h, w2 + 0.5 * h * k1[1], np.max))
        k3 = (rhs(t + 0.5 * h, w1 + 0.5 * h * k2[0], np.min),
              rhs(t + 0.5 * h, w2 + 0.5 * h * k2[1], np.max))
        k4 = (rhs(t + h, w1 + h * k3[0], np.min), rhs(t + h, w2 + h * k3[1], np.max))
        return (w1 + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                w2 + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]))

    def violated(state):
        w1, w2 = state
        return (w2 > 1.0 + 1e-9) or (w1 < -1.0 - 1e-9) or (w1 > w2 + 1e-9)

    n = max(1, int(math.ceil(horizon / dt_ode - 1e-12)))
    h = horizon / n
    times = [0.0]
    lows = [lower0]
    ups = [upper0]
    state = (lower0, upper0)
    tau_c = horizon
    for k in range(n):
        t = k * h
        nxt = rk4_step(t, state, h)
        if violated(nxt):
            lo_frac, hi_frac = 0.0, 1.0
            for _ in range(10):   # bisect to h / 1024
                mid = 0.5 * (lo_frac + hi_frac)
                probe = rk4_step(t, state, mid * h)
                if violated(probe):
                    hi_frac = mid
                else:
                    lo_frac = mid
            tau_c = t + lo_frac * h
            state = rk4_step(t, state, lo_frac * h) if lo_frac > 0 else state
            times.append(tau_c)
            lows.append(state[0])
            ups.append(state[1])
            break
        state = nxt
        times.append(t + h)
        lows.append(state[0])
        ups.append(state[1])
    return Envelope(times=np.asarray(times), lower=np.asarray(lows),
                    upper=np.asarray(ups), tau_c=float(tau_c))


@dataclass(frozen=True)
class EnvelopeReport:
    max_upper_excess: float    # max (u - min(1, upper))+
    max_lower_excess: float    # max (max(-1, lower) - u)+
    allowance: float

    @property
    def passed(self) -> bool:
        return (self.max_upper_excess <= self.allowance
                and self.max_lower_excess <= self.allowance)


def verify_envelope_bound(trajectory: Trajectory, envelope: Envelope,
                          allowance: float) -> EnvelopeReport:
    """Check u <= min(1, upper) and max(-1, lower) <= u on snapshots up to tau_c."""
    upper_excess = 0.0
    lower_excess = 0.0
    for k, t in enumerate(trajectory.times):
        if t > envelope.tau_c + 1e-12:
            break
        w2 = float(np.interp(t, envelope.times, envelope.upper))
        w1 = float(np.interp(t, envelope.times, envelope.lower))
        u = trajectory.u[k]
        upper_excess = max(upper_excess, float(np.max(u - min(1.0, w2))))
        lower_excess = max(lower_excess, float(np.max(max(-1.0, w1) - u)))
    return EnvelopeReport(max_upper_excess=max(upper_excess, 0.0),
                          max_lower_excess=max(lower_excess, 0.0),
                          allowance=allowance)
