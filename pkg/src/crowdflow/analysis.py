"""Cross-run verifiers: contraction, comparison, equilibrium ordering,
continuous dependence, and the per-step mass ledger."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .fields import FaceField, divergence_of_velocity
from .reaction import FrozenSource, cellwise
from .scenario import materialize
from .stepper import Trajectory, run


@dataclass(frozen=True)
class LedgerReport:
    max_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol


def check_mass_ledger(traj: Trajectory, tol_per_cell: float = 1e-12) -> LedgerReport:
    """Per step: mass change = dt (reaction integral - advective outflux -
    pressure outflux), closing to tol_per_cell * ncells."""
    d = traj.diagnostics
    mass0 = float(np.sum(traj.u[0])) * traj.grid.vol
    mass = np.concatenate([[mass0], d["mass"]])
    change = np.diff(mass)
    predicted = traj.dt * (d["reaction_integral"] - d["adv_outflux_D"] - d["pressure_outflux_D"])
    defect = float(np.max(np.abs(change - predicted))) if len(change) else 0.0
    return LedgerReport(max_defect=defect, tol=tol_per_cell * traj.grid.ncells)


def _require_matching(traj1: Trajectory, traj2: Trajectory):
    g1, g2 = traj1.grid, traj2.grid
    if (g1.nx, g1.ny, g1.hx, g1.hy) != (g2.nx, g2.ny, g2.hx, g2.hy):
        raise ConfigurationError("trajectories live on different grids")
    if traj1.n_steps != traj2.n_steps or abs(traj1.dt - traj2.dt) > 1e-15:
        raise ConfigurationError("trajectories have different step sequences")


@dataclass(frozen=True)
class ContractionReport:
    times: np.ndarray
    distances: np.ndarray        # ||u1 - u2||_1 per snapshot
    envelopes: np.ndarray        # Gronwall bound e^{R t} d(0)
    slack: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.distances <= self.envelopes * (1.0 + self.slack)))


def compare_runs(traj1: Trajectory, traj2: Trajectory, r_bound: float,
                 slack: float = 5e-3) -> ContractionReport:
    """L1 distance per snapshot against the Gronwall envelope e^{R t} d(0)."""
    _require_matching(traj1, traj2)
    vol = traj1.grid.vol
    dist = np.sum(np.abs(traj1.u - traj2.u), axis=(1, 2)) * vol
    env = dist[0] * np.exp(float(r_bound) * traj1.times)
    return ContractionReport(times=traj1.times.copy(), distances=dist,
                             envelopes=env, slack=slack)


@dataclass(frozen=True)
class OrderReport:
    applicable: bool
    reason: str
    max_violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.applicable and self.max_violation <= self.tol


def _terms_equal(t1, t2) -> bool:
    if type(t1) is not type(t2):
        return False
    fields1 = getattr(t1, "__dataclass_fields__", None)
    if fields1 is None:
        return t1 == t2
    for name in fields1:
        a, b = getattr(t1, name), getattr(t2, name)
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                return False
        elif hasattr(a, "__dataclass_fields__"):
            if not _terms_equal(a, b):
                return False
        elif a != b:
            return False
    return True


def _ordered_sources(term1, term2) -> Optional[str]:
    """None when the pair qualifies for the comparison principle, else why not."""
    if term1 is term2:
        return None
    if isinstance(term1, FrozenSource) and isinstance(term2, FrozenSource):
        if term1.tables.shape != term2.tables.shape:
            return "frozen sources have different shapes"
        if (term1.tables <= term2.tables + 1e-15).all():
            return None
        return "frozen sources are not ordered f1 <= f2"
    if isinstance(term1, FrozenSource) or isinstance(term2, FrozenSource):
        return "only one run uses a frozen source"
    if _terms_equal(term1, term2):
        return None
    return "runs use different reaction terms and sources are not frozen ordered"


def check_order(traj1: Trajectory, traj2: Trajectory, tol: float = 1e-9) -> OrderReport:
    """Discrete comparison principle: ordered data give ordered solutions.

    Preconditions: u1(0) <= u2(0), and either ordered frozen sources or the
    same reaction term.  Checked over the full step history when recorded,
    snapshots otherwise; violations above tol mean a scheme bug.
    """
    _require_matching(traj1, traj2)
    u1_0 = traj1.u_steps[0] if traj1.u_steps is not None else traj1.u[0]
    u2_0 = traj2.u_steps[0] if traj2.u_steps is not None else traj2.u[0]
    if (u1_0 > u2_0 + 1e-15).any():
        worst = float(np.max(u1_0 - u2_0))
        return OrderReport(False, f"initial data not ordered: max(u1-u2)(0) = {worst:.3e}",
                           worst, tol)
    reason = _ordered_sources(traj1.term, traj2.term)
    if reason is not None:
        return OrderReport(False, reason, np.inf, tol)
    if traj1.u_steps is not None and traj2.u_steps is not None:
        viol = float(np.max(traj1.u_steps - traj2.u_steps))
    else:
        viol = float(np.max(traj1.u - traj2.u))
    return OrderReport(True, "", max(viol, 0.0), tol)


@dataclass(frozen=True)
class UeqOrderReport:
    applicable: bool
    reason: str
    direction: str               # "below" (u stays <= u_eq) or "above"
    hypothesis_margin: float
    max_violation: float
    allowance: float

    @property
    def passed(self) -> bool:
        return self.applicable and self.max_violation <= self.allowance


def check_ueq_ordering(traj: Trajectory, allowance: float) -> UeqOrderReport:
    """Equilibrium ordering for absorption runs.

    When div(u_eq V) >= 0 (face values of u_eq by arithmetic mean) and
    u0 <= u_eq, the density stays below u_eq; mirrored for the reversed
    signs.  Reports a skip with witness when the hypothesis fails.
    """
    term = traj.term
    if getattr(term, "kind", None) != "absorption":
        return UeqOrderReport(False, "reaction is not an absorption term", "", 0.0, np.inf, allowance)
    grid = traj.grid
    u_eq = cellwise(term.u_eq, (grid.ny, grid.nx))
    ff = traj.face_velocity
    ueq_x = np.empty_like(ff.x)
    ueq_y = np.empty_like(ff.y)
    ueq_x[:, 1:-1] = 0.5 * (u_eq[:, :-1] + u_eq[:, 1:])
    ueq_x[:, 0] = u_eq[:, 0]
    ueq_x[:, -1] = u_eq[:, -1]
    ueq_y[1:-1, :] = 0.5 * (u_eq[:-1, :] + u_eq[1:, :])
    ueq_y[0, :] = u_eq[0, :]
    ueq_y[-1, :] = u_eq[-1, :]
    div_ueq_v = divergence_of_velocity(grid, FaceField(ueq_x * ff.x, ueq_y * ff.y))
    u0 = traj.u[0]
    tol = 1e-12
    if (u0 <= u_eq + tol).all() and (div_ueq_v >= -tol).all():
        direction = "below"
        margin = float(div_ueq_v.min())
        viol = float(max(np.max(traj.u - u_eq[None]), 0.0))
    elif (u0 >= u_eq - tol).all() and (div_ueq_v <= tol).all():
        direction = "above"
        margin = float(-div_ueq_v.max())
        viol = float(max(np.max(u_eq[None] - traj.u), 0.0))
    else:
        bad = int(np.sum((div_ueq_v < -tol) | (div_ueq_v > tol)))
        return UeqOrderReport(
            False,
            f"hypothesis fails: u0/u_eq not uniformly ordered or div(u_eq V) "
            f"changes sign on {bad} cells", "", 0.0, np.inf, allowance)
    return UeqOrderReport(True, "", direction, margin, viol, allowance)


@dataclass(frozen=True)
class DependenceEntry:
    label: str
    perturbation_size: float     # ||du0||_1 + integral of ||df||_1
    deviation: float             # sup-t L1 distance to the base run
    envelope: float


@dataclass(frozen=True)
class DependenceReport:
    entries: tuple

    @property
    def passed(self) -> bool:
        within = all(e.deviation <= e.envelope + 1e-14 for e in self.entries)
        devs = [e.deviation for e in sorted(self.entries, key=lambda e: e.perturbation_size,
                                            reverse=True)]
        monotone = all(a >= b - 1e-14 for a, b in zip(devs, devs[1:]))
        return within and monotone


def continuous_dependence_probe(scenario, perturbations, r_bound: float = None) -> DependenceReport:
    """Run a base scenario and perturbed copies (u0 and/or constant source),
    verifying that deviations shrink with the perturbation and stay inside
    the Gronwall envelope e^{RT} (||du0||_1 + T ||df||_1).

    ``perturbations``: iterable of (label, du0, df) with per-cell arrays (or
    scalars); df perturbs a constant-in-u source and requires the base
    reaction to be u-independent.
    """
    setup = materialize(scenario)
    if r_bound is None:
        r_bound = float(setup.term.growth_bound)
    base = run(scenario, record_steps=True, setup=setup)
    vol = setup.grid.vol
    t_final = scenario.horizon
    entries = []
    for label, du0, df in perturbations:
        du0_arr = cellwise(du0, base.u[0].shape)
        df_arr = cellwise(df, base.u[0].shape)
        u0_new = setup.u0 + du0_arr
        pert_scenario = replace(
            scenario,
            initial={"kind": "cells", "cells": [float(v) for v in u0_new.ravel()]},
        )
        if np.any(df_arr != 0.0):
            if getattr(setup.term, "lipschitz", 0.0) != 0.0:
                raise ConfigurationError("source perturbation needs a u-independent base reaction")
            base_val = cellwise(dict(scenario.reaction).get("value", 0.0), base.u[0].shape)
            pert_scenario = replace(
                pert_scenario,
                reaction={"kind": "constant",
                          "value": [float(v) for v in (base_val + df_arr).ravel()]},
            )
        ptraj = run(pert_scenario, record_steps=True, dt_override=base.dt)
        deviation = float(np.max(np.sum(np.abs(ptraj.u_steps - base.u_steps), axis=(1, 2))) * vol)
        size = float(np.sum(np.abs(du0_arr)) * vol)
        df_l1 = float(np.sum(np.abs(df_arr)) * vol)
        envelope = float(np.exp(r_bound * t_final) * (size + t_final * df_l1))
        entries.append(DependenceEntry(label=label, perturbation_size=size + t_final * df_l1,
                                       deviation=deviation, envelope=envelope))
    return DependenceReport(entries=tuple(entries))
