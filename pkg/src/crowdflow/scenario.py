"""Scenario files: schema, loading, validation, materialization.

The scenario format is a YAML key tree (documented in the README).  Loading
is eager about hypothesis checks: the Dirichlet boundary must have positive
measure, |u0| <= 1 (one phase: 0 <= u0 <= 1), the velocity must satisfy the
outward-pointing condition "HypV0" on the tagged boundary, and the reaction
term must validate against its declared constants.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigurationError
from .fields import (FaceField, check_velocity_admissibility, divergence_of_velocity,
                     make_velocity, sample_face_velocity)
from .grid import BoundarySpec, Grid, build_grid
from .pressure import LaplacianOperator, assemble_laplacian, default_max_sweeps
from .reaction import make_reaction, validate_assumptions

MODES = ("one_phase", "two_phase")


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    mode: str = "one_phase"
    nx: int = 16
    ny: int = 16
    extent: tuple = (1.0, 1.0)
    origin: tuple = (0.0, 0.0)
    boundary: dict = field(default_factory=lambda: {"left": "dirichlet", "right": "dirichlet",
                                                    "bottom": "dirichlet", "top": "dirichlet"})
    velocity: dict = field(default_factory=lambda: {"kind": "constant", "vx": 0.0, "vy": 0.0})
    reaction: dict = field(default_factory=lambda: {"kind": "zero"})
    initial: dict = field(default_factory=lambda: {"kind": "constant", "value": 0.0})
    horizon: float = 1.0
    dt_policy: object = "cfl"     # "cfl" or a fixed positive number
    snapshots: int = 11
    lcp_tol: float = 1e-10
    max_sweeps: int = 0           # 0 selects the default 10 * ncells + 1000
    admissibility_tol: float = 1e-12
    exploratory: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.horizon < 0:
            raise ConfigurationError("time horizon must be >= 0")
        if self.snapshots < 2 and self.horizon > 0:
            raise ConfigurationError("need at least 2 snapshots (t=0 and t=T)")
        if isinstance(self.dt_policy, str):
            if self.dt_policy != "cfl":
                raise ConfigurationError(f"dt policy must be 'cfl' or a number, got {self.dt_policy!r}")
        elif not float(self.dt_policy) > 0:
            raise ConfigurationError("fixed dt must be positive")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "grid": {"nx": self.nx, "ny": self.ny,
                     "extent": list(self.extent), "origin": list(self.origin)},
            "boundary": dict(self.boundary),
            "velocity": dict(self.velocity),
            "reaction": dict(self.reaction),
            "initial": dict(self.initial),
            "time": {"horizon": self.horizon, "dt": self.dt_policy, "snapshots": self.snapshots},
            "solver": {"lcp_tol": self.lcp_tol, "max_sweeps": self.max_sweeps,
                       "admissibility_tol": self.admissibility_tol,
                       "exploratory": self.exploratory},
        }

    @staticmethod
    def from_dict(data: dict, name: str = "scenario") -> "Scenario":
        if not isinstance(data, dict):
            raise ConfigurationError("scenario file must be a mapping")
        known = {"name", "mode", "grid", "boundary", "velocity", "reaction",
                 "initial", "time", "solver"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        g = data.get("grid", {})
        t = data.get("time", {})
        s = data.get("solver", {})
        dt_policy = t.get("dt", "cfl")
        if not isinstance(dt_policy, str):
            dt_policy = float(dt_policy)
        return Scenario(
            name=str(data.get("name", name)),
            mode=str(data.get("mode", "one_phase")),
            nx=int(g.get("nx", 16)),
            ny=int(g.get("ny", 16)),
            extent=tuple(float(v) for v in g.get("extent", (1.0, 1.0))),
            origin=tuple(float(v) for v in g.get("origin", (0.0, 0.0))),
            boundary=dict(data.get("boundary", {"left": "dirichlet", "right": "dirichlet",
                                                "bottom": "dirichlet", "top": "dirichlet"})),
            velocity=dict(data.get("velocity", {"kind": "constant", "vx": 0.0, "vy": 0.0})),
            reaction=dict(data.get("reaction", {"kind": "zero"})),
            initial=dict(data.get("initial", {"kind": "constant", "value": 0.0})),
            horizon=float(t.get("horizon", 1.0)),
            dt_policy=dt_policy,
            snapshots=int(t.get("snapshots", 11)),
            lcp_tol=float(s.get("lcp_tol", 1e-10)),
            max_sweeps=int(s.get("max_sweeps", 0)),
            admissibility_tol=float(s.get("admissibility_tol", 1e-12)),
            exploratory=bool(s.get("exploratory", False)),
        )


def _boundary_spec(config: dict) -> BoundarySpec:
    sides = {side: str(config.get(side, "dirichlet")) for side in ("left", "right", "bottom", "top")}
    overrides = config.get("overrides", ())
    rules = []
    for rule in overrides:
        rules.append({"side": rule["side"], "lo": float(rule["from"]),
                      "hi": float(rule["to"]), "tag": rule["tag"]})
    return BoundarySpec(left=sides["left"], right=sides["right"],
                        bottom=sides["bottom"], top=sides["top"], overrides=tuple(rules))


def initial_density(config: dict, grid: Grid) -> np.ndarray:
    kind = str(config.get("kind", "constant"))
    xc, yc = grid.cell_centers()
    if kind == "constant":
        return np.full((grid.ny, grid.nx), float(config.get("value", 0.0)))
    if kind == "cells":
        vals = np.asarray(config["cells"], dtype=float)
        if vals.size != grid.ncells:
            raise ConfigurationError(
                f"initial cells table has {vals.size} entries, grid has {grid.ncells} cells")
        return vals.reshape(grid.ny, grid.nx).copy()
    if kind == "profile":
        name = str(config.get("name", ""))
        if name == "block":
            inside = float(config.get("inside", 1.0))
            outside = float(config.get("outside", 0.0))
            x0, x1 = float(config["x0"]), float(config["x1"])
            y0, y1 = float(config["y0"]), float(config["y1"])
            sel = (xc >= x0) & (xc < x1) & (yc >= y0) & (yc < y1)
            return np.where(sel, inside, outside)
        if name == "bump":
            cx_, cy_ = float(config["cx"]), float(config["cy"])
            radius = float(config["radius"])
            amp = float(config.get("amplitude", 1.0))
            background = float(config.get("background", 0.0))
            r = np.hypot(xc - cx_, yc - cy_)
            prof = np.cos(0.5 * np.pi * np.minimum(r / radius, 1.0)) ** 2
            return background + amp * prof
        if name == "linear":
            a = float(config.get("a", 0.0))
            bx = float(config.get("bx", 0.0))
            by = float(config.get("by", 0.0))
            return a + bx * xc + by * yc
        raise ConfigurationError(f"unknown initial profile {name!r}")
    raise ConfigurationError(f"unknown initial kind {kind!r}")


@dataclass(frozen=True, eq=False)
class RunSetup:
    """Materialized scenario: everything the stepper needs."""

    scenario: Scenario
    grid: Grid
    face_velocity: FaceField
    div_v: np.ndarray
    term: object
    u0: np.ndarray
    laplacian: LaplacianOperator
    admissibility: object

    @property
    def max_sweeps(self) -> int:
        if self.scenario.max_sweeps > 0:
            return self.scenario.max_sweeps
        return default_max_sweeps(self.grid.ncells)


def materialize(scenario: Scenario, validate: bool = True) -> RunSetup:
    """Build grid, fields and reaction; run the eager hypothesis checks."""
    grid = build_grid(scenario.nx, scenario.ny, scenario.extent,
                      _boundary_spec(scenario.boundary), origin=scenario.origin)
    vel_cfg = dict(scenario.velocity)
    kind = str(vel_cfg.pop("kind", "constant"))
    force_walls = bool(vel_cfg.pop("force_walls", True))
    velocity = make_velocity(kind, **vel_cfg)
    ff = sample_face_velocity(grid, velocity, force_walls=force_walls)
    admissibility = check_velocity_admissibility(grid, ff, tol=scenario.admissibility_tol)
    if validate and not admissibility.passed and not scenario.exploratory:
        raise ConfigurationError(
            f"HypV0 violated on {len(admissibility.offending_faces)} faces: "
            + admissibility.summary()
        )
    term = build_reaction(scenario.reaction)
    if validate and getattr(term, "kind", None) != "frozen":
        report = validate_assumptions(term, grid, np.linspace(0.0, max(scenario.horizon, 1e-6), 5))
        if not report.passed:
            raise ConfigurationError("reaction hypothesis validation failed: "
                                     + "; ".join(report.failures()))
    u0 = initial_density(scenario.initial, grid)
    if validate:
        if scenario.mode == "one_phase":
            if float(u0.min()) < 0.0 or float(u0.max()) > 1.0:
                raise ConfigurationError("initial density violates 0 ≤ u₀ ≤ 1 (one-phase)")
        else:
            if float(np.max(np.abs(u0))) > 1.0:
                raise ConfigurationError("initial density violates |u₀| ≤ 1")
    return RunSetup(scenario=scenario, grid=grid, face_velocity=ff,
                    div_v=divergence_of_velocity(grid, ff), term=term, u0=u0,
                    laplacian=assemble_laplacian(grid), admissibility=admissibility)


def build_reaction(config: dict):
    cfg = dict(config)
    kind = str(cfg.pop("kind", "zero"))
    return make_reaction(kind, **cfg)


def load_scenario(path) -> Scenario:
    """Parse and eagerly validate a scenario file.

    Also accepts a run-metadata echo (the scenario then lives under the
    top-level ``scenario`` key), so written metadata round-trips.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"scenario parse error in {path}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("scenario"), dict):
        data = data["scenario"]
    name = os.path.splitext(os.path.basename(str(path)))[0]
    scenario = Scenario.from_dict(data, name=name)
    materialize(scenario, validate=True)
    return scenario
