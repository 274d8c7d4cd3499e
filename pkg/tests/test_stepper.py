import math

import numpy as np
import pytest

from crowdflow.errors import ConfigurationError, StepSizeError
from crowdflow.scenario import Scenario, materialize
from crowdflow.stepper import (integrate_envelope, picard_global, run,
                               verify_envelope_bound)

WALLS_EXIT = {"left": "neumann", "right": "neumann", "bottom": "neumann", "top": "neumann",
              "overrides": [{"side": "right", "from": 0.25, "to": 0.75, "tag": "dirichlet"}]}
ALL_D = {"left": "dirichlet", "right": "dirichlet", "bottom": "dirichlet", "top": "dirichlet"}
MIXED = {"left": "dirichlet", "right": "dirichlet", "bottom": "neumann", "top": "neumann"}


def logistic(t, u0, alpha, u_eq):
    """Closed form of u' = -alpha u (u - u_eq)."""
    if u_eq == 0.0:
        return u0 / (1.0 + alpha * u0 * t)
    if u0 == 0.0:
        return 0.0
    return u_eq / (1.0 + (u_eq / u0 - 1.0) * math.exp(-alpha * u_eq * t))


def test_zero_initial_zero_reaction_stays_zero():
    sc = Scenario(nx=8, ny=8, boundary=WALLS_EXIT,
                  velocity={"kind": "constant", "vx": 0.7, "vy": 0.0},
                  reaction={"kind": "zero"}, initial={"kind": "constant", "value": 0.0},
                  horizon=0.5, snapshots=3)
    traj = run(sc)
    assert not traj.u.any()
    assert not traj.p.any()


def test_saturated_stationary_state():
    sc = Scenario(nx=6, ny=6, boundary=MIXED,
                  velocity={"kind": "constant"}, reaction={"kind": "zero"},
                  initial={"kind": "constant", "value": 1.0}, horizon=0.5, snapshots=3)
    traj = run(sc)
    assert np.array_equal(traj.u[-1], np.ones((6, 6)))
    assert not traj.p.any()


def test_uniform_logistic_matches_closed_form():
    alpha, u_eq, u0, horizon = 1.0, 0.5, 0.9, 1.0
    sc = Scenario(nx=4, ny=4, boundary=ALL_D, velocity={"kind": "constant"},
                  reaction={"kind": "absorption", "alpha": alpha, "u_eq": u_eq},
                  initial={"kind": "constant", "value": u0},
                  horizon=horizon, dt_policy=0.005, snapshots=5)
    traj = run(sc)
    for k, t in enumerate(traj.times):
        exact = logistic(float(t), u0, alpha, u_eq)
        assert np.allclose(traj.u[k], exact, atol=5.0 * traj.dt)
    assert not traj.p.any()


def test_snapshot_cadence_and_determinism():
    sc = Scenario(nx=8, ny=8, boundary=WALLS_EXIT,
                  velocity={"kind": "constant", "vx": 1.0},
                  reaction={"kind": "absorption", "alpha": 0.5, "u_eq": 0.5},
                  initial={"kind": "profile", "name": "block", "x0": 0.0, "x1": 0.5,
                           "y0": 0.0, "y1": 1.0, "inside": 0.9, "outside": 0.1},
                  horizon=0.8, snapshots=5)
    t1 = run(sc)
    t2 = run(sc)
    assert len(t1.times) == 5
    assert (np.diff(t1.times) > 0).all()
    assert t1.u.tobytes() == t2.u.tobytes()
    assert t1.p.tobytes() == t2.p.tobytes()
    for col, vals in t1.diagnostics.items():
        assert np.array_equal(vals, t2.diagnostics[col]), col


def test_fixed_dt_above_bound_rejected():
    sc = Scenario(nx=8, ny=8, boundary=WALLS_EXIT,
                  velocity={"kind": "constant", "vx": 1.0},
                  reaction={"kind": "zero"}, initial={"kind": "constant", "value": 0.5},
                  horizon=1.0, dt_policy=0.5, snapshots=3)
    with pytest.raises(StepSizeError):
        run(sc)


def test_ceiling_and_complementarity_on_congested_run():
    sc = Scenario(nx=16, ny=16, boundary=WALLS_EXIT,
                  velocity={"kind": "constant", "vx": 1.0},
                  reaction={"kind": "zero"},
                  initial={"kind": "constant", "value": 0.8},
                  horizon=1.0, snapshots=5)
    traj = run(sc)
    assert float(traj.diagnostics["p_max"].max()) > 1e-3   # congestion actually occurs
    assert float(traj.step_max_u.max()) <= 1.0 + 1e-9
    assert float(traj.diagnostics["comp_residual"].max()) <= 1e-9
    assert float(traj.step_min_u.min()) >= -1e-12


def test_two_phase_run_respects_bilateral_bounds():
    sc = Scenario(mode="two_phase", nx=12, ny=6, extent=(2.0, 1.0), boundary=WALLS_EXIT,
                  velocity={"kind": "constant", "vx": 0.8},
                  reaction={"kind": "zero"},
                  initial={"kind": "profile", "name": "block", "x0": 0.0, "x1": 1.0,
                           "y0": 0.0, "y1": 1.0, "inside": 0.9, "outside": -0.9},
                  horizon=1.0, snapshots=5)
    traj = run(sc)
    assert float(traj.step_max_u.max()) <= 1.0 + 1e-9
    assert float(traj.step_min_u.min()) >= -1.0 - 1e-9
    assert float(traj.diagnostics["comp_residual"].max()) <= 1e-9


def test_congestion_free_run_has_zero_pressure_and_matches_pure_transport():
    sc = Scenario(nx=8, ny=8, boundary=MIXED,
                  velocity={"kind": "constant"},
                  reaction={"kind": "tabulated", "r_nodes": [-1.0, 0.0, 1.0],
                            "values": [0.3, 0.0, -0.3]},
                  initial={"kind": "profile", "name": "bump", "cx": 0.5, "cy": 0.5,
                           "radius": 0.4, "amplitude": 0.9, "background": 0.05},
                  horizon=1.0, dt_policy=0.01, snapshots=5)
    with_p = run(sc)
    without_p = run(sc, pressure_enabled=False)
    assert float(with_p.diagnostics["p_max"].max()) == 0.0
    assert with_p.u.tobytes() == without_p.u.tobytes()


def test_picard_trivial_for_zero_reaction():
    sc = Scenario(nx=4, ny=4, boundary=WALLS_EXIT, velocity={"kind": "constant", "vx": 0.3},
                  reaction={"kind": "zero"}, initial={"kind": "constant", "value": 0.4},
                  horizon=0.5, snapshots=3)
    _, gaps = picard_global(sc, 2)
    assert gaps[0] == 0.0  # iterate 1 freezes g == 0, identical to iterate 0


def test_picard_factorial_decay_and_limit():
    # L_g T = 2.5 * 0.2 = 0.5
    sc = Scenario(nx=6, ny=6, boundary=MIXED, velocity={"kind": "constant"},
                  reaction={"kind": "absorption", "alpha": 1.0, "u_eq": 0.5},
                  initial={"kind": "profile", "name": "linear", "a": 0.2, "bx": 0.5, "by": 0.1},
                  horizon=0.2, snapshots=3)
    traj, gaps = picard_global(sc, 8)
    assert gaps[0] > 0.0
    ratios = [b / a for a, b in zip(gaps, gaps[1:]) if a > 1e-15]
    assert all(r < 0.75 for r in ratios)
    assert all(b <= a + 1e-15 for a, b in zip(ratios, ratios[1:]))  # decreasing with n
    reference = run(sc, record_steps=True, dt_override=traj.dt)
    gap = float(np.max(np.sum(np.abs(traj.u_steps - reference.u_steps), axis=(1, 2)))
                * traj.grid.vol)
    assert gap <= 10.0 * sc.lcp_tol


def test_picard_needs_two_iterations():
    sc = Scenario(nx=4, ny=4, boundary=MIXED)
    with pytest.raises(ConfigurationError):
        picard_global(sc, 1)


def envelope_setup(nx=4, reaction=None, vx=0.0):
    sc = Scenario(nx=nx, ny=nx, boundary=MIXED,
                  velocity={"kind": "constant", "vx": vx},
                  reaction=reaction or {"kind": "zero"},
                  initial={"kind": "constant", "value": 0.5}, horizon=1.0, snapshots=3)
    setup = materialize(sc)
    return sc, setup


def test_envelope_stationary_at_ceiling_under_g3_g4():
    sc, setup = envelope_setup(reaction={"kind": "tabulated", "r_nodes": [-1.0, 0.0, 1.0],
                                         "values": [0.3, 0.0, -0.3]})
    env = integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=1.0, lower0=-1.0,
                             horizon=1.0, dt_ode=0.01)
    assert env.tau_c == 1.0
    assert (env.upper <= 1.0 + 1e-12).all()
    assert (env.lower >= -1.0 - 1e-12).all()


def test_envelope_logistic_decay():
    alpha, u_eq = 1.0, 0.5
    sc, setup = envelope_setup(reaction={"kind": "absorption", "alpha": alpha, "u_eq": u_eq})
    env = integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=1.0, lower0=0.0,
                             horizon=1.0, dt_ode=1e-3)
    for t, w2 in zip(env.times[::100], env.upper[::100]):
        assert w2 == pytest.approx(logistic(float(t), 1.0, alpha, u_eq), abs=1e-8)


def test_envelope_linear_ceiling_crossing():
    # g = c > 0, div V = 0, upper0 = 1 - c s: ceiling reached at tau_c = s
    c, s = 0.5, 0.4
    sc, setup = envelope_setup(reaction={"kind": "constant", "value": c})
    env = integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=1.0 - c * s,
                             lower0=0.0, horizon=1.0, dt_ode=0.01)
    assert env.tau_c == pytest.approx(s, abs=0.01 / 1024 + 1e-9)


def test_envelope_bound_on_trajectory():
    alpha, u_eq, u0 = 1.0, 0.5, 0.9
    sc = Scenario(nx=4, ny=4, boundary=ALL_D, velocity={"kind": "constant"},
                  reaction={"kind": "absorption", "alpha": alpha, "u_eq": u_eq},
                  initial={"kind": "constant", "value": u0},
                  horizon=1.0, dt_policy=0.005, snapshots=5)
    traj = run(sc)
    setup = materialize(sc)
    env = integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=u0, lower0=0.0,
                             horizon=1.0, dt_ode=1e-3)
    report = verify_envelope_bound(traj, env, allowance=5.0 * traj.dt)
    assert report.passed


def test_envelope_rejects_bad_start():
    sc, setup = envelope_setup()
    with pytest.raises(ConfigurationError):
        integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=0.0, lower0=0.5,
                           horizon=1.0, dt_ode=0.1)


def test_run_rejects_invalid_initial_density():
    sc = Scenario(nx=4, ny=4, boundary=MIXED, initial={"kind": "constant", "value": 1.5})
    with pytest.raises(ConfigurationError, match="u₀"):
        run(sc)


def test_run_rejects_inadmissible_velocity():
    sc = Scenario(nx=4, ny=4,
                  boundary={"left": "dirichlet", "right": "dirichlet",
                            "bottom": "neumann", "top": "neumann"},
                  velocity={"kind": "constant", "vx": 1.0})
    with pytest.raises(ConfigurationError, match="HypV0"):
        run(sc)


def test_exploratory_flag_allows_inadmissible_velocity():
    sc = Scenario(nx=4, ny=4,
                  boundary={"left": "dirichlet", "right": "dirichlet",
                            "bottom": "neumann", "top": "neumann"},
                  velocity={"kind": "constant", "vx": 1.0},
                  initial={"kind": "constant", "value": 0.2},
                  horizon=0.2, snapshots=3, exploratory=True)
    traj = run(sc)
    assert traj.n_steps > 0
