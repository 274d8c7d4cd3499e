import numpy as np
import pytest

from crowdflow.errors import StepSizeError
from crowdflow.fields import divergence_of_velocity, make_velocity, sample_face_velocity
from crowdflow.grid import BoundarySpec, build_grid
from crowdflow.reaction import make_reaction
from crowdflow.transport import (dirichlet_advective_outflux, explicit_step,
                                 stable_dt, upwind_divergence)

ROW = build_grid(3, 1, (3.0, 1.0), BoundarySpec(left="dirichlet", right="dirichlet",
                                                bottom="neumann", top="neumann"))
ROW_FF = sample_face_velocity(ROW, make_velocity("constant", vx=1.0), force_walls=False)


def test_no_flow_gives_zero_divergence():
    g = build_grid(4, 4, (1.0, 1.0), BoundarySpec())
    ff = sample_face_velocity(g, make_velocity("constant"))
    u = np.linspace(0, 1, 16).reshape(4, 4)
    assert not upwind_divergence(g, ff, u).any()


def test_row_hand_enumerated_fluxes():
    # interior faces carry 0 and 1; boundary faces carry 0 (inflow ghost, outflow u=0)
    u = np.array([[0.0, 1.0, 0.0]])
    div = upwind_divergence(ROW, ROW_FF, u)
    assert np.array_equal(div, np.array([[0.0, 1.0, -1.0]]))


def test_constant_density_interior_telescopes():
    g = build_grid(5, 4, (5.0, 4.0), BoundarySpec())
    ff = sample_face_velocity(g, make_velocity("constant", vx=1.0, vy=-0.5), force_walls=False)
    u = np.full((4, 5), 0.7)
    div = upwind_divergence(g, ff, u)
    assert np.allclose(div[1:-1, 1:-1], 0.0)
    # boundary cells only carry the boundary-face mismatch: here left inflow
    # upwinds 0 instead of 0.7, so column 0 sees a net source
    assert div[1, 0] == pytest.approx(0.7)


def test_stable_dt_examples():
    g = build_grid(4, 1, (4.0, 1.0), BoundarySpec(left="dirichlet", right="dirichlet",
                                                  bottom="neumann", top="neumann"))
    zero = sample_face_velocity(g, make_velocity("constant"))
    div0 = divergence_of_velocity(g, zero)
    assert stable_dt(g, zero, 0.0, div0, horizon=7.5) == 7.5
    ff = sample_face_velocity(g, make_velocity("constant", vx=1.0), force_walls=False)
    assert stable_dt(g, ff, 0.0, divergence_of_velocity(g, ff)) == pytest.approx(0.9)
    assert stable_dt(g, zero, 2.0, div0) == pytest.approx(0.45)


def test_explicit_step_zero_fixed_point():
    term = make_reaction("zero")
    u = np.zeros((1, 3))
    out = explicit_step(u, 0.5, ROW, ROW_FF, term, 0.0)
    assert not out.any()


def test_explicit_step_matches_hand_update():
    term = make_reaction("zero")
    u = np.array([[0.0, 1.0, 0.0]])
    out = explicit_step(u, 0.5, ROW, ROW_FF, term, 0.0)
    assert np.array_equal(out, np.array([[0.0, 0.5, 0.5]]))


def test_explicit_step_reduces_to_ode_for_uniform_state():
    # V = 0 and uniform u: one step equals forward Euler for the logistic ODE
    g = build_grid(4, 4, (1.0, 1.0), BoundarySpec())
    ff = sample_face_velocity(g, make_velocity("constant"))
    term = make_reaction("absorption", alpha=1.0, u_eq=0.5)
    u0 = 0.9
    dt = 0.05
    out = explicit_step(np.full((4, 4), u0), dt, g, ff, term, 0.0)
    expected = u0 + dt * (-1.0 * u0 * (u0 - 0.5))
    assert np.allclose(out, expected, atol=1e-15)


def test_explicit_step_tracks_accurate_ode_integration():
    # repeated uniform steps against a fine-step reference for u' = g(u)
    g = build_grid(2, 2, (1.0, 1.0), BoundarySpec())
    ff = sample_face_velocity(g, make_velocity("constant"))
    term = make_reaction("absorption", alpha=1.0, u_eq=0.25)
    dt, n = 0.01, 100
    u = np.full((2, 2), 0.9)
    for k in range(n):
        u = explicit_step(u, dt, g, ff, term, k * dt)
    fine = 0.9
    m = 200
    for k in range(n * m):
        fine += (dt / m) * (-1.0 * fine * (fine - 0.25))
    assert abs(float(u[0, 0]) - fine) < 5.0 * dt


def test_step_size_error():
    term = make_reaction("zero")
    with pytest.raises(StepSizeError):
        explicit_step(np.zeros((1, 3)), 1.5, ROW, ROW_FF, term, 0.0)


def test_monotonicity_randomized_pairs():
    rng = np.random.default_rng(11)
    g = build_grid(6, 6, (1.0, 1.0), BoundarySpec(left="neumann", right="dirichlet",
                                                  bottom="neumann", top="neumann"))
    ff = sample_face_velocity(g, make_velocity("constant", vx=1.0, vy=0.3))
    term = make_reaction("absorption", alpha=1.0, u_eq=0.5)
    div_v = divergence_of_velocity(g, ff)
    dt = stable_dt(g, ff, term.lipschitz, div_v)
    for _ in range(50):
        lo = rng.uniform(0.0, 0.8, size=(6, 6))
        hi = lo + rng.uniform(0.0, 0.2, size=(6, 6))
        out_lo = explicit_step(lo, dt, g, ff, term, 0.0, stable_bound=dt)
        out_hi = explicit_step(hi, dt, g, ff, term, 0.0, stable_bound=dt)
        assert float(np.max(out_lo - out_hi)) <= 1e-12


def test_mass_ledger_single_step():
    rng = np.random.default_rng(12)
    g = build_grid(8, 4, (2.0, 1.0), BoundarySpec(left="neumann", right="dirichlet",
                                                  bottom="neumann", top="neumann"))
    ff = sample_face_velocity(g, make_velocity("constant", vx=0.8))
    term = make_reaction("absorption", alpha=0.7, u_eq=0.3)
    div_v = divergence_of_velocity(g, ff)
    dt = stable_dt(g, ff, term.lipschitz, div_v)
    u = rng.uniform(0.0, 1.0, size=(4, 8))
    xc, yc = g.cell_centers()
    out = explicit_step(u, dt, g, ff, term, 0.0, stable_bound=dt)
    lhs = float(np.sum(out) - np.sum(u)) * g.vol
    rhs = dt * (float(np.sum(term.rate(0.0, xc, yc, u))) * g.vol
                - dirichlet_advective_outflux(g, ff, u))
    assert lhs == pytest.approx(rhs, abs=1e-12 * g.ncells)


def test_linearity_for_linear_reaction():
    g = build_grid(5, 5, (1.0, 1.0), BoundarySpec())
    ff = sample_face_velocity(g, make_velocity("constant", vx=0.4, vy=0.2), force_walls=False)
    term = make_reaction("tabulated", r_nodes=[-1.0, 1.0], values=[0.5, -0.5])
    rng = np.random.default_rng(13)
    u1 = rng.uniform(0.0, 0.5, size=(5, 5))
    u2 = rng.uniform(0.0, 0.5, size=(5, 5))
    a, b = 0.3, 0.7
    dt = 0.05
    s1 = explicit_step(u1, dt, g, ff, term, 0.0, stable_bound=dt)
    s2 = explicit_step(u2, dt, g, ff, term, 0.0, stable_bound=dt)
    s12 = explicit_step(a * u1 + b * u2, dt, g, ff, term, 0.0, stable_bound=dt)
    assert np.allclose(s12, a * s1 + b * s2, atol=1e-12)
