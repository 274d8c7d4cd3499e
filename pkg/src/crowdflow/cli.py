"""Command-line interface.

Exit codes: 0 success / all checks pass, 2 validation or check failure,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .analysis import check_order, compare_runs
from .errors import (ConfigurationError, ConvergenceError, FieldEvaluationError,
                     ReactionDomainError, StepSizeError)
from .output import write_outputs
from .pressure import LcpProblem, lcp_oracle_enumerate, lcp_solve_pgs
from .reaction import check_congestion_free, validate_assumptions
from .scenario import load_scenario, materialize
from .stepper import integrate_envelope, picard_global, run
from .transport import stable_dt, upwind_divergence

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    traj = run(scenario)
    paths = write_outputs(traj, args.out)
    print(f"wrote {len(paths['snapshots'])} snapshots, diagnostics and metadata to {args.out}")
    print(f"steps={traj.n_steps} dt={traj.dt:.6g} "
          f"max_u={float(traj.step_max_u.max()) if traj.n_steps else float(traj.u[0].max()):.6g} "
          f"max_p={float(traj.diagnostics['p_max'].max()) if traj.n_steps else 0.0:.6g}")
    return EXIT_OK


def _cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)    # raises on HypV0 / G1 / G2 / u0 violations
    setup = materialize(scenario)
    print(setup.admissibility.summary())
    t_samples = np.linspace(0.0, max(scenario.horizon, 1e-6), 5)
    report = validate_assumptions(setup.term, setup.grid, t_samples)
    print(f"G1 bounded on samples: {report.g1_bounded} "
          f"(|g(.,1)| <= {report.max_abs_at_plus1:.4g}, |g(.,-1)| <= {report.max_abs_at_minus1:.4g})")
    print(f"Lipschitz: sampled {report.sampled_lipschitz:.6g} vs declared "
          f"{report.declared_lipschitz:.6g} -> {'ok' if report.lipschitz_ok else 'VIOLATED'}")
    print(f"G2 one-sided bound: {'ok' if report.growth_ok else 'VIOLATED'} "
          f"(excess {report.worst_growth_excess:.3e})")
    conditions = check_congestion_free(setup.term, setup.div_v, t_samples, grid=setup.grid)
    print("congestion-avoidance conditions: " + conditions.summary())
    env = integrate_envelope(setup.grid, setup.div_v, setup.term, upper0=1.0, lower0=-1.0,
                             horizon=scenario.horizon,
                             dt_ode=max(scenario.horizon, 1e-6) / 1000.0)
    print(f"envelope congestion horizon tau_c = {env.tau_c:.6g} of T = {scenario.horizon:.6g}")
    ok = setup.admissibility.passed and report.passed
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_picard(args) -> int:
    scenario = load_scenario(args.scenario)
    traj, gaps = picard_global(scenario, args.iters)
    print("n  d_n = sup_t ||u_n - u_{n-1}||_L1")
    for n, gap in enumerate(gaps, start=1):
        ratio = "" if n == 1 or gaps[n - 2] == 0 else f"  ratio {gap / gaps[n - 2]:.4f}"
        print(f"{n:2d}  {gap:.6e}{ratio}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    sa = load_scenario(args.scenario_a)
    sb = load_scenario(args.scenario_b)
    ta = run(sa, record_steps=True)
    tb = run(sb, record_steps=True)
    r_bound = args.r_bound if args.r_bound is not None else float(
        max(materialize(sa).term.growth_bound, materialize(sb).term.growth_bound))
    contraction = compare_runs(ta, tb, r_bound)
    print(f"L1 contraction vs Gronwall envelope (R = {r_bound:.6g}): "
          f"{'pass' if contraction.passed else 'FAIL'}")
    for t, d, e in zip(contraction.times, contraction.distances, contraction.envelopes):
        print(f"  t={t:.4f}  ||u1-u2||_1={d:.6e}  envelope={e:.6e}")
    order = check_order(ta, tb)
    if order.applicable:
        print(f"comparison principle: max (u1-u2)+ = {order.max_violation:.3e} "
              f"-> {'pass' if order.passed else 'FAIL'}")
    else:
        print(f"comparison principle: not applicable ({order.reason})")
    ok = contraction.passed and (order.passed or not order.applicable)
    return EXIT_OK if ok else EXIT_VALIDATION


def _cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    setup = materialize(scenario)
    if setup.grid.ncells > 20:
        print(f"oracle cross-check needs <= 20 cells, scenario has {setup.grid.ncells}")
        return EXIT_VALIDATION
    bound = stable_dt(setup.grid, setup.face_velocity, setup.term.lipschitz, setup.div_v,
                      horizon=scenario.horizon)
    dt = min(bound, scenario.horizon if scenario.horizon > 0 else bound)
    xc, yc = setup.grid.cell_centers()
    u = setup.u0
    u_star = (u - dt * upwind_divergence(setup.grid, setup.face_velocity, u)) \
        + dt * setup.term.rate(0.0, xc, yc, u)
    problem = LcpProblem(operator=setup.laplacian, dt=dt, q=1.0 - u_star)
    p_pgs = lcp_solve_pgs(problem, tol=1e-13)
    p_oracle = lcp_oracle_enumerate(problem)
    diff = float(np.max(np.abs(p_pgs - p_oracle)))
    print(f"first projection step: max |p_pgs - p_oracle| = {diff:.3e}")
    return EXIT_OK if diff <= 1e-10 else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdflow",
        description="Finite-volume congested crowd transport simulator")
    parser.add_argument("--version", action="version", version=f"crowdflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write outputs")
    p.add_argument("scenario")
    p.add_argument("--out", default="out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("check", help="run hypothesis analyzers without simulating")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("picard", help="fixed-point verification mode")
    p.add_argument("scenario")
    p.add_argument("--iters", type=int, default=6)
    p.set_defaults(func=_cmd_picard)

    p = sub.add_parser("compare", help="contraction/comparison reports for two runs")
    p.add_argument("scenario_a")
    p.add_argument("scenario_b")
    p.add_argument("--r-bound", type=float, default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("oracle", help="LCP oracle cross-check on the first projection step")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, StepSizeError, FieldEvaluationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, ReactionDomainError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
