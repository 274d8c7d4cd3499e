import os

import numpy as np
import pytest

from crowdflow.cli import main
from crowdflow.errors import ConfigurationError
from crowdflow.output import CSV_HEADER, write_outputs
from crowdflow.scenario import Scenario, load_scenario
from crowdflow.stepper import Trajectory, run

MINIMAL = """\
name: minimal
grid: {nx: 1, ny: 1, extent: [1.0, 1.0]}
boundary: {left: dirichlet, right: dirichlet, bottom: dirichlet, top: dirichlet}
velocity: {kind: constant, vx: 0.0, vy: 0.0}
reaction: {kind: zero}
initial: {kind: constant, value: 0.0}
time: {horizon: 0.5, dt: cfl, snapshots: 3}
"""

CORRIDOR = """\
name: corridor
mode: one_phase
grid: {nx: 8, ny: 8, extent: [1.0, 1.0]}
boundary:
  left: neumann
  right: neumann
  bottom: neumann
  top: neumann
  overrides:
    - {side: right, from: 0.25, to: 0.75, tag: dirichlet}
velocity: {kind: constant, vx: 1.0, vy: 0.0}
reaction: {kind: absorption, alpha: 0.5, u_eq: 0.25}
initial: {kind: constant, value: 0.8}
time: {horizon: 0.5, dt: cfl, snapshots: 4}
solver: {lcp_tol: 1.0e-10}
"""


def write(tmp_path, text, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minimal_scenario_loads_with_defaults(tmp_path):
    sc = load_scenario(write(tmp_path, MINIMAL))
    assert sc.name == "minimal"
    assert sc.mode == "one_phase"
    assert sc.lcp_tol == 1e-10
    assert sc.dt_policy == "cfl"


def test_initial_density_above_one_rejected(tmp_path):
    text = MINIMAL.replace("value: 0.0", "value: 1.5")
    with pytest.raises(ConfigurationError, match="u₀"):
        load_scenario(write(tmp_path, text))


def test_all_neumann_boundary_rejected(tmp_path):
    text = MINIMAL.replace(
        "boundary: {left: dirichlet, right: dirichlet, bottom: dirichlet, top: dirichlet}",
        "boundary: {left: neumann, right: neumann, bottom: neumann, top: neumann}")
    with pytest.raises(ConfigurationError, match="positive measure"):
        load_scenario(write(tmp_path, text))


def test_parse_error_reported(tmp_path):
    with pytest.raises(ConfigurationError, match="parse error"):
        load_scenario(write(tmp_path, "grid: [unbalanced"))
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_scenario(str(tmp_path / "missing.yaml"))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="unknown scenario keys"):
        load_scenario(write(tmp_path, MINIMAL + "extra: 1\n"))


def test_outputs_and_metadata_roundtrip(tmp_path):
    sc = load_scenario(write(tmp_path, CORRIDOR))
    traj = run(sc)
    out = tmp_path / "out"
    paths = write_outputs(traj, str(out))
    assert len(paths["snapshots"]) == 4
    text = open(paths["snapshots"][0]).read().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert "DATASET STRUCTURED_POINTS" in text
    assert "DIMENSIONS 9 9 1" in text
    assert f"CELL_DATA {8 * 8}" in text
    assert "SCALARS u double 1" in text and "SCALARS p double 1" in text

    rows = open(paths["diagnostics"]).read().splitlines()
    assert rows[0] == CSV_HEADER
    assert len(rows) - 1 == traj.n_steps

    # the metadata echo reloads to an identical scenario
    sc2 = load_scenario(paths["metadata"])
    assert sc2 == sc


def test_csv_ledger_reconciles_from_file(tmp_path):
    sc = load_scenario(write(tmp_path, CORRIDOR))
    traj = run(sc)
    paths = write_outputs(traj, str(tmp_path / "out"))
    rows = np.genfromtxt(paths["diagnostics"], delimiter=",", names=True)
    mass = np.concatenate([[float(np.sum(traj.u[0])) * traj.grid.vol], rows["mass"]])
    change = np.diff(mass)
    predicted = traj.dt * (rows["reaction_integral"] - rows["adv_outflux_D"]
                           - rows["pressure_outflux_D"])
    assert np.max(np.abs(change - predicted)) <= 1e-12 * traj.grid.ncells


def test_empty_trajectory_writes_metadata_only(tmp_path):
    sc = Scenario(horizon=0.0, snapshots=2)
    grid_traj = run(sc)
    empty = Trajectory(scenario=sc, grid=grid_traj.grid, term=grid_traj.term,
                       face_velocity=grid_traj.face_velocity, div_v=grid_traj.div_v,
                       dt=0.0, times=np.empty(0), u=np.empty((0, sc.ny, sc.nx)),
                       p=np.empty((0, sc.ny, sc.nx)), diagnostics={},
                       step_max_u=np.empty(0), step_min_u=np.empty(0))
    paths = write_outputs(empty, str(tmp_path / "out"))
    assert paths["snapshots"] == []
    assert paths["diagnostics"] is None
    assert os.path.exists(paths["metadata"])


def test_cli_run_and_exit_codes(tmp_path, capsys):
    scenario_path = write(tmp_path, CORRIDOR)
    out_dir = str(tmp_path / "cli_out")
    assert main(["run", scenario_path, "--out", out_dir]) == 0
    assert os.path.exists(os.path.join(out_dir, "metadata.yaml"))
    assert os.path.exists(os.path.join(out_dir, "diagnostics.csv"))

    bad = write(tmp_path, MINIMAL.replace("value: 0.0", "value: 1.5"), "bad.yaml")
    assert main(["run", bad, "--out", out_dir]) == 2
    err = capsys.readouterr().err
    assert "validation error" in err


def test_cli_check_pass_and_report(tmp_path, capsys):
    scenario_path = write(tmp_path, CORRIDOR)
    assert main(["check", scenario_path]) == 0
    out = capsys.readouterr().out
    assert "HypV0 pass" in out
    assert "G1" in out and "G2" in out
    assert "condcompress" in out
    assert "tau_c" in out


def test_cli_check_fails_on_bad_declaration(tmp_path, capsys):
    text = CORRIDOR.replace("reaction: {kind: absorption, alpha: 0.5, u_eq: 0.25}",
                            "reaction: {kind: absorption, alpha: 0.5, u_eq: 0.25, lipschitz: 0.1}")
    assert main(["check", write(tmp_path, text)]) == 2
    assert "validation error" in capsys.readouterr().err


def test_cli_picard_prints_table(tmp_path, capsys):
    text = CORRIDOR.replace("velocity: {kind: constant, vx: 1.0, vy: 0.0}",
                            "velocity: {kind: constant, vx: 0.0, vy: 0.0}")
    text = text.replace("time: {horizon: 0.5, dt: cfl, snapshots: 4}",
                        "time: {horizon: 0.2, dt: cfl, snapshots: 3}")
    assert main(["picard", write(tmp_path, text), "--iters", "4"]) == 0
    out = capsys.readouterr().out
    assert "d_n" in out
    assert out.count("\n") >= 5


def test_cli_compare(tmp_path, capsys):
    a = write(tmp_path, CORRIDOR, "a.yaml")
    b = write(tmp_path, CORRIDOR.replace("value: 0.8", "value: 0.5"), "b.yaml")
    assert main(["compare", a, b, "--r-bound", "1.125"]) == 0
    out = capsys.readouterr().out
    assert "Gronwall" in out
    assert "comparison principle" in out


def test_cli_oracle(tmp_path, capsys):
    small = CORRIDOR.replace("grid: {nx: 8, ny: 8, extent: [1.0, 1.0]}",
                             "grid: {nx: 4, ny: 4, extent: [1.0, 1.0]}")
    small = small.replace("value: 0.8", "value: 0.97")
    assert main(["oracle", write(tmp_path, small)]) == 0
    out = capsys.readouterr().out
    assert "p_pgs - p_oracle" in out


def test_shipped_sample_scenarios_check_clean(capsys):
    import glob

    samples = sorted(glob.glob(os.path.join(os.path.dirname(__file__), "..",
                                            "scenarios", "*.yaml")))
    assert len(samples) >= 3
    for path in samples:
        assert main(["check", path]) == 0, path


def test_two_phase_reaction_scenario_loads(tmp_path):
    text = CORRIDOR.replace(
        "reaction: {kind: absorption, alpha: 0.5, u_eq: 0.25}",
        "reaction:\n"
        "  kind: two_phase\n"
        "  plus: {kind: absorption, alpha: 0.5, u_eq: 0.25}\n"
        "  minus: {kind: zero}")
    sc = load_scenario(write(tmp_path, text))
    traj = run(sc)
    assert traj.n_steps > 0


def test_trajectory_state_accessor(tmp_path):
    sc = load_scenario(write(tmp_path, CORRIDOR))
    traj = run(sc)
    state = traj.state(1)
    assert state.t == traj.times[1]
    assert np.array_equal(state.u, traj.u[1])
