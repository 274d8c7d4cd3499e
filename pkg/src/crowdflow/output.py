"""Result serialization: VTK legacy snapshots, diagnostics CSV, metadata echo."""

from __future__ import annotations

import os

import numpy as np
import yaml

from . import __version__, kernels
from .stepper import DIAG_COLUMNS, Trajectory

CSV_HEADER = ",".join(DIAG_COLUMNS)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_vtk_snapshot(path, grid, fields: dict, title: str) -> None:
    """Legacy ASCII structured-points file with cell data (readable anywhere)."""
    nx, ny = grid.nx, grid.ny
    with open(path, "w", encoding="ascii") as out:
        out.write("# vtk DataFile Version 3.0\n")
        out.write(title[:255] + "\n")
        out.write("ASCII\n")
        out.write("DATASET STRUCTURED_POINTS\n")
        out.write(f"DIMENSIONS {nx + 1} {ny + 1} 1\n")
        out.write(f"ORIGIN {_fmt(grid.origin[0])} {_fmt(grid.origin[1])} 0\n")
        out.write(f"SPACING {_fmt(grid.hx)} {_fmt(grid.hy)} 1\n")
        out.write(f"CELL_DATA {nx * ny}\n")
        for name, values in fields.items():
            out.write(f"SCALARS {name} double 1\n")
            out.write("LOOKUP_TABLE default\n")
            for row in np.asarray(values):
                out.write(" ".join(_fmt(v) for v in row) + "\n")


def write_outputs(traj: Trajectory, out_dir) -> dict:
    """Write snapshots (VTK), diagnostics (CSV), and a metadata echo (YAML).

    An empty trajectory produces the metadata file only.  Returns the paths
    written, keyed 'snapshots', 'diagnostics', 'metadata'.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {"snapshots": [], "diagnostics": None, "metadata": None}

    n_snaps = len(traj.times) if traj.times is not None else 0
    for k in range(n_snaps):
        name = os.path.join(out_dir, f"snap_{k:04d}.vtk")
        write_vtk_snapshot(name, traj.grid, {"u": traj.u[k], "p": traj.p[k]},
                           title=f"{traj.scenario.name} t={_fmt(traj.times[k])}")
        paths["snapshots"].append(name)

    if traj.n_steps > 0:
        csv_path = os.path.join(out_dir, "diagnostics.csv")
        d = traj.diagnostics
        with open(csv_path, "w", encoding="ascii") as out:
            out.write(CSV_HEADER + "\n")
            for row in range(traj.n_steps):
                cells = [str(int(d["step"][row]))]
                cells += [_fmt(d[col][row]) for col in DIAG_COLUMNS[1:]]
                out.write(",".join(cells) + "\n")
        paths["diagnostics"] = csv_path

    meta_path = os.path.join(out_dir, "metadata.yaml")
    grid = traj.grid
    metadata = {
        "scenario": traj.scenario.to_dict(),
        "grid": {
            "nx": grid.nx, "ny": grid.ny, "hx": grid.hx, "hy": grid.hy,
            "origin": list(grid.origin), "extent": list(grid.extent),
            "dirichlet_faces": grid.n_dirichlet_faces(),
            "boundary_faces": grid.n_boundary_faces,
            "dirichlet_measure": grid.dirichlet_measure(),
        },
        "run": {
            "dt": traj.dt,
            "steps": traj.n_steps,
            "snapshot_times": [float(t) for t in traj.times],
            "kernel_backend": kernels.backend_name(),
        },
        "versions": {"crowdflow": __version__, "numpy": np.__version__},
    }
    with open(meta_path, "w", encoding="utf-8") as out:
        yaml.safe_dump(metadata, out, sort_keys=True)
    paths["metadata"] = meta_path
    return paths
