"""Uniform cell-centered 2D grids with per-face boundary tags.

Cells are indexed ``[j, i]`` (row-major, ``j`` along y) and flattened as
``k = j * nx + i``.  Faces are enumerated x-faces first, then y-faces, both
row-major:

* x-face ``(i, j)``, ``i in 0..nx``:   id ``j * (nx + 1) + i``
* y-face ``(i, j)``, ``j in 0..ny``:   id ``n_xfaces + j * nx + i``

Stored face normals point along +x / +y for interior faces and outward on
boundary faces (so the left column and bottom row flip sign).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError

DIRICHLET = 1
NEUMANN = 0

_TAG_BY_NAME = {"dirichlet": DIRICHLET, "neumann": NEUMANN}
SIDES = ("left", "right", "bottom", "top")


def tag_name(tag: int) -> str:
    return "dirichlet" if tag == DIRICHLET else "neumann"


@dataclass(frozen=True)
class SideRule:
    """Retags the boundary faces of one side whose centers fall in [lo, hi)."""

    side: str
    lo: float
    hi: float
    tag: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ConfigurationError(f"unknown side {self.side!r}")
        if self.tag not in _TAG_BY_NAME:
            raise ConfigurationError(f"unknown boundary tag {self.tag!r}")
        if not self.hi > self.lo:
            raise ConfigurationError("boundary override needs hi > lo")


@dataclass(frozen=True)
class BoundarySpec:
    """Per-side base tags plus optional windows (e.g. an exit in a wall)."""

    left: str = "dirichlet"
    right: str = "dirichlet"
    bottom: str = "dirichlet"
    top: str = "dirichlet"
    overrides: tuple = ()

    def __post_init__(self):
        for side in SIDES:
            tag = getattr(self, side)
            if tag not in _TAG_BY_NAME:
                raise ConfigurationError(f"unknown boundary tag {tag!r} for side {side}")
        rules = tuple(r if isinstance(r, SideRule) else SideRule(**r) for r in self.overrides)
        object.__setattr__(self, "overrides", rules)
        # each boundary face must be covered by exactly one rule
        per_side = {}
        for rule in rules:
            per_side.setdefault(rule.side, []).append(rule)
        for side, side_rules in per_side.items():
            side_rules.sort(key=lambda r: r.lo)
            for a, b in zip(side_rules, side_rules[1:]):
                if b.lo < a.hi:
                    raise ConfigurationError(f"overlapping boundary overrides on side {side}")

    def face_tags(self, nx, ny, hx, hy, origin):
        """Resolve to per-face tag arrays (left, right, bottom, top)."""
        x0, y0 = origin
        ycent = y0 + (np.arange(ny) + 0.5) * hy
        xcent = x0 + (np.arange(nx) + 0.5) * hx
        coords = {"left": ycent, "right": ycent, "bottom": xcent, "top": xcent}
        tags = {
            side: np.full(coords[side].shape, _TAG_BY_NAME[getattr(self, side)], dtype=np.uint8)
            for side in SIDES
        }
        for rule in self.overrides:
            c = coords[rule.side]
            sel = (c >= rule.lo) & (c < rule.hi)
            tags[rule.side][sel] = _TAG_BY_NAME[rule.tag]
        return tags["left"], tags["right"], tags["bottom"], tags["top"]


class Face(NamedTuple):
    index: int
    axis: int                 # 0: normal along x, 1: normal along y
    i: int
    j: int
    cells: tuple              # flat cell ids; (low, high) interior, (cell,) boundary
    normal: tuple             # stored orientation
    area: float
    tag: Optional[int]        # DIRICHLET / NEUMANN, None for interior faces


@dataclass(frozen=True, eq=False)
class Grid:
    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple
    left: np.ndarray          # (ny,) uint8 boundary tags
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    @property
    def vol(self) -> float:
        return self.hx * self.hy

    @property
    def extent(self) -> tuple:
        return (self.nx * self.hx, self.ny * self.hy)

    @property
    def n_xfaces(self) -> int:
        return (self.nx + 1) * self.ny

    @property
    def n_yfaces(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def n_faces(self) -> int:
        return self.n_xfaces + self.n_yfaces

    @property
    def n_boundary_faces(self) -> int:
        return 2 * self.nx + 2 * self.ny

    def n_dirichlet_faces(self) -> int:
        return int(
            np.count_nonzero(self.left == DIRICHLET)
            + np.count_nonzero(self.right == DIRICHLET)
            + np.count_nonzero(self.bottom == DIRICHLET)
            + np.count_nonzero(self.top == DIRICHLET)
        )

    def dirichlet_measure(self) -> float:
        """Total length of the Dirichlet part of the boundary."""
        ny_d = np.count_nonzero(self.left == DIRICHLET) + np.count_nonzero(self.right == DIRICHLET)
        nx_d = np.count_nonzero(self.bottom == DIRICHLET) + np.count_nonzero(self.top == DIRICHLET)
        return float(ny_d) * self.hy + float(nx_d) * self.hx

    def cell_centers(self):
        """Arrays (xc, yc), each shaped (ny, nx)."""
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.hx
        y = y0 + (np.arange(self.ny) + 0.5) * self.hy
        return np.broadcast_to(x, (self.ny, self.nx)).copy(), np.broadcast_to(
            y[:, None], (self.ny, self.nx)
        ).copy()

    def xface_centers(self):
        """Arrays (x, y) at x-face centers, each shaped (ny, nx + 1)."""
        x0, y0 = self.origin
        x = x0 + np.arange(self.nx + 1) * self.hx
        y = y0 + (np.arange(self.ny) + 0.5) * self.hy
        return (
            np.broadcast_to(x, (self.ny, self.nx + 1)).copy(),
            np.broadcast_to(y[:, None], (self.ny, self.nx + 1)).copy(),
        )

    def yface_centers(self):
        """Arrays (x, y) at y-face centers, each shaped (ny + 1, nx)."""
        x0, y0 = self.origin
        x = x0 + (np.arange(self.nx) + 0.5) * self.hx
        y = y0 + np.arange(self.ny + 1) * self.hy
        return (
            np.broadcast_to(x, (self.ny + 1, self.nx)).copy(),
            np.broadcast_to(y[:, None], (self.ny + 1, self.nx)).copy(),
        )

    def cell_id(self, i, j) -> int:
        return j * self.nx + i

    def faces(self) -> Iterator[Face]:
        """Deterministic enumeration: x-faces then y-faces, row-major.

        Slow path for tests and small oracles; kernels use arrays directly.
        """
        nx, ny = self.nx, self.ny
        idx = 0
        for j in range(ny):
            for i in range(nx + 1):
                if i == 0:
                    yield Face(idx, 0, i, j, (self.cell_id(0, j),), (-1.0, 0.0),
                               self.hy, int(self.left[j]))
                elif i == nx:
                    yield Face(idx, 0, i, j, (self.cell_id(nx - 1, j),), (1.0, 0.0),
                               self.hy, int(self.right[j]))
                else:
                    yield Face(idx, 0, i, j,
                               (self.cell_id(i - 1, j), self.cell_id(i, j)),
                               (1.0, 0.0), self.hy, None)
                idx += 1
        for j in range(ny + 1):
            for i in range(nx):
                if j == 0:
                    yield Face(idx, 1, i, j, (self.cell_id(i, 0),), (0.0, -1.0),
                               self.hx, int(self.bottom[i]))
                elif j == ny:
                    yield Face(idx, 1, i, j, (self.cell_id(i, ny - 1),), (0.0, 1.0),
                               self.hx, int(self.top[i]))
                else:
                    yield Face(idx, 1, i, j,
                               (self.cell_id(i, j - 1), self.cell_id(i, j)),
                               (0.0, 1.0), self.hx, None)
                idx += 1

    def normal_closure(self) -> float:
        """Max over cells of |sum of outward normal * area| (should be 0)."""
        sx = np.zeros((self.ny, self.nx))
        sy = np.zeros((self.ny, self.nx))
        for face in self.faces():
            if len(face.cells) == 2:
                lo, hi = face.cells
                jlo, ilo = divmod(lo, self.nx)
                jhi, ihi = divmod(hi, self.nx)
                sx[jlo, ilo] += face.normal[0] * face.area
                sy[jlo, ilo] += face.normal[1] * face.area
                sx[jhi, ihi] -= face.normal[0] * face.area
                sy[jhi, ihi] -= face.normal[1] * face.area
            else:
                (k,) = face.cells
                j, i = divmod(k, self.nx)
                sx[j, i] += face.normal[0] * face.area
                sy[j, i] += face.normal[1] * face.area
        return float(np.max(np.hypot(sx, sy)))


def build_grid(nx, ny, extent, boundary: BoundarySpec, origin=(0.0, 0.0)) -> Grid:
    """Build a uniform grid over ``origin + [0, Lx] x [0, Ly]``.

    Raises ConfigurationError when the Dirichlet part of the boundary is
    empty ("Γ_D must have positive measure").
    """
    if nx < 1 or ny < 1:
        raise ConfigurationError("grid needs nx, ny >= 1")
    lx, ly = float(extent[0]), float(extent[1])
    if not (lx > 0.0 and ly > 0.0):
        raise ConfigurationError("grid extent must have positive side lengths")
    hx = lx / nx
    hy = ly / ny
    left, right, bottom, top = boundary.face_tags(nx, ny, hx, hy, origin)
    grid = Grid(nx=nx, ny=ny, hx=hx, hy=hy, origin=(float(origin[0]), float(origin[1])),
                left=left, right=right, bottom=bottom, top=top)
    if grid.n_dirichlet_faces() == 0:
        raise ConfigurationError("Γ_D must have positive measure")
    return grid
