"""Reaction terms g(t, x, u): catalog, evaluation, hypothesis validation.

Every term declares a Lipschitz constant (in u, over [-1, 1]) and a
one-sided growth bound R(t); the validator samples both declarations on the
grid, a time grid and an r-grid, reporting worst-case violations with
witnesses.  Condition tags follow the model hypotheses: "G1" (square
integrability at the extreme densities, sampled as boundedness), "G2" (the
one-sided R(t) bound), "G3"/"G4" (divergence dominates the reaction at the
ceilings), "G5" (no loss at vacuum), and "condcompress" (the absorption-term
specialization of G3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ReactionDomainError
from .grid import Grid


def _as_cellwise(value, name):
    """Scalar or per-cell array parameter."""
    if np.isscalar(value):
        return float(value)
    arr = np.asarray(value, dtype=float)
    if not np.isfinite(arr).all():
        raise ConfigurationError(f"{name} must be finite")
    return arr


def cellwise(value, shape):
    """Materialize a scalar / flat-list / array parameter on the cell grid."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and arr.size == shape[0] * shape[1]:
        return arr.reshape(shape)
    return np.broadcast_to(arr, shape)


@dataclass(frozen=True)
class ZeroReaction:
    kind: str = "zero"
    lipschitz: float = 0.0
    growth_bound: float = 0.0

    def rate(self, t, xc, yc, u):
        return np.zeros_like(u)


@dataclass(frozen=True)
class ConstantReaction:
    """g independent of u: a fixed source/sink, scalar or per-cell."""

    value: object = 0.0
    kind: str = "constant"
    lipschitz: float = 0.0
    growth_bound: float = 0.0

    def rate(self, t, xc, yc, u):
        return cellwise(self.value, u.shape).copy()


@dataclass(frozen=True)
class AbsorptionTerm:
    """Relaxation toward an equilibrium density: g = -alpha u (u - u_eq)."""

    alpha: object = 1.0
    u_eq: object = 0.5
    kind: str = "absorption"
    lipschitz: float = None  # type: ignore[assignment]
    growth_bound: float = None  # type: ignore[assignment]

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        e = np.asarray(self.u_eq, dtype=float)
        if (a < 0).any():
            raise ConfigurationError("absorption rate alpha must be >= 0")
        if (e < 0).any() or (e > 1).any():
            raise ConfigurationError("equilibrium density u_eq must lie in [0, 1]")
        # max over r in [-1,1] of |dg/dr| = |alpha (u_eq - 2 r)| = alpha (2 + u_eq)
        canonical = float(np.max(a * (2.0 + e)))
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", canonical)
        if self.growth_bound is None:
            object.__setattr__(self, "growth_bound", canonical)

    def rate(self, t, xc, yc, u):
        alpha = cellwise(self.alpha, u.shape)
        u_eq = cellwise(self.u_eq, u.shape)
        return -alpha * u * (u - u_eq)


@dataclass(frozen=True)
class TabulatedReaction:
    """Piecewise-linear g(r), constant in (t, x)."""

    r_nodes: np.ndarray
    values: np.ndarray
    kind: str = "tabulated"
    lipschitz: float = None  # type: ignore[assignment]
    growth_bound: float = None  # type: ignore[assignment]

    def __post_init__(self):
        r = np.asarray(self.r_nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.size < 2 or r.size != v.size:
            raise ConfigurationError("tabulated reaction needs matching r_nodes/values, >= 2 entries")
        if not (np.diff(r) > 0).all():
            raise ConfigurationError("tabulated r_nodes must be strictly increasing")
        object.__setattr__(self, "r_nodes", r)
        object.__setattr__(self, "values", v)
        slopes = np.diff(v) / np.diff(r)
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", float(np.max(np.abs(slopes))))
        if self.growth_bound is None:
            object.__setattr__(self, "growth_bound", float(max(np.max(slopes), 0.0)))

    def rate(self, t, xc, yc, u):
        return np.interp(u, self.r_nodes, self.values)


@dataclass(frozen=True)
class TwoPhaseReaction:
    """g(., u) = g_plus(., u+) + g_minus(., u-) for segregation models."""

    plus: object
    minus: object
    kind: str = "two_phase"
    lipschitz: float = None  # type: ignore[assignment]
    growth_bound: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", max(self.plus.lipschitz, self.minus.lipschitz))
        if self.growth_bound is None:
            # u- decreases in u, so the one-sided bound picks up the full
            # Lipschitz constant of the minus part.
            object.__setattr__(
                self, "growth_bound", float(self.plus.growth_bound + self.minus.lipschitz)
            )

    def rate(self, t, xc, yc, u):
        up = np.maximum(u, 0.0)
        um = np.maximum(-u, 0.0)
        return self.plus.rate(t, xc, yc, up) + self.minus.rate(t, xc, yc, um)


@dataclass(frozen=True)
class FrozenSource:
    """Time-tabulated per-cell source f(t, x), independent of u.

    Used for frozen-source solves (fixed-point iteration, comparison and
    continuous-dependence probes).  Lookup is by exact step time.
    """

    times: np.ndarray
    tables: np.ndarray  # (nsteps, ny, nx)
    kind: str = "frozen"
    lipschitz: float = 0.0
    growth_bound: float = 0.0

    def rate(self, t, xc, yc, u):
        idx = int(np.searchsorted(self.times, t))
        if idx == len(self.times) or abs(self.times[idx] - t) > 1e-12:
            if idx > 0 and abs(self.times[idx - 1] - t) <= 1e-12:
                idx -= 1
            else:
                raise ConfigurationError(f"frozen source has no table at t={t!r}")
        return self.tables[idx]


def make_reaction(kind: str, **params):
    """Reaction catalog selected by name (scenario file interface)."""
    lip = params.pop("lipschitz", None)
    growth = params.pop("growth_bound", None)
    if kind == "zero":
        term = ZeroReaction()
    elif kind == "constant":
        term = ConstantReaction(value=_as_cellwise(params.get("value", 0.0), "constant reaction value"))
    elif kind == "absorption":
        term = AbsorptionTerm(
            alpha=_as_cellwise(params.get("alpha", 1.0), "alpha"),
            u_eq=_as_cellwise(params.get("u_eq", 0.5), "u_eq"),
            lipschitz=lip,
            growth_bound=growth,
        )
        return term
    elif kind == "tabulated":
        term = TabulatedReaction(
            r_nodes=params["r_nodes"], values=params["values"], lipschitz=lip, growth_bound=growth
        )
        return term
    elif kind == "two_phase":
        plus = params.get("plus")
        minus = params.get("minus")
        if not isinstance(plus, dict) or not isinstance(minus, dict):
            raise ConfigurationError("two_phase reaction needs plus: {...} and minus: {...}")
        term = TwoPhaseReaction(
            plus=make_reaction(plus["kind"], **{k: v for k, v in plus.items() if k != "kind"}),
            minus=make_reaction(minus["kind"], **{k: v for k, v in minus.items() if k != "kind"}),
            lipschitz=lip,
            growth_bound=growth,
        )
        return term
    else:
        raise ConfigurationError(
            f"unknown reaction kind {kind!r} "
            "(choose from zero, constant, absorption, two_phase, tabulated)"
        )
    if lip is not None:
        object.__setattr__(term, "lipschitz", float(lip))
    if growth is not None:
        object.__setattr__(term, "growth_bound", float(growth))
    return term


def evaluate_reaction(term, t, cell_xy, u, slack: float = 1e-12) -> float:
    """Scalar g(t, x, u) with the density-domain guard."""
    if not (-1.0 - slack <= u <= 1.0 + slack):
        raise ReactionDomainError(
            f"reaction evaluated at u={u!r}, outside [-1-{slack:g}, 1+{slack:g}]"
        )
    x = np.asarray([[float(cell_xy[0])]])
    y = np.asarray([[float(cell_xy[1])]])
    return float(term.rate(float(t), x, y, np.asarray([[float(u)]]))[0, 0])


def guard_density(u: np.ndarray, mode: str, slack: float) -> None:
    """Raise if a density field escaped its phase bounds plus slack."""
    lo = -slack if mode == "one_phase" else -1.0 - slack
    umin = float(u.min())
    umax = float(u.max())
    if umin < lo or umax > 1.0 + slack:
        raise ReactionDomainError(
            f"density out of bounds: min={umin!r}, max={umax!r}, slack={slack:g} ({mode})"
        )


@dataclass(frozen=True)
class ValidationReport:
    """Sampled check of the declared reaction hypotheses (G1, G2, Lipschitz)."""

    g1_bounded: bool
    max_abs_at_plus1: float
    max_abs_at_minus1: float
    lipschitz_ok: bool
    sampled_lipschitz: float
    declared_lipschitz: float
    lipschitz_witness: Optional[tuple]
    growth_ok: bool
    worst_growth_excess: float
    explicit_bounds_ok: bool
    worst_explicit_margin: float

    @property
    def passed(self) -> bool:
        return self.g1_bounded and self.lipschitz_ok and self.growth_ok and self.explicit_bounds_ok

    def failures(self):
        out = []
        if not self.g1_bounded:
            out.append("G1: g(.,±1) unbounded on samples")
        if not self.lipschitz_ok:
            out.append(
                f"Lipschitz declaration violated: sampled {self.sampled_lipschitz:.6g} "
                f"> declared {self.declared_lipschitz:.6g} at {self.lipschitz_witness}"
            )
        if not self.growth_ok:
            out.append(f"G2 violated: one-sided slope exceeds R by {self.worst_growth_excess:.3e}")
        if not self.explicit_bounds_ok:
            out.append(f"explicit G2 bound violated by {-self.worst_explicit_margin:.3e}")
        return out


def validate_assumptions(term, grid: Grid, t_samples, n_r: int = 33, rtol: float = 1e-9) -> ValidationReport:
    """Sample-based validation of the declared constants.

    Samples every grid cell at each time in ``t_samples`` on an r-grid of
    ``n_r`` points; difference quotients over consecutive r-nodes bound the
    quotients over all pairs, so consecutive pairs suffice.
    """
    t_samples = np.atleast_1d(np.asarray(t_samples, dtype=float))
    if t_samples.size < 2 or n_r < 2:
        raise ConfigurationError("validation needs >= 2 samples per axis")
    xc, yc = grid.cell_centers()
    r_grid = np.linspace(-1.0, 1.0, n_r)
    dec_l = float(term.lipschitz)
    max_p1 = 0.0
    max_m1 = 0.0
    sampled_l = 0.0
    witness = None
    worst_growth = -np.inf
    worst_explicit = np.inf
    g1_ok = True
    for t in t_samples:
        gr = np.stack([term.rate(t, xc, yc, np.full_like(xc, r)) for r in r_grid])
        if not np.isfinite(gr).all():
            g1_ok = False
            continue
        g_m1, g_p1 = gr[0], gr[-1]
        max_p1 = max(max_p1, float(np.max(np.abs(g_p1))))
        max_m1 = max(max_m1, float(np.max(np.abs(g_m1))))
        slopes = np.diff(gr, axis=0) / np.diff(r_grid)[:, None, None]
        abs_slopes = np.abs(slopes)
        local = float(abs_slopes.max())
        if local > sampled_l:
            sampled_l = local
            k, j, i = np.unravel_index(int(abs_slopes.argmax()), abs_slopes.shape)
            witness = (float(t), (int(i), int(j)), (float(r_grid[k]), float(r_grid[k + 1])))
        r_t = growth_bound_at(term, t)
        worst_growth = max(worst_growth, float(slopes.max()) - r_t)
        # explicit consequence of G2: -g^-(.,1) - R(1-r) <= g <= g^+(.,-1) + R(1+r)
        upper = np.maximum(g_m1, 0.0)[None] + r_t * (1.0 + r_grid)[:, None, None]
        lower = -np.maximum(-g_p1, 0.0)[None] - r_t * (1.0 - r_grid)[:, None, None]
        worst_explicit = min(
            worst_explicit, float(np.min(upper - gr)), float(np.min(gr - lower))
        )
    return ValidationReport(
        g1_bounded=g1_ok,
        max_abs_at_plus1=max_p1,
        max_abs_at_minus1=max_m1,
        lipschitz_ok=sampled_l <= dec_l + rtol * max(1.0, dec_l),
        sampled_lipschitz=sampled_l,
        declared_lipschitz=dec_l,
        lipschitz_witness=None if sampled_l <= dec_l + rtol * max(1.0, dec_l) else witness,
        growth_ok=worst_growth <= rtol,
        worst_growth_excess=float(max(worst_growth, 0.0)),
        explicit_bounds_ok=worst_explicit >= -rtol,
        worst_explicit_margin=float(worst_explicit),
    )


def growth_bound_at(term, t: float) -> float:
    """R(t); terms currently declare a constant bound."""
    return float(term.growth_bound)


@dataclass(frozen=True)
class ConditionEntry:
    name: str
    passed: bool
    margin: float
    witness: Optional[tuple]


@dataclass(frozen=True)
class ConditionReport:
    """Congestion-avoidance conditions with worst margins per condition."""

    entries: tuple

    def entry(self, name: str) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def passed(self, *names) -> bool:
        names = names or tuple(e.name for e in self.entries)
        return all(self.entry(n).passed for n in names)

    def summary(self) -> str:
        return "; ".join(
            f"{e.name}: {'pass' if e.passed else 'FAIL'} (margin {e.margin:.3e})"
            for e in self.entries
        )


def check_congestion_free(term, div_v: np.ndarray, t_samples, grid: Grid = None,
                          tol: float = 1e-12) -> ConditionReport:
    """Margins for G3 (div V >= g(.,1)), G4 (div V <= g(.,-1)), G5 (g(.,0) >= 0).

    For absorption terms the specialized "condcompress" margin
    (div V >= -alpha (1 - u_eq)) is reported as well; it coincides with G3.
    """
    t_samples = np.atleast_1d(np.asarray(t_samples, dtype=float))
    div_v = np.asarray(div_v, dtype=float)
    if grid is not None:
        xc, yc = grid.cell_centers()
    else:
        xc = np.zeros_like(div_v)
        yc = np.zeros_like(div_v)

    def worst(values):
        j, i = np.unravel_index(int(values.argmin()), values.shape)
        return float(values.min()), (int(i), int(j))

    g3 = np.inf
    g4 = np.inf
    g5 = np.inf
    w3 = w4 = w5 = None
    for t in t_samples:
        m3, c3 = worst(div_v - term.rate(t, xc, yc, np.ones_like(div_v)))
        m4, c4 = worst(term.rate(t, xc, yc, -np.ones_like(div_v)) - div_v)
        m5, c5 = worst(term.rate(t, xc, yc, np.zeros_like(div_v)))
        if m3 < g3:
            g3, w3 = m3, (float(t), c3)
        if m4 < g4:
            g4, w4 = m4, (float(t), c4)
        if m5 < g5:
            g5, w5 = m5, (float(t), c5)
    entries = [
        ConditionEntry("G3", g3 >= -tol, g3, w3 if g3 < -tol else None),
        ConditionEntry("G4", g4 >= -tol, g4, w4 if g4 < -tol else None),
        ConditionEntry("G5", g5 >= -tol, g5, w5 if g5 < -tol else None),
    ]
    if getattr(term, "kind", None) == "absorption":
        alpha = np.asarray(term.alpha, dtype=float)
        u_eq = np.asarray(term.u_eq, dtype=float)
        cc = div_v + alpha * (1.0 - u_eq)
        m, c = worst(np.broadcast_to(cc, div_v.shape))
        entries.append(ConditionEntry("condcompress", m >= -tol, m, c if m < -tol else None))
    return ConditionReport(entries=tuple(entries))
