"""Per-step choice of FRS turning fractions.

For each origin road ``j`` the FRS column ``q_hat[:, j]`` minimizes
``0.5 * sum(q_hat**2)`` over the simplex, with per-edge bounds coming from
two scalar constraints per edge (j -> i):

    e_j * q_hat[i, j] <= h[i, j]      keeps FRS cars below all cars on road i
   -e_j * q_hat[i, j] <= s_i          keeps road i above its FRS floor

with ``e_j = p_j x_hat_j``, ``h[i, j] = (1 - p_i)(x_i - x_hat_i) + q[i, j] p_j x_j + d_i``
and ``s_i = (1 - p_i) x_hat_i - x_hat_min_i``. Columns do not interact, so each
one is a least-norm point of a box-intersected simplex. When a column is
infeasible the floor bounds are dropped first (tier 1), then the upper bounds
too (tier 2, which is the uniform column).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import NoirGraph
from .model import (
    DimensionMismatch,
    OutflowProfile,
    TendencyMatrix,
    TrafficState,
    _vector,
)

SUM_TOL = 1e-12
UPPER_CAP = 1.0 + 1e-12


class Infeasible(ValueError):
    """Empty box-simplex. ``condition`` is one of crossed_bounds, lower_sum, upper_sum."""

    def __init__(self, condition, detail=""):
        self.condition = condition
        super().__init__(f"Infeasible({condition}){': ' + detail if detail else ''}")


@dataclass(frozen=True, eq=False)
class EquityFloor:
    x_hat_min: np.ndarray

    def __post_init__(self):
        v = np.array(self.x_hat_min, dtype=float)
        if v.ndim != 1 or np.any(v < 0):
            raise ValueError("equity floor must be a nonnegative vector")
        object.__setattr__(self, "x_hat_min", v)

    @classmethod
    def constant(cls, n, value=2.0):
        return cls(np.full(n, float(value)))


@dataclass
class ColumnBounds:
    column: int  # 0-based origin road
    rows: np.ndarray  # 0-based destination roads, in edge order
    lo: np.ndarray
    up: np.ndarray
    e: float
    diagnostics: list = field(default_factory=list)


@dataclass
class SolveOutcome:
    q_hat_column: np.ndarray
    tier: int
    objective: float
    infeasible: tuple = ()  # conditions hit on the way down the ladder


def project_box_simplex(lo, up) -> np.ndarray:
    """Least-norm ``q`` with ``sum(q) == 1`` and ``lo <= q <= up``.

    The minimizer is ``clip(lam, lo, up)`` for the scalar ``lam`` solving
    ``sum(clip(lam, lo, up)) == 1``; that sum is piecewise linear and
    nondecreasing in ``lam`` with kinks at the bounds, so sorting the kinks
    and walking the segments finds ``lam`` exactly.
    """
    lo = np.asarray(lo, dtype=float)
    up = np.asarray(up, dtype=float)
    if lo.ndim != 1 or lo.shape != up.shape or lo.size == 0:
        raise DimensionMismatch("lo and up must be nonempty 1-d arrays of equal length")
    # columns have a handful of entries; plain floats beat numpy call overhead here
    L, U = lo.tolist(), up.tolist()
    for i, (a, b) in enumerate(zip(L, U)):
        if not a >= 0 or b != b:
            raise ValueError("lower bounds must be nonnegative and bounds must not be NaN")
        if a > b:
            raise Infeasible("crossed_bounds", f"lo[{i}]={a!r} > up[{i}]={b!r}")
    slo = math.fsum(L)
    if slo > 1.0 + SUM_TOL:
        raise Infeasible("lower_sum", f"lower bounds sum to {slo!r} > 1")
    U = [b if b < UPPER_CAP else UPPER_CAP for b in U]
    sup = math.fsum(U)
    if sup < 1.0 - SUM_TOL:
        raise Infeasible("upper_sum", f"upper bounds sum to {sup!r} < 1")

    if slo >= 1.0:
        return lo.copy()
    if sup <= 1.0:
        return np.array(U)

    # (knot, slope change): +1 where a coordinate leaves its lower bound, -1 where it hits the upper
    knots = sorted([(a, 0, 1) for a in L] + [(b, 1, -1) for b in U])
    f = slo  # sum(clip(lam, lo, up)) at the current knot
    slope = 0
    lam = knots[-1][0]
    for (t, _, dk), (t_next, _, _) in zip(knots, knots[1:]):
        slope += dk
        f_next = f + slope * (t_next - t)
        if f_next >= 1.0 and slope > 0:
            lam = t + (1.0 - f) / slope
            break
        f = f_next
    return np.array([min(max(lam, a), b) for a, b in zip(L, U)])


def assemble_bounds(
    g: NoirGraph,
    state: TrafficState,
    p: OutflowProfile,
    q_all: TendencyMatrix,
    d,
    floor: EquityFloor,
) -> list[ColumnBounds]:
    """Per-column bounds on the FRS turning fractions for the current step.

    An origin road with no FRS outflow (``e_j == 0``) cannot influence either
    constraint; its bounds are left open and a ``ConstraintUnreachable``
    diagnostic is attached when a constraint would be violated anyway.
    """
    n = g.n
    if len(state.x) != n or len(p) != n or q_all.graph.n != n or len(floor.x_hat_min) != n:
        raise DimensionMismatch("state, outflow profile, tendencies and floor must match the graph")
    d = _vector(d, n, "d")
    lo, up, e, h, s = _edge_bounds(g, state.x, state.x_hat, p.p, q_all.values, d, floor.x_hat_min)

    out = []
    for j in range(n):
        sl = g.out_edges(j)
        cb = ColumnBounds(j, g.dst[sl], lo[sl], up[sl], float(e[j]))
        if e[j] <= 0:
            for i, hij in zip(cb.rows, h[sl]):
                if hij < 0:
                    cb.diagnostics.append(("ConstraintUnreachable", "upper", int(i) + 1, float(hij)))
                if s[i] < 0:
                    cb.diagnostics.append(("ConstraintUnreachable", "floor", int(i) + 1, float(s[i])))
        out.append(cb)
    return out


def _edge_bounds(g, x, x_hat, p, q, d, x_hat_min):
    src, dst = g.src, g.dst
    e = p * x_hat
    h = (1.0 - p[dst]) * (x[dst] - x_hat[dst]) + q * p[src] * x[src] + d[dst]
    s = (1.0 - p) * x_hat - x_hat_min
    ej = e[src]
    active = ej > 0
    safe = np.where(active, ej, 1.0)
    up = np.where(active, h / safe, np.inf)
    lo = np.where(active, np.maximum(0.0, -s[dst] / safe), 0.0)
    return lo, up, e, h, s


def solve_column(lo, up) -> SolveOutcome:
    """Walk the relaxation ladder for one column; tier 2 always succeeds."""
    hit = []
    for tier, (l, u) in enumerate(((lo, up), (np.zeros_like(lo), up))):
        try:
            q = project_box_simplex(l, u)
        except Infeasible as exc:
            hit.append(exc.condition)
            continue
        return SolveOutcome(q, tier, 0.5 * float(q @ q), tuple(hit))
    q = np.full(len(lo), 1.0 / len(lo))
    return SolveOutcome(q, 2, 0.5 * float(q @ q), tuple(hit))


def solve_tendencies(bounds: list[ColumnBounds], g: NoirGraph) -> tuple[TendencyMatrix, list[SolveOutcome]]:
    if len(bounds) != g.n:
        raise DimensionMismatch(f"expected {g.n} column bounds, got {len(bounds)}")
    values = np.empty(g.n_edges)
    outcomes = []
    for cb in bounds:
        res = solve_column(cb.lo, cb.up)
        values[g.out_edges(cb.column)] = res.q_hat_column
        outcomes.append(res)
    return TendencyMatrix(g, values, role="frs"), outcomes


@dataclass
class MatrixFormReport:
    upper_violation: np.ndarray  # max(x_hat' - x', 0)
    floor_violation: np.ndarray  # max(x_hat_min - x_hat', 0)
    upper_ok: np.ndarray
    floor_ok: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(self.upper_ok.all() and self.floor_ok.all())


def check_matrix_form(g: NoirGraph, state, next_x, next_x_hat, floor: EquityFloor, tol=1e-9) -> MatrixFormReport:
    """Report whether ``x_hat' <= x'`` and ``x_hat' >= x_hat_min`` hold after a step."""
    n = g.n
    if state is not None and len(state.x) != n:
        raise DimensionMismatch("state does not match the graph")
    nx = _vector(next_x, n, "next_x")
    nxh = _vector(next_x_hat, n, "next_x_hat")
    fl = _vector(floor.x_hat_min, n, "x_hat_min")
    upper = np.maximum(nxh - nx, 0.0)
    low = np.maximum(fl - nxh, 0.0)
    return MatrixFormReport(upper, low, upper <= tol, low <= tol)
