"""Per-column quadratic program for FRS turning fractions.

Each origin road's FRS column is the least-norm point of the probability
simplex intersected with per-exit bounds. This script solves a few columns
by hand, walks the relaxation ladder, and then assembles bounds from a
traffic state to show where the bounds come from.

    python demos/02_tendency_qp.py
"""
import numpy as np

from frs_noir import (
    EquityFloor,
    Infeasible,
    OutflowProfile,
    TendencyMatrix,
    TrafficState,
    assemble_bounds,
    assemble_dissensus_matrix,
    build_graph,
    project_box_simplex,
    solve_tendencies,
    step_frs_cars,
)
from frs_noir.optimizer import solve_column

np.set_printoptions(precision=4, suppress=True)

print("no bounds          ->", project_box_simplex(np.zeros(4), np.full(4, np.inf)))
print("first exit <= 0.2  ->", project_box_simplex([0, 0, 0], [0.2, 1, 1]))
print("first exit >= 0.6  ->", project_box_simplex([0.6, 0, 0], [1, 1, 1]))
try:
    project_box_simplex([0.5, 0.3, 0.4], [1, 1, 1])
except Infeasible as exc:
    print("lower bounds sum to 1.2 ->", exc)

res = solve_column(np.array([0.5, 0.3, 0.4]), np.ones(3))
print(f"ladder: tier {res.tier}, q_hat = {res.q_hat_column}, dropped because {res.infeasible}")

# road 2 is short of FRS cars; road 1 feeds both 2 and 3
g = build_graph(3, [(1, 2), (1, 3), (2, 1), (3, 1)])
state = TrafficState(0, x=[30, 20, 20], x_hat=[10, 2, 6])
p = OutflowProfile([0.6, 0.5, 0.3])
Q = TendencyMatrix(g, [0.5, 0.5, 1.0, 1.0])
floor = EquityFloor.constant(3, 2.0)
bounds = assemble_bounds(g, state, p, Q, np.zeros(3), floor)
cb = bounds[0]
print(f"\ncolumn of road 1: e = {cb.e}, exits {cb.rows + 1}, lo = {cb.lo}, up = {cb.up}")
Qh, outcomes = solve_tendencies(bounds, g)
print("FRS turning fractions from road 1:", Qh.column(0)[1], "tiers:", [o.tier for o in outcomes])
nxt = step_frs_cars(state.x_hat, assemble_dissensus_matrix(Qh, p))
print("next FRS densities:", nxt, "(floor 2)")
