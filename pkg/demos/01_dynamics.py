"""Column-stochastic traffic update on a small network.

Builds a three-road network where road 1 splits onto roads 2 and 3, shows the
transition matrix built from outflow and turning probabilities, and checks
that the matrix update and the cell-by-cell inflow/outflow update agree.

    python demos/01_dynamics.py
"""
import numpy as np

from frs_noir import (
    OutflowProfile,
    TendencyMatrix,
    assemble_dissensus_matrix,
    build_graph,
    compute_flows,
    neighbors,
    step_all_cars,
    step_all_cars_flows,
    step_frs_cars,
)

np.set_printoptions(precision=3, suppress=True)

g = build_graph(3, [(1, 2), (1, 3), (2, 1), (3, 1)], inlets=[2], outlets=[3])
print("exits of road 1:", neighbors(g, 1, "out"))
print("entries of road 1:", neighbors(g, 1, "in"))

# a quarter of road 1's outflow turns onto road 2, the rest onto road 3
Q = TendencyMatrix(g, [0.25, 0.75, 1.0, 1.0])
p = OutflowProfile([0.5, 0.4, 0.8])
A = assemble_dissensus_matrix(Q, p)
print("\ntransition matrix A = I + (Q - I) P:")
print(A)
print("column sums:", A.sum(axis=0))

x = np.array([8.0, 5.0, 2.0])
d = np.array([0.0, 3.0, -1.0])  # three cars arrive on road 2, one leaves road 3
z, y = compute_flows(x, p, Q)
print("\noutflow z =", z, " inflow y =", y)
print("matrix form  A x + d    =", step_all_cars(x, A, d))
print("flow form    x + y - z + d =", step_all_cars_flows(x, p, Q, d))

# FRS cars have no exogenous term, so their total never changes
x_hat = np.array([3.0, 2.0, 1.0])
for k in range(5):
    x_hat = step_frs_cars(x_hat, A)
    print(f"k={k + 1}: x_hat = {x_hat}, total = {x_hat.sum():.12f}")
