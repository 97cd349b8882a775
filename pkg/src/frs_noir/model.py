"""Outflow/tendency probabilities and the column-stochastic traffic update.

All-car densities evolve as ``x' = A x + d`` and FRS densities as
``x_hat' = A_hat x_hat`` where ``A = I + (Q - I) P``. The same update can be
written cell by cell as ``x + y - z + d`` with outflow ``z = p * x`` and
inflow ``y_i = sum_j q[i, j] z_j``; both forms are provided.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import NoirGraph

STOCHASTIC_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


class ColumnNotStochastic(ValueError):
    def __init__(self, column, total):
        self.column = column
        self.total = total
        super().__init__(f"ColumnNotStochastic(column {column + 1} sums to {total!r})")


class NegativeDensity(ValueError):
    pass


class EmptyRange(ValueError):
    pass


class NegativeStateWarning(RuntimeWarning):
    """An all-car update produced a negative density."""


def _vector(values, n, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({n},)")
    return arr


@dataclass(frozen=True, eq=False)
class OutflowProfile:
    """Per-road fraction of cars leaving the road in one step, each in (0, 1]."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1:
            raise DimensionMismatch("outflow profile must be one-dimensional")
        if not np.all((p > 0) & (p <= 1)):
            raise ValueError("outflow probabilities must lie in (0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.p)


@dataclass(frozen=True, eq=False)
class TendencyMatrix:
    """Turning fractions stored per graph edge, one stochastic column per origin road.

    ``values[e]`` is the share of road ``graph.src[e]``'s outflow that moves
    onto road ``graph.dst[e]``.
    """

    graph: NoirGraph
    values: np.ndarray
    role: str = "all"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.graph.n_edges,):
            raise DimensionMismatch(
                f"tendency values have shape {v.shape}, expected ({self.graph.n_edges},)"
            )
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("tendency probabilities must be finite and nonnegative")
        sums = column_sums(self.graph, v)
        err = np.abs(sums - 1.0)
        worst = int(np.argmax(err))
        if err[worst] > STOCHASTIC_TOL:
            raise ColumnNotStochastic(worst, float(sums[worst]))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(destination roads, probabilities) of 0-based column ``j``."""
        sl = self.graph.out_edges(j)
        return self.graph.dst[sl], self.values[sl]

    def to_dense(self) -> np.ndarray:
        Q = np.zeros((self.graph.n, self.graph.n))
        Q[self.graph.dst, self.graph.src] = self.values
        return Q

    @classmethod
    def from_dense(cls, graph: NoirGraph, Q, role="all") -> "TendencyMatrix":
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (graph.n, graph.n):
            raise DimensionMismatch(f"dense tendency matrix has shape {Q.shape}")
        off = Q.copy()
        off[graph.dst, graph.src] = 0.0
        if np.any(off != 0):
            raise ValueError("tendency matrix has entries outside the graph edge set")
        return cls(graph, Q[graph.dst, graph.src], role)

    @classmethod
    def uniform(cls, graph: NoirGraph, role="all") -> "TendencyMatrix":
        deg = np.diff(graph.col_ptr)
        return cls(graph, 1.0 / deg[graph.src], role)


def column_sums(graph: NoirGraph, values) -> np.ndarray:
    # reduceat sums each contiguous column block in a fixed order
    return np.add.reduceat(np.asarray(values, dtype=float), graph.col_ptr[:-1])


@dataclass(frozen=True, eq=False)
class TrafficState:
    k: int
    x: np.ndarray
    x_hat: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        xh = np.array(self.x_hat, dtype=float)
        if x.shape != xh.shape or x.ndim != 1:
            raise DimensionMismatch("x and x_hat must be 1-d arrays of equal length")
        if np.any(x < 0) or np.any(xh < 0):
            raise NegativeDensity("densities must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x_hat", xh)

    def upper_excess(self) -> np.ndarray:
        """Amount by which FRS density exceeds all-car density, per road (0 when fine)."""
        return np.maximum(self.x_hat - self.x, 0.0)


class FlowVector(NamedTuple):
    z: np.ndarray  # outflow per road
    y: np.ndarray  # inflow per road


def _check_pq(q: TendencyMatrix, p: OutflowProfile):
    if len(p) != q.graph.n:
        raise DimensionMismatch(f"outflow profile has {len(p)} roads, graph has {q.graph.n}")


def assemble_dissensus_matrix(q: TendencyMatrix, p: OutflowProfile) -> np.ndarray:
    """Dense ``A = I + (Q - I) P``: diagonal ``1 - p_i``, entry (i, j) ``q[i, j] * p_j``."""
    _check_pq(q, p)
    g = q.graph
    A = np.diag(1.0 - p.p)
    A[g.dst, g.src] = q.values * p.p[g.src]
    return A


def max_column_error(A: np.ndarray) -> float:
    return float(np.max(np.abs(A.sum(axis=0) - 1.0)))


def compute_flows(density, p: OutflowProfile, q: TendencyMatrix) -> FlowVector:
    _check_pq(q, p)
    g = q.graph
    density = _vector(density, g.n, "density")
    if np.any(density < 0):
        raise NegativeDensity("density must be nonnegative")
    z = p.p * density
    y = np.zeros(g.n)
    np.add.at(y, g.dst, q.values * z[g.src])
    return FlowVector(z, y)


def step_all_cars(x, a: np.ndarray, d) -> np.ndarray:
    """``A x + d``. Negative results are returned as-is with a NegativeStateWarning."""
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionMismatch(f"transition matrix has shape {a.shape}")
    x = _vector(x, n, "x")
    d = _vector(d, n, "d")
    nxt = a @ x + d
    if np.any(nxt < 0):
        bad = np.flatnonzero(nxt < 0) + 1
        warnings.warn(f"negative all-car density at roads {bad.tolist()}", NegativeStateWarning, stacklevel=2)
    return nxt


def step_all_cars_flows(x, p: OutflowProfile, q: TendencyMatrix, d) -> np.ndarray:
    """Same update as ``step_all_cars`` written as ``x + y - z + d``."""
    z, y = compute_flows(x, p, q)
    return np.asarray(x, dtype=float) + y - z + _vector(d, q.graph.n, "d")


def step_frs_cars(x_hat, a_hat: np.ndarray) -> np.ndarray:
    n = a_hat.shape[0]
    if a_hat.shape != (n, n):
        raise DimensionMismatch(f"transition matrix has shape {a_hat.shape}")
    return a_hat @ _vector(x_hat, n, "x_hat")


def sample_outflow(g: NoirGraph, rng: np.random.Generator, p_range) -> OutflowProfile:
    lo, hi = p_range
    if not 0 < lo <= hi <= 1:
        raise EmptyRange(f"outflow range must satisfy 0 < min <= max <= 1, got {p_range!r}")
    return OutflowProfile(rng.uniform(lo, hi, g.n) if lo < hi else np.full(g.n, float(lo)))


def sample_tendencies(g: NoirGraph, rng: np.random.Generator, role="all") -> TendencyMatrix:
    """Random stochastic columns on the edge support; single-exit columns get 1.0."""
    w = rng.uniform(0.0, 1.0, g.n_edges)
    w = np.where(w > 0, w, 1.0)
    v = w / column_sums(g, w)[g.src]
    deg = np.diff(g.col_ptr)
    v[deg[g.src] == 1] = 1.0
    # a final per-column renormalization keeps sums within a few ulps of one
    v = v / column_sums(g, v)[g.src]
    return TendencyMatrix(g, v, role)


def sample_environment(g: NoirGraph, rng: np.random.Generator, p_range):
    return sample_outflow(g, rng, p_range), sample_tendencies(g, rng)
