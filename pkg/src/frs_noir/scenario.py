"""Scenario files, seeded boundary inputs, the step loop, and trajectory files.

Every random draw comes from a generator keyed on ``(seed, purpose, k)`` so a
run is a pure function of the scenario document, and extending the horizon
does not shift earlier draws.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, NoirGraph, graph_from_dict
from .model import (
    STOCHASTIC_TOL,
    OutflowProfile,
    TendencyMatrix,
    TrafficState,
    assemble_dissensus_matrix,
    compute_flows,
    max_column_error,
    sample_outflow,
    sample_tendencies,
)
from .optimizer import EquityFloor, assemble_bounds, check_matrix_form, solve_tendencies

SCHEMA_VERSION = 1
DEFAULT_X_HAT_MIN = 2.0
DEFAULT_U_MAX = 5
MASS_TOL = 1e-9

_OUTFLOW, _ENVIRONMENT, _BOUNDARY = 0, 1, 2

STEPS_HEADER = ["k", "road", "x", "x_hat", "d", "tier", "clamped", "upper_violation", "floor_violation"]
STEPS_FILE = "steps.csv"
SUMMARY_FILE = "summary.json"


class ScenarioError(ValueError):
    code = "ScenarioError"


class ParseError(ScenarioError):
    code = "ParseError"

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"ParseError at {location}: {message}")


class SchemaViolation(ScenarioError):
    code = "SchemaViolation"

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"SchemaViolation({field_name}): {message}")


class InfeasibleInitialState(ScenarioError):
    code = "InfeasibleInitialState"


class InvariantViolation(RuntimeError):
    """A conservation or stochasticity check failed inside the step loop."""


@dataclass(eq=False)
class Scenario:
    graph: NoirGraph
    x0: np.ndarray
    x_hat0: np.ndarray
    floor: EquityFloor
    horizon: int
    seed: int
    p_range: tuple | None = None
    p: np.ndarray | None = None
    u_max: int = DEFAULT_U_MAX
    clamp_outlets: bool = True
    strict_check: bool = True
    document: dict = field(default_factory=dict)

    def with_overrides(self, steps=None, seed=None) -> "Scenario":
        doc = dict(self.document)
        if steps is not None:
            doc["horizon"] = steps
        if seed is not None:
            doc["seed"] = seed
        return load_scenario(doc)


_FIELDS = {"version", "graph", "init", "x_hat_min", "horizon", "seed", "p", "u_max", "clamp_outlets", "strict_check"}
_GRAPH_FIELDS = {"n", "edges", "inlets", "outlets"}


def _int(doc, key, minimum, default=None):
    v = doc.get(key, default)
    if v is None:
        raise SchemaViolation(key, "required field missing")
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise SchemaViolation(key, f"expected an integer >= {minimum}, got {v!r}")
    return v


def _bool(doc, key, default):
    v = doc.get(key, default)
    if not isinstance(v, bool):
        raise SchemaViolation(key, f"expected true/false, got {v!r}")
    return v


def _per_road(value, n, name):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(n, float(value))
    if not isinstance(value, list) or len(value) != n:
        raise SchemaViolation(name, f"expected a number or a list of {n} numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaViolation(name, "entries must be numbers")
    return np.array(value, dtype=float)


def load_scenario(document) -> Scenario:
    """Parse and validate a scenario from JSON text or an already-decoded dict."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaViolation("<root>", "scenario must be a JSON object")
    unknown = sorted(set(doc) - _FIELDS)
    if unknown:
        raise SchemaViolation(unknown[0], "unknown field")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaViolation("version", f"unsupported version {doc.get('version')!r}, expected {SCHEMA_VERSION}")

    gdoc = doc.get("graph")
    if not isinstance(gdoc, dict):
        raise SchemaViolation("graph", "required object missing")
    unknown = sorted(set(gdoc) - _GRAPH_FIELDS)
    if unknown:
        raise SchemaViolation(f"graph.{unknown[0]}", "unknown field")
    if "n" not in gdoc or "edges" not in gdoc:
        raise SchemaViolation("graph", "fields n and edges are required")
    if not isinstance(gdoc["edges"], list):
        raise SchemaViolation("graph.edges", "expected a list of [from, to] pairs")
    g = graph_from_dict(gdoc)  # GraphError propagates
    n = g.n

    horizon = _int(doc, "horizon", 0)
    seed = _int(doc, "seed", 0, default=0)
    u_max = _int(doc, "u_max", 0, default=DEFAULT_U_MAX)
    clamp = _bool(doc, "clamp_outlets", True)
    strict = _bool(doc, "strict_check", True)

    x_hat_min = _per_road(doc.get("x_hat_min", DEFAULT_X_HAT_MIN), n, "x_hat_min")
    if np.any(x_hat_min < 0):
        raise SchemaViolation("x_hat_min", "must be nonnegative")
    floor = EquityFloor(x_hat_min)

    p_range = p = None
    pdoc = doc.get("p", {"min": 0.3, "max": 0.6})
    if isinstance(pdoc, dict):
        if set(pdoc) != {"min", "max"}:
            raise SchemaViolation("p", "range form needs exactly min and max")
        lo, hi = pdoc["min"], pdoc["max"]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (lo, hi)) or not 0 < lo <= hi <= 1:
            raise SchemaViolation("p", "range must satisfy 0 < min <= max <= 1")
        p_range = (float(lo), float(hi))
    else:
        p = _per_road(pdoc, n, "p")
        if not np.all((p > 0) & (p <= 1)):
            raise SchemaViolation("p", "outflow probabilities must lie in (0, 1]")

    init = doc.get("init", {})
    if not isinstance(init, dict) or set(init) - {"x0", "x_hat0"}:
        raise SchemaViolation("init", "expected an object with x0 and/or x_hat0")
    x_hat0 = _per_road(init["x_hat0"], n, "init.x_hat0") if "x_hat0" in init else x_hat_min + 1.0
    x0 = _per_road(init["x0"], n, "init.x0") if "x0" in init else 2.0 * x_hat0
    if np.any(x0 < 0) or np.any(x_hat0 < 0):
        raise SchemaViolation("init", "densities must be nonnegative")
    over = np.flatnonzero(x_hat0 > x0)
    if over.size:
        raise InfeasibleInitialState(f"InfeasibleInitialState: x_hat0 > x0 at roads {(over + 1).tolist()}")
    under = np.flatnonzero(x_hat0 < x_hat_min)
    if under.size:
        raise InfeasibleInitialState(f"InfeasibleInitialState: x_hat0 below floor at roads {(under + 1).tolist()}")

    return Scenario(
        graph=g,
        x0=x0,
        x_hat0=x_hat0,
        floor=floor,
        horizon=horizon,
        seed=seed,
        p_range=p_range,
        p=p,
        u_max=u_max,
        clamp_outlets=clamp,
        strict_check=strict,
        document=doc,
    )


def read_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def substream(seed: int, purpose: int, k: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, purpose, k]))


@dataclass
class BoundaryInput:
    u: np.ndarray  # integer draws, zero off the boundary
    d: np.ndarray  # signed per-road exogenous change
    clamped: np.ndarray  # outlets whose withdrawal was cut


def sample_exogenous(scenario: Scenario, k: int, rng: np.random.Generator | None = None) -> BoundaryInput:
    """Uniform integers in 0..u_max on boundary roads; +u on inlets, -u on outlets."""
    g = scenario.graph
    if rng is None:
        rng = substream(scenario.seed, _BOUNDARY, k)
    # one draw per road keeps each road's sequence independent of the boundary sets
    draws = rng.integers(0, scenario.u_max + 1, size=g.n)
    sign = g.boundary_mask()
    u = np.where(sign != 0, draws, 0)
    return BoundaryInput(u=u, d=sign * u, clamped=np.zeros(g.n, dtype=bool))


def clamp_outlets(state: TrafficState, p: OutflowProfile, q_all: TendencyMatrix, inp: BoundaryInput, enabled=True) -> BoundaryInput:
    """Cap each outlet withdrawal at the cars that would otherwise remain on the road."""
    if not enabled:
        return inp
    g = q_all.graph
    _, y = compute_flows(state.x, p, q_all)
    available = (1.0 - p.p) * state.x + y
    d = inp.d.copy()
    clamped = np.zeros(g.n, dtype=bool)
    for i in g.outlets:
        if inp.u[i] > available[i]:
            d[i] = -available[i]
            clamped[i] = True
    return BoundaryInput(u=inp.u, d=d, clamped=clamped)


def outflow_for(scenario: Scenario) -> OutflowProfile:
    if scenario.p is not None:
        return OutflowProfile(scenario.p)
    return sample_outflow(scenario.graph, substream(scenario.seed, _OUTFLOW), scenario.p_range)


def environment_at(scenario: Scenario, k: int) -> TendencyMatrix:
    return sample_tendencies(scenario.graph, substream(scenario.seed, _ENVIRONMENT, k))


@dataclass(eq=False)
class Trajectory:
    scenario: Scenario
    p: np.ndarray
    x: np.ndarray  # (K+1, N)
    x_hat: np.ndarray
    d: np.ndarray  # row k holds the input applied from k to k+1; last row zero
    tier: np.ndarray  # row k holds column tiers used at step k; last row -1
    clamped: np.ndarray
    upper_violation: np.ndarray  # of state k; NaN when checks are off
    floor_violation: np.ndarray
    column_error: np.ndarray  # (K, 2): worst column-sum error of A_k and A_hat_k
    unreachable: int = 0

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    def all_tier0(self) -> np.ndarray:
        return np.all(self.tier[:-1] == 0, axis=1)

    def summary(self) -> dict:
        K = self.horizon
        tiers = self.tier[:-1]
        hist = {str(t): int(np.count_nonzero(tiers == t)) for t in (0, 1, 2)}
        checked = self.scenario.strict_check
        t0 = self.all_tier0()
        after_t0 = self.x_hat[1:][t0]
        return {
            "n": int(self.x.shape[1]),
            "horizon": int(K),
            "seed": int(self.scenario.seed),
            "total_x_per_step": [float(v) for v in self.x.sum(axis=1)],
            "total_xhat_initial": float(self.x_hat[0].sum()),
            "total_xhat_final": float(self.x_hat[-1].sum()),
            "min_xhat": float(self.x_hat.min()),
            "min_xhat_after_tier0_steps": float(after_t0.min()) if after_t0.size else None,
            "tier_histogram": hist,
            "tier0_step_fraction": float(t0.mean()) if K else 1.0,
            "violation_counts": {
                "upper": int(np.count_nonzero(self.upper_violation > 1e-9)) if checked else None,
                "floor": int(np.count_nonzero(self.floor_violation > 1e-9)) if checked else None,
                "clamped": int(np.count_nonzero(self.clamped)),
                "unreachable": int(self.unreachable),
            },
            "max_column_error": {
                "A": float(self.column_error[:, 0].max()) if K else 0.0,
                "A_hat": float(self.column_error[:, 1].max()) if K else 0.0,
            },
            "outflow_p": [float(v) for v in self.p],
            "config_echo": self.scenario.document,
        }


def run(scenario: Scenario) -> Trajectory:
    g = scenario.graph
    n, K = g.n, scenario.horizon
    P = outflow_for(scenario)
    floor = scenario.floor

    X = np.empty((K + 1, n))
    XH = np.empty((K + 1, n))
    D = np.zeros((K + 1, n))
    T = np.full((K + 1, n), -1, dtype=np.int8)
    C = np.zeros((K + 1, n), dtype=bool)
    UV = np.full((K + 1, n), np.nan)
    FV = np.full((K + 1, n), np.nan)
    colerr = np.zeros((K, 2))
    unreachable = 0

    state = TrafficState(0, scenario.x0, scenario.x_hat0)
    X[0], XH[0] = state.x, state.x_hat
    if scenario.strict_check:
        rep = check_matrix_form(g, None, state.x, state.x_hat, floor)
        UV[0], FV[0] = rep.upper_violation, rep.floor_violation
    xhat_total = state.x_hat.sum()

    for k in range(K):
        Q = environment_at(scenario, k)
        inp = clamp_outlets(state, P, Q, sample_exogenous(scenario, k), scenario.clamp_outlets)
        bounds = assemble_bounds(g, state, P, Q, inp.d, floor)
        unreachable += sum(len(cb.diagnostics) for cb in bounds)
        Qh, outcomes = solve_tendencies(bounds, g)

        A = assemble_dissensus_matrix(Q, P)
        Ah = assemble_dissensus_matrix(Qh, P)
        colerr[k] = max_column_error(A), max_column_error(Ah)
        if colerr[k].max() > STOCHASTIC_TOL:
            raise InvariantViolation(f"step {k}: column sums off by {colerr[k].max():.3e}")

        x1 = A @ state.x + inp.d
        xh1 = Ah @ state.x_hat
        if abs(x1.sum() - state.x.sum() - inp.d.sum()) > MASS_TOL:
            raise InvariantViolation(f"step {k}: all-car mass balance broken")
        if abs(xh1.sum() - xhat_total) > 1e-6:
            raise InvariantViolation(f"step {k}: FRS total drifted to {xh1.sum()!r}")
        if np.any(x1 < -MASS_TOL):
            raise InvariantViolation(
                f"step {k}: negative all-car density at roads {(np.flatnonzero(x1 < -MASS_TOL) + 1).tolist()}"
                + ("" if scenario.clamp_outlets else " (outlet clamping is off)")
            )
        # a fully drained outlet can come out at -1e-16
        x1 = np.maximum(x1, 0.0)
        xh1 = np.maximum(xh1, 0.0)

        D[k], C[k] = inp.d, inp.clamped
        T[k] = [o.tier for o in outcomes]
        if scenario.strict_check:
            rep = check_matrix_form(g, state, x1, xh1, floor)
            UV[k + 1], FV[k + 1] = rep.upper_violation, rep.floor_violation
        state = TrafficState(k + 1, x1, xh1)
        X[k + 1], XH[k + 1] = x1, xh1

    return Trajectory(scenario, P.p.copy(), X, XH, D, T, C, UV, FV, colerr, unreachable)


def _fmt(v) -> str:
    return repr(float(v))


def write_trajectory(traj: Trajectory, destination) -> tuple[str, str]:
    """Write ``steps.csv`` and ``summary.json`` into ``destination``."""
    os.makedirs(destination, exist_ok=True)
    steps_path = os.path.join(destination, STEPS_FILE)
    summary_path = os.path.join(destination, SUMMARY_FILE)
    K1, n = traj.x.shape
    with open(steps_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEPS_HEADER)
        for k in range(K1):
            for i in range(n):
                w.writerow([
                    k, i + 1,
                    _fmt(traj.x[k, i]), _fmt(traj.x_hat[k, i]), _fmt(traj.d[k, i]),
                    int(traj.tier[k, i]), int(traj.clamped[k, i]),
                    _fmt(traj.upper_violation[k, i]), _fmt(traj.floor_violation[k, i]),
                ])
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(traj.summary(), fh, indent=2)
        fh.write("\n")
    return steps_path, summary_path


def read_steps(path) -> dict:
    """Load a steps file back into (K+1, N) arrays keyed by column name."""
    if os.path.isdir(path):
        path = os.path.join(path, STEPS_FILE)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != STEPS_HEADER:
        raise ValueError(f"{path}: not a steps file")
    body = np.array(rows[1:], dtype=object)
    k = body[:, 0].astype(int)
    road = body[:, 1].astype(int)
    K1, n = k.max() + 1, road.max()
    out = {"k": np.arange(K1), "road": np.arange(1, n + 1)}
    for c, name in enumerate(STEPS_HEADER[2:], start=2):
        col = body[:, c].astype(float)
        arr = np.empty((K1, n))
        arr[k, road - 1] = col
        out[name] = arr
    return out


def read_summary(path) -> dict:
    if os.path.isdir(path):
        path = os.path.join(path, SUMMARY_FILE)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


__all__ = [
    "BoundaryInput",
    "GraphError",
    "InfeasibleInitialState",
    "InvariantViolation",
    "ParseError",
    "Scenario",
    "ScenarioError",
    "SchemaViolation",
    "Trajectory",
    "clamp_outlets",
    "load_scenario",
    "read_scenario",
    "read_steps",
    "read_summary",
    "run",
    "sample_exogenous",
    "write_trajectory",
]
