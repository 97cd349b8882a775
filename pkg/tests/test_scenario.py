import copy
import csv
import json

import numpy as np
import pytest

from frs_noir import data_path, reference_scenario
from frs_noir.graph import DeadEndRoad
from frs_noir.model import OutflowProfile, TendencyMatrix, TrafficState
from frs_noir.scenario import (
    BoundaryInput,
    InfeasibleInitialState,
    InvariantViolation,
    ParseError,
    SchemaViolation,
    clamp_outlets,
    load_scenario,
    read_scenario,
    read_steps,
    read_summary,
    run,
    sample_exogenous,
    write_trajectory,
)

MINIMAL = {"version": 1, "graph": {"n": 2, "edges": [[1, 2], [2, 1]], "inlets": [1], "outlets": [2]}, "horizon": 5}


def doc(**kw):
    d = copy.deepcopy(MINIMAL)
    d.update(kw)
    return d


# -- loading -----------------------------------------------------------------


def test_minimal_defaults():
    sc = load_scenario(json.dumps(MINIMAL))
    np.testing.assert_array_equal(sc.floor.x_hat_min, [2, 2])
    assert sc.u_max == 5 and sc.clamp_outlets and sc.strict_check and sc.seed == 0
    np.testing.assert_array_equal(sc.x_hat0, [3, 3])
    np.testing.assert_array_equal(sc.x0, [6, 6])
    assert sc.p_range == (0.3, 0.6)


def test_initial_state_below_floor():
    with pytest.raises(InfeasibleInitialState):
        load_scenario(doc(init={"x_hat0": [1, 1]}))


def test_initial_state_above_all_cars():
    with pytest.raises(InfeasibleInitialState):
        load_scenario(doc(init={"x0": [5, 2], "x_hat0": [3, 3]}))


def test_reference_document():
    sc = read_scenario(data_path("reference_32.json"))
    assert sc.graph.n == 32
    assert [r + 1 for r in sc.graph.inlets] == list(range(1, 9))
    assert [r + 1 for r in sc.graph.outlets] == list(range(9, 17))
    np.testing.assert_array_equal(sc.floor.x_hat_min, np.full(32, 2.0))
    assert sc.u_max == 5


def test_parse_error_location():
    with pytest.raises(ParseError) as info:
        load_scenario('{"version": 1,\n "graph": }')
    assert info.value.location.startswith("line 2")


@pytest.mark.parametrize(
    "bad, field",
    [
        (doc(colour="red"), "colour"),
        (doc(version=2), "version"),
        (doc(horizon=-1), "horizon"),
        (doc(horizon=2.5), "horizon"),
        (doc(u_max=True), "u_max"),
        (doc(p={"min": 0.5}), "p"),
        (doc(p={"min": 0.7, "max": 0.5}), "p"),
        (doc(p=[0.5, 0.0]), "p"),
        (doc(x_hat_min=[1, 2, 3]), "x_hat_min"),
        (doc(clamp_outlets="yes"), "clamp_outlets"),
        (doc(init={"x1": 3}), "init"),
    ],
)
def test_schema_violations(bad, field):
    with pytest.raises(SchemaViolation) as info:
        load_scenario(bad)
    assert info.value.field == field


def test_missing_horizon():
    d = doc()
    del d["horizon"]
    with pytest.raises(SchemaViolation):
        load_scenario(d)


def test_graph_errors_propagate():
    with pytest.raises(DeadEndRoad):
        load_scenario(doc(graph={"n": 2, "edges": [[1, 2]], "inlets": [1], "outlets": [2]}))


# -- boundary inputs ---------------------------------------------------------


def test_exogenous_structure():
    sc = reference_scenario()
    sign = sc.graph.boundary_mask()
    for k in range(50):
        inp = sample_exogenous(sc, k)
        assert np.all(inp.d[16:] == 0)
        assert np.all(inp.d[:8] >= 0) and np.all(inp.d[8:16] <= 0)
        assert np.all((inp.u >= 0) & (inp.u <= 5))
        np.testing.assert_array_equal(inp.d, sign * inp.u)


def test_exogenous_zero_cap():
    sc = reference_scenario(u_max=0)
    assert not sample_exogenous(sc, 3).d.any()


def test_exogenous_deterministic():
    a, b = reference_scenario(), reference_scenario()
    for k in (0, 1, 99):
        np.testing.assert_array_equal(sample_exogenous(a, k).u, sample_exogenous(b, k).u)
    assert not np.array_equal(sample_exogenous(a, 0).u, sample_exogenous(reference_scenario(seed=99), 0).u)


def test_exogenous_covers_full_range():
    sc = reference_scenario()
    draws = np.concatenate([sample_exogenous(sc, k).u[:16] for k in range(200)])
    assert set(draws.tolist()) == set(range(6))


def _cycle_clamp_setup(u):
    sc = load_scenario(doc(p=[0.5, 0.5]))
    g = sc.graph
    state = TrafficState(0, [2.0, 1.0], [0.0, 0.0])
    inp = BoundaryInput(u=np.array([0, u]), d=np.array([0.0, -u]), clamped=np.zeros(2, bool))
    return state, OutflowProfile([0.5, 0.5]), TendencyMatrix.uniform(g), inp


def test_clamp_limits_withdrawal():
    # (1 - p) x = 0.5 on the outlet, inflow y = 0.5 * 2 = 1.0
    state, p, q, inp = _cycle_clamp_setup(5)
    out = clamp_outlets(state, p, q, inp)
    assert out.d[1] == pytest.approx(-1.5) and out.clamped[1]
    assert not out.clamped[0]


def test_clamp_leaves_ample_outlet():
    state, p, q, inp = _cycle_clamp_setup(3)
    state = TrafficState(0, [2.0, 20.0], [0.0, 0.0])
    out = clamp_outlets(state, p, q, inp)
    assert out.d[1] == -3 and not out.clamped.any()


def test_clamp_disabled_passthrough():
    state, p, q, inp = _cycle_clamp_setup(5)
    out = clamp_outlets(state, p, q, inp, enabled=False)
    assert out.d[1] == -5 and not out.clamped.any()


# -- runs --------------------------------------------------------------------


def test_horizon_zero():
    tr = run(load_scenario(doc(horizon=0)))
    assert tr.x.shape == (1, 2)
    np.testing.assert_array_equal(tr.x[0], [6, 6])


def test_closed_cycle_conserves_all_cars():
    sc = read_scenario(data_path("two_road.json"))
    assert sc.u_max == 0 and sc.horizon == 100
    tr = run(sc)
    totals = tr.x.sum(axis=1)
    assert np.all(np.abs(totals - totals[0]) < 1e-9)


def test_run_invariants_on_reference():
    tr = run(reference_scenario(horizon=200))
    assert tr.x.shape == (201, 32)
    assert np.all(tr.x >= 0)
    assert np.all(tr.d[:, 16:] == 0)
    assert np.all(np.abs(tr.x_hat.sum(axis=1) - tr.x_hat[0].sum()) < 1e-9)
    balance = tr.x[1:].sum(axis=1) - tr.x[:-1].sum(axis=1) - tr.d[:-1].sum(axis=1)
    assert np.all(np.abs(balance) < 1e-9)
    assert np.all(tr.tier[-1] == -1) and np.all(tr.tier[:-1] >= 0)


def test_longer_horizon_keeps_prefix():
    a = run(reference_scenario(horizon=30))
    b = run(reference_scenario(horizon=60))
    np.testing.assert_array_equal(a.x, b.x[:31])
    np.testing.assert_array_equal(a.x_hat, b.x_hat[:31])


def test_clamp_off_drains_to_invariant_violation():
    sc = load_scenario(doc(horizon=50, clamp_outlets=False, init={"x0": [3, 3], "x_hat0": [2, 2]}, seed=4))
    with pytest.raises(InvariantViolation):
        run(sc)


def test_strict_check_off_records_nan():
    tr = run(load_scenario(doc(strict_check=False)))
    assert np.all(np.isnan(tr.upper_violation))
    assert tr.summary()["violation_counts"]["floor"] is None


# -- persistence -------------------------------------------------------------


def test_write_empty_horizon(tmp_path):
    steps, _ = write_trajectory(run(reference_scenario(horizon=0)), tmp_path)
    with open(steps) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "road", "x", "x_hat", "d", "tier", "clamped", "upper_violation", "floor_violation"]
    assert len(rows) == 1 + 32
    assert {r[0] for r in rows[1:]} == {"0"}


def test_write_row_count(tmp_path):
    steps, _ = write_trajectory(run(load_scenario(doc(horizon=1))), tmp_path)
    with open(steps) as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == 4
    assert [(r[0], r[1]) for r in rows] == [("0", "1"), ("0", "2"), ("1", "1"), ("1", "2")]


def test_round_trip(tmp_path):
    tr = run(reference_scenario(horizon=25))
    write_trajectory(tr, tmp_path)
    back = read_steps(tmp_path)
    for name in ("x", "x_hat", "d", "upper_violation", "floor_violation"):
        np.testing.assert_array_equal(back[name], getattr(tr, name))
    np.testing.assert_array_equal(back["tier"], tr.tier)
    s = read_summary(tmp_path)
    assert s == json.loads(json.dumps(tr.summary()))
    assert s["total_x_per_step"] == [float(v) for v in tr.x.sum(axis=1)]
    assert sum(s["tier_histogram"].values()) == 25 * 32


def test_shipped_floor_binds_and_matters():
    from frs_noir.model import assemble_dissensus_matrix
    from frs_noir.scenario import outflow_for

    sc = read_scenario(data_path("reference_32.json"))
    tr = run(sc)
    assert tr.x_hat.min() == pytest.approx(2.0, abs=1e-9)
    # without optimization (uniform FRS turning) the same network falls below the floor
    Ah = assemble_dissensus_matrix(TendencyMatrix.uniform(sc.graph), outflow_for(sc))
    xh = sc.x_hat0.copy()
    lowest = xh.min()
    for _ in range(sc.horizon):
        xh = Ah @ xh
        lowest = min(lowest, xh.min())
    assert lowest < 1.9
