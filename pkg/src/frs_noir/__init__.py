"""Equitable distribution of free ride-sharing (FRS) cars on a road network.

All cars and FRS cars move through a directed network of roads under a
column-stochastic update ``x' = (I + (Q - I) P) x + d``. At every step the FRS
turning fractions are chosen by a per-column least-norm quadratic program that
keeps FRS cars below the all-car density and above a per-road floor.
"""
from importlib import resources

from .graph import NoirGraph, build_graph, graph_from_dict, neighbors
from .model import (
    OutflowProfile,
    TendencyMatrix,
    TrafficState,
    assemble_dissensus_matrix,
    compute_flows,
    sample_environment,
    step_all_cars,
    step_all_cars_flows,
    step_frs_cars,
)
from .optimizer import (
    ColumnBounds,
    EquityFloor,
    Infeasible,
    assemble_bounds,
    check_matrix_form,
    project_box_simplex,
    solve_tendencies,
)
from .scenario import (
    Scenario,
    Trajectory,
    load_scenario,
    read_scenario,
    read_steps,
    read_summary,
    run,
    write_trajectory,
)

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Filesystem path of a shipped scenario, e.g. ``reference_32.json`` or ``two_road.json``."""
    return str(resources.files(__package__).joinpath("data", name))


def reference_scenario(**overrides) -> Scenario:
    """The shipped 32-road scenario; keyword overrides replace top-level document fields."""
    import json

    with open(data_path("reference_32.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    doc.update(overrides)
    return load_scenario(doc)
