"""Command-line entry point: ``frs-noir validate|run|report|plot``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 validation failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .graph import GraphError
from .scenario import (
    InvariantViolation,
    ScenarioError,
    read_scenario,
    read_summary,
    run,
    write_trajectory,
)
from .svgplot import SERIES, PlotError, plot_run

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _finding(exc) -> dict:
    f = {"code": getattr(exc, "code", type(exc).__name__), "message": str(exc)}
    if isinstance(exc, GraphError) and exc.road is not None:
        f["road"] = exc.road if not isinstance(exc.road, tuple) else list(exc.road)
    if getattr(exc, "field", None) is not None:
        f["field"] = exc.field
    return f


def _load(path):
    """(scenario, None) or (None, (exit code, findings))."""
    try:
        return read_scenario(path), None
    except OSError as exc:
        return None, (EXIT_RUNTIME, [{"code": "IoError", "message": str(exc)}])
    except (GraphError, ScenarioError) as exc:
        return None, (EXIT_INVALID, [_finding(exc)])


def cmd_validate(path, out=None) -> int:
    out = out or sys.stdout
    sc, err = _load(path)
    if err:
        code, findings = err
        print(json.dumps({"status": "invalid", "findings": findings}), file=out)
        return code
    print("OK", file=out)
    return EXIT_OK


def _summary_line(s) -> str:
    v = s["violation_counts"]
    return (
        f"steps={s['horizon']} min_xhat={s['min_xhat']:.6g} "
        f"tier0_steps={s['tier0_step_fraction']:.4f} tiers={json.dumps(s['tier_histogram'], separators=(',', ':'))} "
        f"upper_violations={v['upper']} floor_violations={v['floor']} clamped={v['clamped']}"
    )


def cmd_run(path, out_dir, steps=None, seed=None, out=None) -> int:
    out = out or sys.stdout
    sc, err = _load(path)
    if err:
        code, findings = err
        print(json.dumps({"status": "invalid", "findings": findings}), file=out)
        return code
    try:
        if steps is not None or seed is not None:
            sc = sc.with_overrides(steps=steps, seed=seed)
        traj = run(sc)
        write_trajectory(traj, out_dir)
    except (GraphError, ScenarioError) as exc:
        print(json.dumps({"status": "invalid", "findings": [_finding(exc)]}), file=out)
        return EXIT_INVALID
    except (OSError, InvariantViolation) as exc:
        print(f"error: {exc}", file=out)
        return EXIT_RUNTIME
    print(_summary_line(traj.summary()), file=out)
    return EXIT_OK


def cmd_report(run_dir, out=None) -> int:
    out = out or sys.stdout
    try:
        s = read_summary(run_dir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=out)
        return EXIT_RUNTIME
    print(_summary_line(s), file=out)
    totals = s["total_x_per_step"]
    print(f"all cars: initial {totals[0]:.6g}, final {totals[-1]:.6g}", file=out)
    print(f"FRS cars: initial {s['total_xhat_initial']:.6g}, final {s['total_xhat_final']:.6g}", file=out)
    after = s.get("min_xhat_after_tier0_steps")
    if after is not None:
        print(f"min FRS density after all-tier-0 steps: {after:.6g}", file=out)
    err = s["max_column_error"]
    print(f"max column-sum error: A {err['A']:.3e}, A_hat {err['A_hat']:.3e}", file=out)
    return EXIT_OK


def cmd_plot(run_dir, roads, series, out_path, out=None) -> int:
    out = out or sys.stdout
    floor = None
    if series == "x_hat":
        try:
            fl = read_summary(run_dir)["config_echo"].get("x_hat_min", 2.0)
            floor = float(fl) if isinstance(fl, (int, float)) else None
        except (OSError, ValueError, KeyError):
            pass
    try:
        svg = plot_run(run_dir, series=series, roads=roads, floor=floor)
    except PlotError as exc:
        print(json.dumps({"status": "error", "findings": [_finding(exc)]}), file=out)
        return EXIT_INVALID
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:
        print(f"error: {exc}", file=out)
        return EXIT_RUNTIME
    return EXIT_OK


def _roads(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated road ids, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frs-noir", description="Equitable FRS car distribution on a road network.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")

    r = sub.add_parser("run", help="simulate a scenario and write steps.csv + summary.json")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--steps", type=int, help="override the horizon")
    r.add_argument("--seed", type=int, help="override the seed")

    rp = sub.add_parser("report", help="summarize a finished run")
    rp.add_argument("run_dir")

    p = sub.add_parser("plot", help="SVG line chart of one series")
    p.add_argument("run_dir")
    p.add_argument("--series", choices=SERIES, required=True)
    p.add_argument("--roads", type=_roads, help="comma-separated road ids (default: all)")
    p.add_argument("--out", required=True, help="output .svg path")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.scenario)
    if args.command == "run":
        if args.steps is not None and args.steps < 0:
            print("error: --steps must be >= 0", file=sys.stderr)
            return EXIT_INVALID
        return cmd_run(args.scenario, args.out, args.steps, args.seed)
    if args.command == "report":
        return cmd_report(args.run_dir)
    return cmd_plot(args.run_dir, args.roads, args.series, args.out)


if __name__ == "__main__":
    sys.exit(main())
