import json
import re
import subprocess
import sys

import numpy as np
import pytest

from frs_noir import data_path
from frs_noir.cli import main
from frs_noir.scenario import read_steps
from frs_noir.svgplot import MissingRun, UnknownRoad, line_chart, plot_run

REF = data_path("reference_32.json")


@pytest.fixture(scope="module")
def ref_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ref")
    assert main(["run", REF, "--out", str(out), "--steps", "100"]) == 0
    return out


def write_doc(path, **kw):
    with open(REF) as fh:
        doc = json.load(fh)
    doc.update(kw)
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_ok(capsys):
    assert main(["validate", REF]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_validate_dead_end(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": 1, "graph": {"n": 2, "edges": [[1, 2]], "inlets": [1], "outlets": [2]}, "horizon": 3}))
    assert main(["validate", str(bad)]) == 2
    out = json.loads(capsys.readouterr().out)
    assert out["findings"] == [{"code": "DeadEndRoad", "message": "DeadEndRoad(2)", "road": 2}]


def test_validate_below_floor(tmp_path, capsys):
    path = write_doc(tmp_path / "s.json", init={"x0": 10, "x_hat0": 1})
    assert main(["validate", path]) == 2
    assert json.loads(capsys.readouterr().out)["findings"][0]["code"] == "InfeasibleInitialState"


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 1
    assert json.loads(capsys.readouterr().out)["findings"][0]["code"] == "IoError"


def test_run_writes_files(ref_run):
    steps = read_steps(ref_run)
    assert steps["x"].shape == (101, 32)
    summary = json.loads((ref_run / "summary.json").read_text())
    assert summary["horizon"] == 100
    assert summary["min_xhat"] >= 2 - 1e-9


def test_run_prints_summary_line(tmp_path, capsys):
    assert main(["run", REF, "--out", str(tmp_path), "--steps", "10"]) == 0
    line = capsys.readouterr().out.strip()
    assert re.match(r"steps=10 min_xhat=\S+ tier0_steps=\S+ tiers=\{.*\} upper_violations=\d+ floor_violations=\d+ clamped=\d+$", line)


def test_seed_override_changes_inputs(tmp_path, ref_run):
    assert main(["run", REF, "--out", str(tmp_path), "--steps", "100", "--seed", "12345"]) == 0
    assert not np.array_equal(read_steps(tmp_path)["d"], read_steps(ref_run)["d"])


def test_steps_zero(tmp_path):
    assert main(["run", REF, "--out", str(tmp_path), "--steps", "0"]) == 0
    assert read_steps(tmp_path)["x"].shape == (1, 32)


def test_run_invalid_scenario(tmp_path):
    path = write_doc(tmp_path / "s.json", version=7)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 2


def test_report(ref_run, capsys):
    assert main(["report", str(ref_run)]) == 0
    out = capsys.readouterr().out
    assert "min_xhat=" in out and "FRS cars: initial 160" in out


def test_report_missing(tmp_path):
    assert main(["report", str(tmp_path)]) == 1


def test_plot_frs_above_floor(ref_run, tmp_path):
    out = tmp_path / "xhat.svg"
    assert main(["plot", str(ref_run), "--series", "x_hat", "--out", str(out)]) == 0
    svg = out.read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 32
    assert "discrete time k" in svg and "density of FRS cars" in svg
    # every polyline point sits on or above the dashed floor line (SVG y grows downward)
    floor_y = float(re.search(r'y1="([\d.]+)"[^>]*stroke-dasharray', svg).group(1))
    for pts in re.findall(r'points="([^"]+)"', svg):
        ys = [float(p.split(",")[1]) for p in pts.split()]
        assert max(ys) <= floor_y + 1e-9


def test_plot_deterministic(ref_run, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for path in (a, b):
        assert main(["plot", str(ref_run), "--series", "x", "--roads", "1,9,20", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().count("<polyline") == 3


def test_plot_errors(ref_run, tmp_path):
    with pytest.raises(UnknownRoad):
        plot_run(str(ref_run), "x", roads=[])
    with pytest.raises(UnknownRoad):
        plot_run(str(ref_run), "x", roads=[33])
    with pytest.raises(MissingRun):
        plot_run(str(tmp_path), "x")
    assert main(["plot", str(ref_run), "--series", "d", "--roads", "40", "--out", str(tmp_path / "z.svg")]) == 2


def test_constant_series_is_horizontal():
    svg = line_chart(np.arange(5), {"road 1": np.full(5, 3.0)}, "x")
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    assert len({p.split(",")[1] for p in pts}) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "frs_noir", "validate", REF], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "OK"
