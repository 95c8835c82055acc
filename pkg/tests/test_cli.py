import json
import subprocess
import sys as _sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pwa_reach import io
from pwa_reach.cli import build_parser, main, _tolerances
from pwa_reach.errors import ParseError
from pwa_reach.export import read_polylines_csv, render_svg, write_polylines_csv
from pwa_reach.lmi import residuals
from pwa_reach.reachset import PiecewiseEllipsoid


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def ex1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ex1")
    assert main(["estimate", "example1", "--alpha", "0.4", "--out", str(out)]) == 0
    return out


def test_check_reports_geometry(capsys):
    code, out, _ = run(capsys, "check", "example1")
    data = json.loads(out)
    assert code == 0
    assert data["h"] == [5.0, 7.0]
    assert data["origin_region"] == "ZERO"
    assert (data["e1_mode"], data["e2_mode"]) == ("FIXED_ZERO", "FIXED_ZERO")
    assert data["hurwitz_margins"][0] == pytest.approx(-0.5)


def test_estimate_writes_certificates(ex1_run, capsys):
    names = {p.name for p in ex1_run.iterdir()}
    assert {"certificate_piecewise.json", "certificate_common.json", "set_piecewise.csv",
            "set_piecewise.svg", "set_common.csv", "set_common.svg"} <= names
    pw = io.load_certificate(ex1_run / "certificate_piecewise.json")
    common = io.load_certificate(ex1_run / "certificate_common.json")
    assert np.trace(pw.P1) + np.trace(pw.P2) > np.trace(common.P)
    assert pw.alpha == common.alpha == 0.4


def test_round_trip_residuals(ex1_run, ex1):
    for name in ("certificate_piecewise.json", "certificate_common.json"):
        cert = io.load_certificate(ex1_run / name)
        assert residuals(cert, ex1).to_dict() == cert.audit


def test_estimate_deterministic(ex1_run, tmp_path):
    assert main(["estimate", "example1", "--alpha", "0.4", "--out", str(tmp_path)]) == 0
    for name in ("certificate_piecewise.json", "certificate_common.json"):
        assert (tmp_path / name).read_text() == (ex1_run / name).read_text()


def test_set_exports(ex1_run, ex1):
    lines = read_polylines_csv(ex1_run / "set_piecewise.csv")
    assert len(lines) == 2
    pset = PiecewiseEllipsoid.from_certificate(
        io.load_certificate(ex1_run / "certificate_piecewise.json"), ex1)
    for line, q in zip(lines, (pset.neg_piece, pset.pos_piece)):
        assert np.max(np.abs(q(line) - 1)) <= 1e-8
    root = ET.fromstring((ex1_run / "set_piecewise.svg").read_text())
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) >= 2


def test_validate_example1(ex1_run, capsys):
    code, out, _ = run(capsys, "validate", "example1", "--out", ex1_run, "--method", "piecewise",
                       "--trajectories", 1000, "--record-every", 10)
    assert code == 0
    report = json.loads((ex1_run / "audit.json").read_text())
    entry = report["certificates"]["piecewise"]
    assert entry["inside_fraction"] == 1.0
    assert entry["violation_fraction"] == 0.0
    assert report["trajectories"] == 1000


def test_validate_flags_bad_certificate(ex1_run, tmp_path, capsys):
    cert = io.load_certificate(ex1_run / "certificate_piecewise.json").scaled_pieces(10.0, 10.0)
    io.save_certificate(cert, tmp_path / "bad.json")
    code, _, err = run(capsys, "validate", "example1", "--out", tmp_path, "--certificate",
                       tmp_path / "bad.json", "--trajectories", 20, "--t-end", 10)
    assert code != 0
    assert json.loads(err)["error"] == "validation-failed"


def test_compare_printed_example2(capsys):
    code, out, _ = run(capsys, "compare", "example2", "--printed", "example2_printed")
    data = json.loads(out)
    assert code == 0
    assert data["min_eig_P1_minus_P"] > 0 and data["min_eig_P2_minus_P"] > 0
    assert data["subset"] is True
    assert max(data["lmi_deficits"][k] for k in data["lmi_deficits"] if "lmi" in k) <= 5e-3


def test_compare_solved_example1(ex1_run, capsys):
    code, out, _ = run(capsys, "compare", "example1", "--out", ex1_run)
    data = json.loads(out)
    assert code == 0
    assert data["area_piecewise"] <= data["area_common"]


def test_example2_estimate_and_projected_plot(tmp_path, capsys):
    code, out, _ = run(capsys, "estimate", "example2", "--alpha", "0.1", "--out", tmp_path,
                       "--project", 0, 2, "--dominate")
    assert code == 0
    summary = json.loads(out)
    assert summary["dominance"]["subset_flag"] is True
    code, out, _ = run(capsys, "plot", "example2", "--out", tmp_path, "--project", 1, 3,
                       "--trajectories", 3, "--t-end", 2)
    assert code == 0
    assert len(read_polylines_csv(tmp_path / "set_common.csv")) == 2


def test_simulate_writes_table(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "example1", "--out", tmp_path, "--trajectories", 2,
                     "--t-end", 0.1, "--dt", 0.01)
    rows = (tmp_path / "trajectories.csv").read_text().splitlines()
    assert code == 0
    assert rows[0] == "traj,t,x1,x2,w1,mode"
    assert len(rows) == 1 + 2 * 11


def _write(tmp_path, data):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps(data))
    return p


BASE = {"A1": [[-1.0, 0.0], [0.0, -2.0]], "A2": [[-1.0, 0.0], [0.0, -2.0]], "B": [0.0, 1.0],
        "c": [1.0, 0.0], "f": 0.0, "Rw": 1.0}


@pytest.mark.parametrize("patch, code, kind", [
    ({"A2": [[1.0, 0.0], [0.0, 1.0]]}, 3, "continuity"),
    ({"A1": [[1.0, 0.0], [0.0, -2.0]], "A2": [[1.0, 0.0], [0.0, -2.0]]}, 4, "hurwitz"),
    ({"c": [1.0, 0.0, 0.0]}, 2, "dimension"),
    ({"Rw": -1.0}, 2, "parse"),
])
def test_error_classes(tmp_path, capsys, patch, code, kind):
    path = _write(tmp_path, {**BASE, **patch})
    got, _, err = run(capsys, "estimate", path, "--alpha", 0.5, "--out", tmp_path / "o")
    assert got == code
    assert json.loads(err)["error"] == kind


def test_parse_and_infeasible_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "check", bad)
    assert code == 2 and json.loads(err)["error"] == "parse"
    code, _, err = run(capsys, "check", _write(tmp_path, {"A1": [[-1.0]]}))
    assert code == 2 and "lacks keys" in json.loads(err)["message"]
    code, _, err = run(capsys, "estimate", "example1", "--alpha-grid", "5,6", "--out", tmp_path)
    data = json.loads(err)
    assert code == 5 and data["error"] == "infeasible" and len(data["trace_curve"]) == 2


def test_loader_conveniences():
    sys = io.load_system(BASE)
    assert sys.B.shape == (2, 1) and sys.Rw.shape == (1, 1)
    np.testing.assert_array_equal(sys.d1, 0.0)
    with pytest.raises(ParseError):
        io.load_system({"A1": [[-1.0]]})


def test_tolerance_flags():
    args = build_parser().parse_args(["check", "example1", "--tol-cont", "1e-3",
                                      "--eps-pd", "1e-5"])
    tol = _tolerances(args)
    assert tol.tol_cont == 1e-3 and tol.eps_pd == 1e-5 and tol.tol_audit == 1e-6


def test_polyline_csv_round_trip(tmp_path):
    lines = [np.random.default_rng(0).standard_normal((5, 2)), np.zeros((0, 2)),
             np.ones((3, 2))]
    write_polylines_csv(lines, tmp_path / "p.csv")
    back = read_polylines_csv(tmp_path / "p.csv")
    assert len(back) == 3
    for a, b in zip(lines, back):
        np.testing.assert_array_equal(a, b)
    ET.fromstring(render_svg([(lines[0], "#f00")], [lines[2]]))


def test_module_entry_point():
    proc = subprocess.run([_sys.executable, "-m", "pwa_reach", "check", "example1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 2
