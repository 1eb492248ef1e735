import json
import math

import numpy as np
import pytest

from randers_cut.cli import (EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_OK, InputError,
                             agreement, main, parse_angle, parse_point, theorem_arc, write_atomic)
from randers_cut.geodesics import read_path_csv
from randers_cut.oracle import read_cut_csv
from randers_cut.surfaces import NavigationData, ProfileSpec, load_surface_spec, nav_to_json


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _table_spec(tmp_path, m_fn, name="custom.json", mu=0.0):
    r = np.linspace(0, math.pi, 801)
    m = m_fn(r)
    m[0] = m[-1] = 0.0
    obj = nav_to_json(NavigationData(ProfileSpec.custom(np.column_stack([r, m])), mu))
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


@pytest.mark.parametrize("text,value", [("pi/3", math.pi / 3), ("2pi/3", 2 * math.pi / 3),
                                        ("-3*pi/4", -0.75 * math.pi), ("1/3", 1 / 3),
                                        ("pi", math.pi), ("0", 0.0), ("1.25", 1.25),
                                        (" PI / 2 ", math.pi / 2), ("-pi", -math.pi)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["", "pie", "1/0", "pi/", "-", "3pi/4/2", "abc"])
def test_parse_angle_rejects(text):
    with pytest.raises(InputError):
        parse_angle(text)


def test_parse_point():
    assert parse_point("pi/3,0") == (pytest.approx(math.pi / 3), 0.0)
    with pytest.raises(InputError):
        parse_point("1,2,3")


def test_surface_info(capsys, tmp_path):
    code, out, _ = _run(capsys, "surface-info", "--family", "round", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK
    assert rep["curvature_class"] == "Constant" and rep["mu_max"] == 1.0
    assert json.loads((tmp_path / "surface_info.json").read_text()) == rep
    code, out, _ = _run(capsys, "surface-info", "--family", "example2", "--lambda", "0.5")
    assert json.loads(out)["curvature_class"] == "NonDecreasing"
    code, out, _ = _run(capsys, "surface-info", "--family", "example1", "--lambda", "3")
    assert json.loads(out)["curvature_class"] == "NonMonotone"


def test_input_errors(capsys, tmp_path):
    assert _run(capsys, "surface-info", "--family", "round", "--mu", "2")[0] == EXIT_INPUT
    assert _run(capsys, "surface-info")[0] == EXIT_INPUT
    assert _run(capsys, "surface-info", "--family", "example1")[0] == EXIT_INPUT
    assert _run(capsys, "surface-info", "--spec", tmp_path / "missing.json")[0] == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "surface-info", "--spec", bad)[0] == EXIT_INPUT
    assert _run(capsys, "no-such-command")[0] == EXIT_INPUT
    assert _run(capsys, "geodesic", "--family", "round", "--point", "0,0", "--nu", "0")[0] == EXIT_INPUT
    assert _run(capsys, "scan-convexity", "--family", "round", "--lam-min", "1", "--lam-max", "2",
                "--step", "0.5")[0] == EXIT_INPUT


def test_geodesic_csv(capsys, tmp_path):
    code, out, _ = _run(capsys, "geodesic", "--family", "round", "--mu", "0.25",
                        "--point", "pi/2,0", "--nu", "1", "--dr-sign", "0", "--length", "pi",
                        "--out", tmp_path)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["end"][1] == pytest.approx(1.25 * math.pi, abs=1e-8)
    back = read_path_csv(tmp_path / "geodesic.csv")
    assert back["theta"][-1] == pytest.approx(1.25 * math.pi, abs=1e-8)
    assert len(back["s"]) == rep["n"]


def test_half_period_outputs(capsys, tmp_path):
    code, out, _ = _run(capsys, "half-period", "--family", "example1", "--lambda", "1",
                        "--mu", "0.3", "--resolution", "41", "--out", tmp_path)
    assert code == EXIT_OK
    rows = np.loadtxt(tmp_path / "half_period.csv", delimiter=",", skiprows=1)
    assert rows.shape[0] == 41
    assert (tmp_path / "half_period_d2.csv").exists()
    assert json.loads(out)["n"] == 41


def test_scan_convexity(capsys, tmp_path):
    code, out, _ = _run(capsys, "scan-convexity", "--family", "example1", "--lam-min", "1.4",
                        "--lam-max", "1.7", "--step", "0.05", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK
    lo, hi = rep["threshold_bracket"]
    assert 1.5 <= lo < hi <= 1.6
    lines = (tmp_path / "convexity_example1.csv").read_text().splitlines()
    assert lines[0] == "lambda,mu,d2_min,d2_max,sign" and len(lines) == 8
    code, out, _ = _run(capsys, "scan-convexity", "--family", "example2", "--lam-min", "0.55",
                        "--lam-max", "0.7", "--step", "0.025")
    lo, hi = json.loads(out)["threshold_bracket"]
    assert 0.6 <= lo < hi <= 0.65


def test_cut_locus_theorem(capsys, tmp_path):
    code, out, _ = _run(capsys, "cut-locus", "--family", "example1", "--lambda", "1",
                        "--mu", str(0.5 / math.sqrt(2)), "--point", "pi/3,0", "--out", tmp_path)
    assert code == EXIT_OK
    arc = json.loads(out)["theorem"]
    assert arc["kind"] == "ParallelSubarc"
    assert arc["r"] == pytest.approx(2 * math.pi / 3, abs=1e-12)
    assert json.loads((tmp_path / "cut_theorem.json").read_text()) == arc


def test_cut_locus_both_round(capsys, tmp_path):
    code, out, err = _run(capsys, "cut-locus", "--family", "round", "--mu", "0.25",
                          "--point", "pi/3,0", "--mode", "both", "--resolution", "256",
                          "--stencil", "16", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["pass"]
    assert rep["hausdorff"] < rep["oracle"]["tol_mesh"]
    assert "PASS" in err
    cut = read_cut_csv(tmp_path / "cut_oracle.csv")
    assert len(cut["r"]) == rep["oracle"]["n_points"]


def test_cut_locus_both_parallel_arc(capsys, tmp_path):
    code, out, err = _run(capsys, "cut-locus", "--family", "example1", "--lambda", "1",
                          "--mu", str(0.5 / math.sqrt(2)), "--point", "pi/3,0", "--mode", "both")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["pass"]
    assert rep["theorem"]["kind"] == "ParallelSubarc"
    assert rep["off_curve"] < rep["oracle"]["tol_mesh"]
    assert rep["extent_error"] < 2 * rep["oracle"]["tol_mesh"]
    assert "PASS" in err


def test_agreement_rules():
    nav = NavigationData(ProfileSpec.example2(0.5), 0.2)
    arc = theorem_arc(nav, (math.pi / 3, 0.0))
    r = arc.r
    lo, hi = arc.theta_interval
    theta = np.linspace(lo, hi, 40)
    pts = np.column_stack([np.full_like(theta, r), theta])
    v = agreement(nav, arc, pts, 0.01)
    assert v["pass"] and v["off_curve"] < 1e-12 and v["extent_error"] < 1e-12
    # sparse but correct samples: Hausdorff exceeds tol, the verdict does not
    v = agreement(nav, arc, pts[::13], 0.01)
    assert v["hausdorff"] > 0.01 and v["pass"]
    shifted = pts + [0.02, 0.0]
    assert not agreement(nav, arc, shifted, 0.01)["pass"]
    short = pts[pts[:, 1] > lo + 0.1]
    assert not agreement(nav, arc, short, 0.01)["pass"]
    # wrapped angles are matched on the circle
    wrapped = np.column_stack([pts[:, 0], np.mod(pts[:, 1], 2 * math.pi)])
    assert agreement(nav, arc, wrapped, 0.01)["pass"]


def test_cut_locus_hypothesis_unmet(capsys, tmp_path):
    spec = _table_spec(tmp_path, lambda r: np.sin(r) + 0.05 * np.sin(3 * r) - 0.02 * np.sin(5 * r))
    code, _, err = _run(capsys, "cut-locus", "--spec", spec, "--point", "pi/3,0")
    assert code == EXIT_HYPOTHESIS
    assert "--mode oracle" in err


def test_verify(capsys, tmp_path):
    code, out, _ = _run(capsys, "verify", "--family", "example2", "--lambda", "0.5",
                        "--mu", "0.2", "--shots", "5", "--out", tmp_path)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["passed"] and rep["failed"] == []
    assert json.loads((tmp_path / "verify.json").read_text()) == rep


def test_verify_corrupted_table(capsys, tmp_path):
    # a dent on the southern half only breaks the reflection symmetry
    spec = _table_spec(tmp_path,
                       lambda r: np.sin(r) * (1 - 0.05 * np.sin(2 * r) ** 2 * (r > math.pi / 2)))
    code, out, err = _run(capsys, "verify", "--spec", spec, "--shots", "3")
    assert code == EXIT_FAIL
    assert any("symmetry" in name for name in json.loads(out)["failed"])
    assert "symmetry" in err


def test_deterministic(capsys):
    argv = ("verify", "--family", "round", "--mu", "0.4", "--shots", "4", "--seed", "7")
    _, first, _ = _run(capsys, *argv)
    _, second, _ = _run(capsys, *argv)
    assert first == second


def test_spec_round_trip_through_cli(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(nav_to_json(NavigationData(ProfileSpec.example2(0.5), 0.2))))
    code, out, _ = _run(capsys, "surface-info", "--spec", spec)
    assert code == EXIT_OK
    rep = json.loads(out)
    again = tmp_path / "again.json"
    again.write_text(json.dumps(rep["surface"]))
    assert load_surface_spec(again).mu == 0.2


def test_write_atomic(tmp_path):
    target = tmp_path / "sub" / "x.txt"
    write_atomic(target, lambda p: p.write_text("ok"))
    assert target.read_text() == "ok"

    def boom(p):
        p.write_text("partial")
        raise RuntimeError("interrupted")

    with pytest.raises(RuntimeError):
        write_atomic(target, boom)
    assert target.read_text() == "ok"
    assert sorted(x.name for x in target.parent.iterdir()) == ["x.txt"]
