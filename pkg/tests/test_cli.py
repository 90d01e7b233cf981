import csv
import hashlib
import json
import math

import numpy as np
import pytest

from fracinv.cli import main
from fracinv.io import dump_system, load_system, parse_system
from fracinv.mittag_leffler import ml, ml_matrix


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def digest(path):
    return hashlib.md5(path.read_bytes()).hexdigest()


# -- analyze -----------------------------------------------------------------

def test_analyze_example(tmp_path, capsys):
    assert run("analyze", "--system", "3.1", "--out", tmp_path) == 0
    out = capsys.readouterr().out.replace(" ", "")
    for line in ("y=0", "y=x", "y=-4x"):
        assert line in out
    assert {p.name for p in tmp_path.iterdir()} == {
        "3.1-summary.txt", "3.1-report.json", "3.1-field.svg", "3.1-analyze.config.json"}
    doc = json.loads((tmp_path / "3.1-report.json").read_text())
    # the embedded system re-parses to the same field
    back = parse_system(doc["system"])
    assert back.field.P == load_system("3.1").field.P


def test_analyze_zero_field(tmp_path, capsys):
    assert run("analyze", "--system", "zero", "--out", tmp_path, "--format", "json") == 0
    out = capsys.readouterr().out
    assert "infinite family" in out and "trivial flow" in out


def test_analyze_parabola_x(tmp_path, capsys):
    assert run("analyze", "--system", "table2-vii", "--out", tmp_path, "--format", "json") == 0
    assert "x=1/2y^2" in capsys.readouterr().out.replace(" ", "")


def test_analyze_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("analyze", "--system", "4.6", "--out", d) == 0
    for name in ("4.6-report.json", "4.6-field.svg", "4.6-summary.txt", "4.6-analyze.config.json"):
        assert digest(a / name) == digest(b / name)


def test_malformed_system_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"degree": 2, "a": {"1,0": "oops"}, "b": {}}))
    assert run("analyze", "--system", bad, "--out", tmp_path / "o") == 2
    assert "/a/1,0" in capsys.readouterr().err
    assert run("analyze", "--system", "missing-system", "--out", tmp_path / "o") == 2


def test_unknown_flag_and_values_rejected(tmp_path):
    assert run("analyze", "--system", "3.1", "--bogus") == 2
    assert run("simulate", "--lam", "1", "--alpha", "1.5", "--out", tmp_path) == 2
    assert run("simulate", "--lam", "1", "--alpha", "0.5", "--h", "0", "--out", tmp_path) == 2
    assert run("simulate", "--lam", "1", "--alpha", "0.5", "--format", "png", "--out", tmp_path) == 2


# -- simulate ----------------------------------------------------------------

def test_simulate_line_stays(tmp_path):
    assert run("simulate", "--system", "4.4*", "--alpha", "0.75", "--x0", "0.1,0.3", "--h", "2^-8",
               "--T", "1", "--out", tmp_path, "--format", "csv") == 0
    header, data = read_csv(tmp_path / "4.4star-trajectory.csv")
    assert header == ["t", "x", "y"]
    assert np.abs(data[:, 2] - 3 * data[:, 1]).max() < 1e-6


def test_simulate_scalar_classical(tmp_path):
    assert run("simulate", "--lam", "1", "--alpha", "1", "--h", "2^-10", "--T", "2",
               "--out", tmp_path, "--format", "csv,json") == 0
    header, data = read_csv(tmp_path / "scalar-trajectory.csv")
    assert header == ["t", "x"]
    assert np.abs(data[:, 1] - np.exp(-data[:, 0])).max() < 1e-6
    doc = json.loads((tmp_path / "scalar-simulate.json").read_text())
    assert doc["method"] == "rk4" and not doc["blowup"]


def test_simulate_linear_vs_closed_form(tmp_path):
    assert run("simulate", "--system", "4.44", "--alpha", "0.7", "--x0", "1,1", "--h", "2^-11",
               "--T", "1", "--out", tmp_path, "--format", "csv") == 0
    _, data = read_csv(tmp_path / "4.44-trajectory.csv")
    A = [[1.0, 3.0], [-3.0, 1.0]]
    idx = np.arange(0, len(data), 64)
    exact = np.array([ml_matrix(0.7, A, t) @ [1.0, 1.0] for t in data[idx, 0]])
    assert np.abs(data[idx, 1:] - exact).max() < 1e-4


def test_simulate_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--system", "4.5", "--alpha", "0.8", "--x0", "0.5,0.5",
                   "--h", "2^-6", "--out", tmp_path / d) == 0
    for name in ("4.5-trajectory.csv", "4.5-trajectory.svg", "4.5-simulate.json"):
        assert digest(tmp_path / "a" / name) == digest(tmp_path / "b" / name)


def test_simulate_blowup_exit_3(tmp_path, capsys):
    code = run("simulate", "--system", "3.1", "--alpha", "0.9", "--x0", "2,2", "--h", "2^-6",
               "--T", "5", "--out", tmp_path, "--format", "csv")
    assert code == 3
    assert "blow-up" in capsys.readouterr().err
    _, data = read_csv(tmp_path / "3.1-trajectory.csv")
    assert data[-1, 0] < 5


def test_simulate_input_errors(tmp_path):
    assert run("simulate", "--system", "4.5", "--out", tmp_path) == 2           # no alpha
    assert run("simulate", "--system", "4.5", "--alpha", "0.5", "--x0", "1", "--out", tmp_path) == 2
    assert run("simulate", "--lam", "1", "--system", "4.5", "--out", tmp_path) == 2
    assert run("simulate", "--lam", "1", "--alpha", "0.5", "--method", "rk4", "--out", tmp_path) == 2


# -- audit -------------------------------------------------------------------

def test_audit_semigroup(tmp_path, capsys):
    assert run("audit", "--preset", "semigroup", "--system", "4.44", "--alpha", "0.7", "--tstar", "0.3",
               "--out", tmp_path, "--format", "json,csv") == 0
    assert "semigroup: non-invariant" in capsys.readouterr().out
    doc = json.loads((tmp_path / "audit-semigroup.json").read_text())
    assert doc["verdict"] == "non-invariant"
    assert (tmp_path / "audit-semigroup-restart.csv").exists()
    assert run("audit", "--preset", "semigroup", "--alpha", "1.0", "--out", tmp_path / "c",
               "--format", "json") == 0
    assert "semigroup: invariant-within-tol" in capsys.readouterr().out


def test_audit_manifold_preset(tmp_path, capsys):
    assert run("audit", "--preset", "cong", "--c2", "1e-10", "--out", tmp_path) == 0
    assert "published manifold refuted" in capsys.readouterr().out
    assert (tmp_path / "audit-cong.svg").exists()


def test_audit_subspace_and_curve(tmp_path, capsys):
    assert run("audit", "--preset", "subspace", "--alpha", "0.75", "--x0", "0.1,0.3",
               "--out", tmp_path, "--format", "json") == 0
    assert "subspace: invariant-within-tol" in capsys.readouterr().out
    assert run("audit", "--preset", "curve", "--alpha", "0.5", "--out", tmp_path, "--format", "json") == 0
    assert "curve: non-invariant" in capsys.readouterr().out


def test_audit_errors(tmp_path):
    assert run("audit", "--preset", "nope", "--out", tmp_path) == 2
    assert run("audit", "--preset", "subspace", "--alpha", "0.75", "--x0", "0.1,0.5",
               "--out", tmp_path) == 2


# -- ml ----------------------------------------------------------------------

def test_ml_command(tmp_path, capsys):
    assert run("ml", "--alpha", "0.5", "--z", "-1", "--out", tmp_path) == 0
    v = float(capsys.readouterr().out)
    assert v == pytest.approx(math.e * math.erfc(1), rel=1e-13)
    doc = json.loads((tmp_path / "ml.json").read_text())
    assert doc["value"][0] == v
    assert run("ml", "--alpha", "0.7", "--z", "1+2j", "--out", tmp_path, "--format", "csv") == 0
    z = complex(capsys.readouterr().out)
    assert z == pytest.approx(ml(0.7, 1, 1 + 2j), rel=1e-14)


def test_ml_domain_error(tmp_path):
    assert run("ml", "--alpha", "0.1", "--z", "1", "--out", tmp_path) == 2
    assert run("ml", "--alpha", "0.5", "--z", "abc", "--out", tmp_path) == 2


# -- field -------------------------------------------------------------------

def test_field_overlay_and_csv(tmp_path):
    assert run("field", "--system", "4.6", "--out", tmp_path) == 0
    header, data = read_csv(tmp_path / "4.6-field.csv")
    assert header == ["x", "y", "dx", "dy"] and len(data) == 21 * 21
    svg = (tmp_path / "4.6-field.svg").read_text()
    assert 'id="invariant-curve-0"' in svg


def test_field_separatrix_loop(tmp_path):
    assert run("field", "--system", "4.7", "--out", tmp_path, "--format", "svg") == 0
    svg = (tmp_path / "4.7-field.svg").read_text()
    assert 'id="invariant-curve-0"' in svg and 'id="invariant-curve-1"' in svg


def test_field_zero_system(tmp_path):
    assert run("field", "--system", "zero", "--grid=-1,1,-1,1,5", "--out", tmp_path, "--format", "csv") == 0
    _, data = read_csv(tmp_path / "zero-field.csv")
    assert len(data) == 25 and np.all(data[:, 2:] == 0)


def test_field_empty_grid(tmp_path):
    assert run("field", "--system", "3.1", "--grid=1,1,0,1,5", "--out", tmp_path) == 2
    assert run("field", "--system", "3.1", "--grid=0,1,0,1,1", "--out", tmp_path) == 2


def test_field_no_overlay(tmp_path):
    assert run("field", "--system", "4.6", "--no-overlay", "--out", tmp_path, "--format", "svg") == 0
    assert "invariant-curve" not in (tmp_path / "4.6-field.svg").read_text()


def test_system_round_trip_through_cli_output(tmp_path):
    for name in ("4.6", "4.9", "table2-vii"):
        assert run("analyze", "--system", name, "--out", tmp_path, "--format", "json") == 0
        stem = name.replace("*", "star")
        doc = json.loads((tmp_path / f"{stem}-report.json").read_text())
        spec = load_system(name)
        back = parse_system(doc["system"])
        assert back.field.P == spec.field.P and back.field.Q == spec.field.Q
        assert dump_system(back) == doc["system"]
