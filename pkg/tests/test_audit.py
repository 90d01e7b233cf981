import json
import math

import numpy as np
import pytest
from scipy.special import gamma

from fracinv.audit import (
    INCONCLUSIVE,
    INVARIANT,
    NON_INVARIANT,
    MLFunction,
    Monomial,
    curve_invariance_check,
    leibniz_obstruction_demo,
    line_distance,
    restart_divergence,
    stable_manifold_audit,
    subspace_invariance_check,
)
from fracinv.curves import CurveCandidate, CurveKind, line_through
from fracinv.detect import analyze
from fracinv.fractional import STABLE_MANIFOLD_EXACT, FractionalSystem
from fracinv.io import load_system

A44 = [[1.0, 3.0], [-3.0, 1.0]]


def lines_of(name):
    return {c.describe().replace(" ", ""): c for c in analyze(load_system(name).field).candidates
            if c.is_line}


# -- geometry ----------------------------------------------------------------

def test_line_distance_projective():
    vertical = ((1, 0), (0, 1))
    assert np.allclose(line_distance(vertical, [[3, 5], [1, -2]]), [2, 0])
    diag = ((0, 0), (1, 1))
    assert line_distance(diag, [[1, 0]])[0] == pytest.approx(1 / math.sqrt(2))
    cand = line_through((0, 0), (1, 3))
    assert line_distance(cand, [[0.1, 0.3]])[0] < 1e-16


# -- semigroup ---------------------------------------------------------------

def test_restart_fractional_diverges():
    res = restart_divergence(FractionalSystem(0.7, A44, (1.0, 1.0)), 0.3, 1.0)
    assert res.verdict == NON_INVARIANT
    assert res.metrics["restart_divergence"] > 1e-2
    assert res.metrics["restart_divergence"] > res.thresholds["non_invariant_if_divergence_above"]
    assert res.provenance["t_star"] == 0.3 and res.provenance["method"] == "exact"


def test_restart_classical_semigroup():
    res = restart_divergence(FractionalSystem(1.0, A44, (1.0, 1.0)), 0.3, 1.0)
    assert res.verdict == INVARIANT
    assert res.metrics["restart_divergence"] < 1e-8


def test_restart_eigenvector_line_is_kept():
    res = restart_divergence(FractionalSystem(0.7, [[2.0, 0.0], [0.0, -1.0]], (1.0, 0.0)), 0.3, 1.0,
                             line_direction=(1, 0))
    assert res.metrics["restart_line_distance"] < 1e-9
    # the time law still changes
    assert res.verdict == NON_INVARIANT


def test_restart_numerical_path():
    # polynomial right-hand side goes through the Adams solver
    spec = load_system("4.44")
    frac = restart_divergence(FractionalSystem(0.7, spec.field, (1.0, 1.0)), 0.25, 0.5, h=2.0**-7)
    classical = restart_divergence(FractionalSystem(1.0, spec.field, (1.0, 1.0)), 0.25, 0.5, h=2.0**-7)
    assert frac.provenance["method"] == "fam" and classical.provenance["method"] == "rk4"
    assert frac.verdict == NON_INVARIANT
    assert classical.verdict == INVARIANT


def test_restart_rejects_bad_times():
    s = FractionalSystem(0.7, A44, (1.0, 1.0))
    with pytest.raises(ValueError):
        restart_divergence(s, 0.0, 1.0)
    with pytest.raises(ValueError):
        restart_divergence(FractionalSystem(0.7, load_system("4.44").field, (1.0, 1.0)), 0.3, 1.0, h=2.0**-4)


def test_restart_blowup_inconclusive():
    spec = load_system("3.1")
    res = restart_divergence(FractionalSystem(0.9, spec.field, (2.0, 2.0)), 0.125, 4.0, h=2.0**-6)
    assert res.blowup and res.verdict == INCONCLUSIVE
    json.dumps(res.to_dict(), allow_nan=False)
    early = restart_divergence(FractionalSystem(0.9, spec.field, (8.0, 8.0)), 1.0, 1.0, h=2.0**-6)
    assert early.verdict == INCONCLUSIVE
    assert early.to_dict()["metrics"]["restart_divergence"] == "nan"


# -- lines -------------------------------------------------------------------

@pytest.mark.parametrize("x0,line", [((0.1, 0.3), "y=3x"), ((-0.1, 0.3), "y=-3x")])
def test_subspace_lines_stay_invariant(x0, line):
    cand = lines_of("4.4*")[line]
    s = FractionalSystem(0.75, load_system("4.4*").field, x0)
    res = subspace_invariance_check(s, cand, 1.0, 2.0**-8)
    assert res.verdict == INVARIANT
    assert res.metrics["max_distance"] < 1e-6
    assert res.metrics["algebraic_certificate"] is not None
    finer = subspace_invariance_check(s, cand, 1.0, 2.0**-9)
    assert res.metrics["distance_bound"] / finer.metrics["distance_bound"] >= 1.5
    assert finer.verdict == res.verdict


def test_subspace_off_line_rejected_then_forced():
    cand = lines_of("4.4*")["y=3x"]
    s = FractionalSystem(0.75, load_system("4.4*").field, (0.1, 0.31))
    with pytest.raises(ValueError, match="off the line"):
        subspace_invariance_check(s, cand, 1.0)
    res = subspace_invariance_check(s, cand, 1.0, force=True)
    assert res.metrics["initial_distance"] == pytest.approx(0.01 / math.sqrt(10), rel=1e-9)
    assert res.metrics["max_distance"] > 1e-3
    assert res.verdict == NON_INVARIANT


def test_subspace_needs_invariant_line():
    fake = line_through((0, 0), (1, 1))
    s = FractionalSystem(0.75, load_system("4.4*").field, (0.1, 0.1))
    with pytest.raises(ValueError, match="invariance condition"):
        subspace_invariance_check(s, fake, 1.0)


def test_subspace_vertical_line():
    cand = lines_of("4.5")["x=1"]
    s = FractionalSystem(0.6, load_system("4.5").field, (1.0, 0.5))
    res = subspace_invariance_check(s, cand, 1.0, 2.0**-7)
    assert res.verdict == INVARIANT and res.metrics["max_distance"] < 1e-12


# -- curves ------------------------------------------------------------------

def candidate_manifold():
    return CurveCandidate(CurveKind.PARABOLA_X_OF_Y, {"m": -STABLE_MANIFOLD_EXACT})


def test_candidate_curve_fails_both_orders():
    c2 = 0.1
    s = FractionalSystem(0.5, load_system("4.7.1").field, (-STABLE_MANIFOLD_EXACT * c2**2, c2))
    res = curve_invariance_check(s, candidate_manifold(), 2.0)
    assert res.verdict == NON_INVARIANT
    assert res.metrics["max_residual"] > 1e-4
    assert res.metrics["control_verdict"] == NON_INVARIANT
    assert "control" in res.trajectories


def test_separatrix_loop_contrast():
    spec = load_system("4.7")
    loop = next(c for c in analyze(spec.field).candidates if c.kind == CurveKind.LEVEL_SET)
    x0 = (-3 / math.sqrt(2), 0.0)
    classical = curve_invariance_check(FractionalSystem(1.0, spec.field, x0), loop, 5.0)
    assert classical.verdict == INVARIANT and classical.metrics["max_residual"] < 1e-8
    frac = curve_invariance_check(FractionalSystem(0.8, spec.field, x0), loop, 2.0)
    assert frac.verdict == NON_INVARIANT
    assert frac.metrics["control_verdict"] == INVARIANT


def test_parabola_classical_invariance():
    spec = load_system("table1-iii")
    par = analyze(spec.field).candidates[0]
    res = curve_invariance_check(FractionalSystem(1.0, spec.field, (0.2, 0.04)), par, 1.0)
    assert res.verdict == INVARIANT and res.metrics["max_residual"] < 1e-8


def test_curve_off_curve_rejected():
    s = FractionalSystem(0.5, load_system("4.7.1").field, (0.1, 0.1))
    with pytest.raises(ValueError, match="off the curve"):
        curve_invariance_check(s, candidate_manifold(), 1.0)


def test_refinement_keeps_verdicts():
    c2 = 0.1
    s = FractionalSystem(0.5, load_system("4.7.1").field, (-STABLE_MANIFOLD_EXACT * c2**2, c2))
    a = curve_invariance_check(s, candidate_manifold(), 2.0, 2.0**-7, control=False)
    b = curve_invariance_check(s, candidate_manifold(), 2.0, 2.0**-8, control=False)
    assert a.verdict == b.verdict == NON_INVARIANT


# -- candidate stable manifold -----------------------------------------------

def test_stable_manifold_refuted():
    res = stable_manifold_audit(1e-10, 20.0, cross_check=True)
    m = res.metrics
    assert res.verdict == NON_INVARIANT
    assert m["growth_ratio"] > 1e3
    assert m["late_abs_x_slope_sign"] == 1
    assert m["y_positive"] and m["y_decreasing"]
    assert m["c1"] == pytest.approx(-(4 / math.pi - 1) * 1e-20, rel=1e-6)
    assert m["fam_relative_deviation"] < 1e-3
    assert m["yT"] > 0


def test_stable_manifold_trivial():
    res = stable_manifold_audit(0.0, 5.0)
    assert res.verdict == INVARIANT and res.metrics["max_norm"] == 0


# -- Leibniz rule -----------------------------------------------------------

def test_leibniz_linear_input_half_order():
    t = np.linspace(0.05, 1, 20)
    demo = leibniz_obstruction_demo(0.5, Monomial(1), 2, t)
    assert np.allclose(demo.terms[1], 0.5 * t**1.5 / gamma(2.5), rtol=1e-13)
    assert np.all(np.abs(demo.extra) > 0)
    assert np.abs(demo.residual).max() < 1e-13


def test_leibniz_classical_reduces_to_product_rule():
    t = np.linspace(0.1, 2, 9)
    for p in (1, 2, 3):
        demo = leibniz_obstruction_demo(1.0, Monomial(p, 0.7), 3, t)
        assert np.all(demo.terms[2] == 0) and np.all(demo.terms[3] == 0)
        assert np.abs(demo.residual).max() < 1e-12


def test_leibniz_constant_input():
    t = np.linspace(0.1, 1, 5)
    demo = leibniz_obstruction_demo(0.5, Monomial(0, 2.0), 3, t)
    assert np.abs(demo.extra).max() < 1e-15
    assert np.abs(demo.residual).max() < 1e-15


def test_leibniz_ml_input():
    t = np.linspace(0.1, 1, 5)
    demo = leibniz_obstruction_demo(0.5, MLFunction(0.5, -1.0), 2, t)
    assert demo.residual is None
    assert demo.max_abs_extra > 1e-3


def test_leibniz_rejects_bad_input():
    with pytest.raises(TypeError):
        leibniz_obstruction_demo(0.5, np.sin, 2, [0.5])
    with pytest.raises(ValueError):
        leibniz_obstruction_demo(0.5, Monomial(1), 4, [0.5])
    with pytest.raises(ValueError):
        leibniz_obstruction_demo(0.5, Monomial(1), 2, [0.0])


# -- serialization -----------------------------------------------------------

def test_result_json_and_csv(tmp_path):
    res = restart_divergence(FractionalSystem(0.7, A44, (1.0, 1.0)), 0.3, 0.25, h=2.0**-5)
    paths = res.write(tmp_path, "semi")
    names = sorted(p.name for p in paths)
    assert names == ["semi-divergence.csv", "semi-original.csv", "semi-restart.csv", "semi.json"]
    doc = json.loads((tmp_path / "semi.json").read_text())
    assert doc["verdict"] == res.verdict
    assert set(doc) >= {"metrics", "thresholds", "provenance", "config_hash"}
    # verdict is reproducible from the recorded numbers
    thr = doc["thresholds"]["non_invariant_if_divergence_above"]
    assert (doc["metrics"]["restart_divergence"] > thr) == (doc["verdict"] == NON_INVARIANT)
    again = restart_divergence(FractionalSystem(0.7, A44, (1.0, 1.0)), 0.3, 0.25, h=2.0**-5)
    assert again.to_dict()["config_hash"] == doc["config_hash"]
