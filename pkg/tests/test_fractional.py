import csv
import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from fracinv.field import PolyField2D
from fracinv.fractional import (
    STABLE_MANIFOLD_EXACT,
    FractionalSystem,
    ScalarLinear,
    Trajectory,
    caputo_constant,
    caputo_power,
    cong_exact_solution,
    fam_solve,
    linear_exact,
    rk4_solve,
    solve_scalar_linear,
    stable_manifold_coefficient,
)
from fracinv.io import corpus_names, load_system
from fracinv.mittag_leffler import ml, ml_matrix


def decay(alpha, x0=1.0):
    return FractionalSystem(alpha, ScalarLinear(1.0), (x0,))


# -- system construction -----------------------------------------------------

@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
def test_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        FractionalSystem(alpha, ScalarLinear(1.0), (1.0,))


def test_state_dimension_checked():
    with pytest.raises(ValueError):
        FractionalSystem(0.5, [[1, 0], [0, 1]], (1.0,))
    with pytest.raises(ValueError):
        FractionalSystem(0.5, [[1, 0, 0], [0, 1, 0]], (1.0, 1.0))


def test_from_spec_requires_alpha_and_state():
    spec = load_system("4.5")
    with pytest.raises(ValueError):
        FractionalSystem.from_spec(spec)
    s = FractionalSystem.from_spec(spec, alpha=0.8, x0=(0.5, 0.5))
    assert not s.is_matrix
    lin = FractionalSystem.from_spec(load_system("4.44"))
    assert lin.is_matrix and lin.alpha == pytest.approx(0.7)


# -- FAM against closed forms ------------------------------------------------

def test_fam_half_order_decay_late_times():
    tr = fam_solve(decay(0.5), 2.0**-8, 1.0)
    exact = np.array([ml(0.5, 1, -math.sqrt(t)) for t in tr.t])
    err = np.abs(tr.x - exact)
    assert tr.t[0] == 0 and tr.x[0] == 1.0
    assert np.allclose(np.diff(tr.t), 2.0**-8)
    # the start-up layer (solution ~ 1 - c sqrt(t)) dominates the sup error
    assert err[tr.t >= 0.25].max() < 1e-4
    assert err.max() < 5e-4
    assert int(np.argmax(err)) <= 4


def test_fam_richardson_order():
    errs = []
    for k in range(5, 10):
        tr = fam_solve(decay(0.5), 2.0**-k, 1.0)
        errs.append(abs(tr.x[-1] - ml(0.5, 1, -1.0)))
    slope = np.polyfit(np.log2([2.0**-k for k in range(5, 10)]), np.log2(errs), 1)[0]
    assert slope >= min(2, 1.5) - 0.15


def test_fam_classical_decay():
    tr = fam_solve(decay(1.0), 2.0**-10, 2.0)
    assert np.abs(tr.x - np.exp(-tr.t)).max() < 1e-6


def _bounded_start(spec):
    x0 = np.array([float(v) for v in (spec.x0 or (0.1, 0.1))])
    for _ in range(20):
        s = FractionalSystem(1.0, spec.field, tuple(x0), spec.name)
        ref = rk4_solve(s, 2.0**-10, 2.0)
        if not ref.blowup and np.abs(ref.states).max() <= 1:
            return s, ref
        x0 = x0 / 2
    raise AssertionError(spec.name)


@pytest.mark.parametrize("name", corpus_names())
def test_classical_limit_matches_rk4(name):
    s, ref = _bounded_start(load_system(name))
    tr = fam_solve(s, 2.0**-12, 2.0)
    assert not tr.blowup
    assert np.abs(tr.states[::4] - ref.states).max() < 1e-6


@pytest.mark.parametrize("name,point", [
    ("3.1", (-0.125, -0.125)), ("3.1", (0.25, 0.0)), ("4.5", (1.0, 1.0)),
    ("4.8", (-1.0, 1.0)), ("table1-ii", (0.0, 0.5)), ("table2-vi", (1.0, 0.0)),
    ("4.4*", (-2.0, -6.0)),
])
def test_equilibrium_is_fixed(name, point):
    s = FractionalSystem(0.6, load_system(name).field, point)
    tr = fam_solve(s, 2.0**-6, 2.0)
    assert np.abs(tr.states - np.array(point)).max() <= 1e-15


def test_fam_deterministic():
    s = FractionalSystem(0.75, load_system("4.4*").field, (0.1, 0.3))
    a, b = fam_solve(s, 2.0**-7, 1.0), fam_solve(s, 2.0**-7, 1.0)
    assert np.array_equal(a.states, b.states)


def test_fam_blowup_truncates():
    s = FractionalSystem(0.8, PolyField2D(2, {(2, 0): 1}, {(0, 1): -1}), (1.0, 1.0))
    tr = fam_solve(s, 2.0**-6, 5.0)
    assert tr.blowup and "exceeded" in tr.message
    assert tr.t[-1] < 5.0 and len(tr.t) == len(tr.states)
    assert np.abs(tr.states[:-1]).max() <= 1e12


def test_fam_rejects_bad_step():
    with pytest.raises(ValueError):
        fam_solve(decay(0.5), 0.0, 1.0)


def test_linear_exact_vs_fam():
    s = FractionalSystem.from_spec(load_system("4.44"))
    tr = fam_solve(s, 2.0**-10, 1.0)
    ex = linear_exact(s, tr.t)
    assert np.abs(tr.states - ex.states).max() < 1e-4 * (1 + np.abs(ex.states).max())
    assert np.array_equal(ex.states[0], [1.0, 1.0])


def test_linear_exact_needs_matrix():
    s = FractionalSystem(0.5, load_system("4.5").field, (0.0, 0.0))
    with pytest.raises(ValueError):
        linear_exact(s, [0.0, 1.0])


def test_diagonal_matrix_is_componentwise():
    A = [[-1.0, 0.0], [0.0, 2.0]]
    for t in (0.0, 0.3, 1.7):
        E = ml_matrix(0.6, A, t)
        assert E[0, 0] == pytest.approx(ml(0.6, 1, -t**0.6), rel=1e-14, abs=1e-15)
        assert E[1, 1] == pytest.approx(ml(0.6, 1, 2 * t**0.6), rel=1e-14)
        assert E[0, 1] == 0 and E[1, 0] == 0


# -- variation of constants --------------------------------------------------

def test_scalar_unforced_is_ml():
    t = np.linspace(0, 3, 7)
    tr = solve_scalar_linear(0.6, 2.0, None, 1.5, t)
    assert np.allclose(tr.x, [1.5 * ml(0.6, 1, -2 * s**0.6) for s in t], rtol=1e-14)


def test_scalar_constant_forcing_no_decay():
    t = np.linspace(0, 2, 9)
    for a in (0.3, 0.5, 0.9):
        tr = solve_scalar_linear(a, 0.0, lambda s: np.ones_like(s), 0.5, t)
        assert np.abs(tr.x - (0.5 + t**a / gamma(a + 1))).max() < 1e-8


def test_scalar_classical_limit():
    t = np.linspace(0, 2, 5)
    tr = solve_scalar_linear(1.0, 1.0, np.sin, 0.3, t)
    exact = 0.3 * np.exp(-t) + (np.sin(t) - np.cos(t) + np.exp(-t)) / 2
    assert np.abs(tr.x - exact).max() < 1e-7


def test_scalar_forced_vs_fam():
    t = np.linspace(0, 1, 5)
    tr = solve_scalar_linear(0.7, 1.0, np.cos, 1.0, t, tol=1e-10)
    assert tr.meta["quadrature_error_estimate"] < 1e-8
    s = FractionalSystem(0.7, ScalarLinear(1.0, np.cos), (1.0,))
    fam = fam_solve(s, 2.0**-10, 1.0)
    assert np.abs(fam.x[::256] - tr.x).max() < 1e-4


def test_scalar_alpha_rejected():
    with pytest.raises(ValueError):
        solve_scalar_linear(1.2, 1.0, None, 1.0, [0.0])


# -- Caputo of monomials -----------------------------------------------------

def _caputo_quad(alpha, p, t):
    # D^alpha t^p = 1/Gamma(1-alpha) int_0^t (t-s)^(-alpha) p s^(p-1) ds
    v, _ = integrate.quad(lambda s: p * s ** (p - 1), 0, t, weight="alg", wvar=(0, -alpha),
                          epsabs=1e-13, epsrel=1e-12)
    return v / gamma(1 - alpha)


def test_caputo_examples():
    assert caputo_constant() == 0
    assert caputo_power(1, 2, 3) == pytest.approx(6.0, rel=1e-15)
    assert caputo_power(0.5, 1, 1) == pytest.approx(1 / gamma(1.5), rel=1e-15)
    assert caputo_power(0.5, 1, 1) == pytest.approx(1.1283792, abs=1e-7)


@pytest.mark.parametrize("alpha,p,t", [(0.5, 1, 1), (0.3, 2, 1.7), (0.8, 2.5, 0.4), (0.5, 3, 2)])
def test_caputo_vs_quadrature(alpha, p, t):
    assert caputo_power(alpha, p, t) == pytest.approx(_caputo_quad(alpha, p, t), rel=1e-9)


def test_caputo_rejects_nonpositive_power():
    for p in (0, -0.5):
        with pytest.raises(ValueError):
            caputo_power(0.5, p, 1.0)


# -- the half-order saddle ---------------------------------------------------

def test_saddle_exact_trivial_cases():
    t = np.linspace(0, 3, 7)
    zero = cong_exact_solution(0.0, 0.0, t)
    assert np.all(zero.states == 0)
    tr = cong_exact_solution(0.4, 0.0, t)
    assert np.all(tr.y == 0)
    assert np.allclose(tr.x, [0.4 * ml(0.5, 1, math.sqrt(s)) for s in t], rtol=1e-14)


def test_saddle_exact_vs_fam():
    c1, c2 = 0.2, 0.5
    s = FractionalSystem.from_spec(load_system("4.7.1"), alpha=0.5, x0=(c1, c2))
    fam = fam_solve(s, 2.0**-10, 2.0)
    idx = np.arange(0, len(fam.t), 64)
    ex = cong_exact_solution(c1, c2, fam.t[idx])
    assert np.abs(fam.states[idx] - ex.states).max() < 1e-3
    assert ex.meta["quadrature_error_estimate"] < 1e-7


def test_stable_manifold_coefficient():
    assert abs(stable_manifold_coefficient() - STABLE_MANIFOLD_EXACT) < 1e-6
    assert STABLE_MANIFOLD_EXACT == pytest.approx(0.2732395, abs=1e-7)
    assert ml(0.5, 1, -0.0) ** 2 == 1.0
    # 0 <= E_{1/2}(-sqrt s) <= 1, so the tail beyond s = 100 is below e^-100
    s = np.linspace(0, 100, 201)
    v = np.array([ml(0.5, 1, -math.sqrt(x)) for x in s])
    assert v.min() >= 0 and v.max() <= 1
    assert math.exp(-100) < 1e-40


# -- output ------------------------------------------------------------------

def test_trajectory_csv_roundtrip(tmp_path):
    tr = fam_solve(FractionalSystem(0.5, [[0, 1], [-1, 0]], (1 / 3, math.pi)), 2.0**-4, 0.5)
    path = tr.to_csv(tmp_path / "traj.csv")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "y"]
    back = np.array(rows[1:], dtype=float)
    assert np.array_equal(back[:, 0], tr.t)
    assert np.array_equal(back[:, 1:], tr.states)


def test_trajectory_at():
    tr = Trajectory([0, 0.5, 1.0], [[1, 2], [3, 4], [5, 6]], "x")
    assert list(tr.at(0.5)) == [3, 4]
    with pytest.raises(ValueError):
        tr.at(0.25)
