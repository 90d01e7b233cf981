"""Numerical experiments on invariance under fractional flows.

Every verdict is computed mechanically from the recorded metrics and
thresholds; thresholds are multiples of a solver tolerance estimated by step
halving, except where an exact solution makes the tolerance a property of the
Mittag-Leffler evaluation itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import binom, gamma, rgamma

from .curves import CurveCandidate
from .detect import certify
from .field import PolyField2D
from .fractional import (
    FractionalSystem,
    Trajectory,
    caputo_power,
    cong_exact_solution,
    fam_solve,
    rk4_solve,
    stable_manifold_coefficient,
)
from .io import config_hash, write_csv, write_json
from .mittag_leffler import ml, ml_general, ml_matrix

__all__ = [
    "INVARIANT",
    "NON_INVARIANT",
    "INCONCLUSIVE",
    "AuditResult",
    "restart_divergence",
    "subspace_invariance_check",
    "curve_invariance_check",
    "stable_manifold_audit",
    "Monomial",
    "MLFunction",
    "LeibnizDemo",
    "leibniz_obstruction_demo",
    "line_distance",
]

INVARIANT = "invariant-within-tol"
NON_INVARIANT = "non-invariant"
INCONCLUSIVE = "inconclusive"

ML_TOL = 1e-10      # accuracy of the scalar Mittag-Leffler evaluation
TOL_FLOOR = 1e-13   # rounding floor for step-halving estimates


@dataclass
class AuditResult:
    experiment: str
    verdict: str
    metrics: dict
    thresholds: dict
    provenance: dict
    trajectories: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    blowup: bool = False
    message: str = ""

    def to_dict(self) -> dict:
        prov = {k: _jsonable(v) for k, v in self.provenance.items()}
        return {
            "experiment": self.experiment,
            "verdict": self.verdict,
            "metrics": {k: _jsonable(v) for k, v in self.metrics.items()},
            "thresholds": {k: _jsonable(v) for k, v in self.thresholds.items()},
            "provenance": prov,
            "blowup": self.blowup,
            "message": self.message,
            "config_hash": config_hash({"experiment": self.experiment, **prov}),
        }

    def write(self, out_dir, stem: str | None = None, formats=("json", "csv")) -> list[Path]:
        """Result JSON plus one CSV per trajectory and residual series."""
        out_dir = Path(out_dir)
        stem = stem or self.experiment
        written = []
        if "json" in formats:
            written.append(write_json(out_dir / f"{stem}.json", self.to_dict()))
        if "csv" in formats:
            for name, tr in self.trajectories.items():
                written.append(tr.to_csv(out_dir / f"{stem}-{name}.csv"))
            for name, (t, v) in self.series.items():
                rows = ([float(a), float(b)] for a, b in zip(t, v))
                written.append(write_csv(out_dir / f"{stem}-{name}.csv", ["t", name], rows))
        return written


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (tuple, list)):
        return [_jsonable(u) for u in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _provenance(system: FractionalSystem, **extra) -> dict:
    rhs = system.rhs
    desc = rhs.tolist() if isinstance(rhs, np.ndarray) else str(rhs)
    return {"system": system.label or desc, "rhs": desc, "alpha": system.alpha,
            "x0": list(system.x0), **extra}


def _solve(system: FractionalSystem, h: float, T: float) -> Trajectory:
    return rk4_solve(system, h, T) if system.alpha == 1.0 else fam_solve(system, h, T)


def _halving_error(system: FractionalSystem, h: float, T: float, coarse: Trajectory | None = None):
    """Sup-norm difference between runs at ``h`` and ``h/2`` on the common nodes."""
    coarse = coarse if coarse is not None else _solve(system, h, T)
    fine = _solve(system, h / 2, T)
    n = min(len(coarse.t), (len(fine.t) + 1) // 2)
    diff = coarse.states[:n] - fine.states[: 2 * n - 1: 2]
    return float(np.max(np.linalg.norm(diff, axis=1))), coarse, fine


def _as_field(system: FractionalSystem) -> PolyField2D:
    if isinstance(system.rhs, PolyField2D):
        return system.rhs
    A = system.rhs
    fr = lambda v: Fraction(float(v))  # noqa: E731
    return PolyField2D(1, {(1, 0): fr(A[0, 0]), (0, 1): fr(A[0, 1])},
                       {(1, 0): fr(A[1, 0]), (0, 1): fr(A[1, 1])})


def line_distance(line, X) -> np.ndarray:
    """Euclidean distance of points ``X`` (shape ``(n, 2)``) from a line.

    ``line`` is a single-line :class:`CurveCandidate` or a pair
    ``(point, direction)``; the direction is projective, so vertical lines
    need no special case.
    """
    geo = line.line_geometry() if isinstance(line, CurveCandidate) else line
    if geo is None:
        raise ValueError("expected a single line")
    (x0, y0), (p, q) = geo
    x0, y0, p, q = (float(v) for v in (x0, y0, p, q))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.abs(q * (X[:, 0] - x0) - p * (X[:, 1] - y0)) / math.hypot(p, q)


# ---------------------------------------------------------------------------
# semigroup


def restart_divergence(system: FractionalSystem, t_star: float, T: float, h: float = 2.0**-9,
                       line_direction=None) -> AuditResult:
    """Compare the flow with a solver restarted from ``Phi(t_star)``.

    metric = sup over ``s in [0, T]`` of
    ``|restart(s) - Phi(t_star + s)| / (1 + |Phi(t_star + s)|)``.

    Linear (matrix) systems use the exact solution ``E_alpha(A t^alpha) X0``
    on both legs, so the only tolerance is that of the Mittag-Leffler
    evaluation.  Other systems use the numerical solver with ``t_star`` on
    the grid and a step-halving tolerance.

    ``line_direction`` additionally reports the distance of the restarted
    path from the line through the origin with that direction.
    """
    if t_star <= 0 or T <= 0:
        raise ValueError("t_star and T must be positive")
    n = int(round(T / h))
    s = h * np.arange(n + 1)
    x0 = np.array(system.x0)
    blow, msg = False, ""
    if system.is_matrix:
        A, a = system.rhs, system.alpha
        y0 = ml_matrix(a, A, t_star) @ x0
        phi = np.array([ml_matrix(a, A, t_star + si) @ x0 for si in s])
        rest = np.array([ml_matrix(a, A, si) @ y0 for si in s])
        tol, method = ML_TOL, "exact"
        orig_tr = Trajectory(t_star + s, phi, "exact", h, a)
        rest_tr = Trajectory(t_star + s, rest, "exact-restart", h, a)
    else:
        k = int(round(t_star / h))
        if abs(k * h - t_star) > 1e-12 * max(1.0, t_star):
            raise ValueError(f"t_star = {t_star} is not a multiple of h = {h}")
        err, orig, _ = _halving_error(system, h, t_star + T)
        blow = orig.blowup
        msg = orig.message
        y0 = orig.states[k] if len(orig.t) > k else orig.states[-1]
        restart = _solve(system.with_x0(tuple(y0)), h, T)
        blow = blow or restart.blowup
        msg = msg or restart.message
        m = max(0, min(len(restart.t), len(orig.t) - k))
        phi, rest = orig.states[k: k + m], restart.states[:m]
        s = s[:m]
        tol, method = max(err, TOL_FLOOR), orig.method
        orig_tr = Trajectory(orig.t, orig.states, orig.method, h, system.alpha)
        rest_tr = Trajectory(t_star + restart.t[:m], rest, restart.method + "-restart", h, system.alpha)
    rel = np.linalg.norm(rest - phi, axis=1) / (1 + np.linalg.norm(phi, axis=1))
    if rel.size == 0:
        # blow-up before t_star: nothing to compare
        s, rel = s[:1], np.array([math.nan])
    metric = float(rel.max())
    thr = 100 * tol
    if blow:
        verdict = INCONCLUSIVE
    else:
        verdict = NON_INVARIANT if metric > thr else INVARIANT
    metrics = {"restart_divergence": metric, "solver_tolerance": tol,
               "argmax_s": float(s[int(rel.argmax())]) if math.isfinite(metric) else math.nan}
    if line_direction is not None and len(rest):
        metrics["restart_line_distance"] = float(line_distance(((0, 0), line_direction), rest).max())
        metrics["original_line_distance"] = float(line_distance(((0, 0), line_direction), phi).max())
    return AuditResult(
        "semigroup", verdict, metrics, {"non_invariant_if_divergence_above": thr},
        _provenance(system, t_star=t_star, T=T, h=h, method=method),
        {"original": orig_tr, "restart": rest_tr}, {"divergence": (t_star + s, rel)},
        blow, msg,
    )


# ---------------------------------------------------------------------------
# lines and curves


def subspace_invariance_check(system: FractionalSystem, line: CurveCandidate, T: float,
                              h: float = 2.0**-8, force: bool = False) -> AuditResult:
    """Track the distance of a trajectory started on ``line`` from that line.

    Preconditions (skipped with ``force=True``): the initial state lies on
    the line to within ``1e-12`` and the line is algebraically invariant for
    the field.  The verdict is ``invariant-within-tol`` when the maximal
    distance is at most 50 times the step-halving error estimate.
    ``distance_bound`` (maximal distance plus that estimate) bounds the
    distance of the exact trajectory and shrinks with ``h``.
    """
    if not isinstance(line, CurveCandidate) or line.line_geometry() is None:
        raise ValueError("expected a single line candidate")
    d0 = float(line_distance(line, [system.x0])[0])
    cert = certify(_as_field(system), line.implicit())
    if not force:
        if d0 > 1e-12:
            raise ValueError(f"initial state is off the line (distance {d0:.3g})")
        if cert is None:
            raise ValueError(f"{line.describe()} fails the algebraic invariance condition")
    err, coarse, _ = _halving_error(system, h, T)
    dist = line_distance(line, coarse.states)
    dmax = float(dist.max())
    thr = max(50 * err, TOL_FLOOR)
    verdict = INCONCLUSIVE if coarse.blowup else (INVARIANT if dmax <= thr else NON_INVARIANT)
    return AuditResult(
        "subspace", verdict,
        {"max_distance": dmax, "distance_bound": dmax + err, "richardson_error": err,
         "initial_distance": d0, "algebraic_certificate": cert.method if cert else None},
        {"invariant_if_max_distance_at_most": thr},
        _provenance(system, line=line.describe(), T=T, h=h, method=coarse.method, forced=force),
        {"trajectory": coarse}, {"distance": (coarse.t, dist)}, coarse.blowup, coarse.message,
    )


def _residual_run(system, g, h, T):
    err, coarse, _ = _halving_error(system, h, T)
    r = np.abs(g.evaluate_float(coarse.states[:, 0], coarse.states[:, 1]))
    tol = max(err, TOL_FLOOR)
    verdict = INCONCLUSIVE if coarse.blowup else (NON_INVARIANT if r.max() > 100 * tol else INVARIANT)
    return coarse, r, tol, verdict


def curve_invariance_check(system: FractionalSystem, curve: CurveCandidate, T: float,
                           h: float = 2.0**-8, control: bool = True) -> AuditResult:
    """Residual ``|g(x(t), y(t))|`` along a trajectory started on ``g = 0``.

    The verdict for the system's own order is ``non-invariant`` when the
    residual exceeds 100 times the step-halving tolerance.  With ``control``
    the same check is repeated at ``alpha = 1`` with the classical
    integrator; its verdict is reported alongside.
    """
    g = curve.implicit()
    if g is None:
        raise ValueError("curve families cannot be audited; pick a member")
    r0 = abs(g.evaluate_float(*system.x0))
    if r0 >= 1e-12:
        raise ValueError(f"initial state is off the curve (residual {r0:.3g})")
    tr, r, tol, verdict = _residual_run(system, g, h, T)
    metrics = {"max_residual": float(r.max()), "solver_tolerance": tol}
    trajs, series = {"trajectory": tr}, {"residual": (tr.t, r)}
    if control and system.alpha != 1.0:
        ctr, cr, ctol, cverdict = _residual_run(system.with_alpha(1.0), g, h, T)
        metrics.update(control_max_residual=float(cr.max()), control_tolerance=ctol,
                       control_verdict=cverdict)
        trajs["control"] = ctr
        series["control_residual"] = (ctr.t, cr)
    elif control:
        metrics.update(control_max_residual=float(r.max()), control_tolerance=tol,
                       control_verdict=verdict)
    return AuditResult(
        "curve", verdict, metrics, {"non_invariant_if_residual_above": 100 * tol},
        _provenance(system, curve=curve.describe(), T=T, h=h, method=tr.method),
        trajs, series, tr.blowup, tr.message,
    )


# ---------------------------------------------------------------------------
# candidate stable manifold


def stable_manifold_audit(c2: float, T: float = 20.0, samples: int = 41,
                          cross_check: bool = False) -> AuditResult:
    """Follow the exact solution from a point on ``x = -(4/pi - 1) y^2``.

    ``c1 = -(4/pi - 1) c2^2`` places the initial state on the candidate
    manifold.  The candidate is refuted (``non-invariant``) when
    ``|x(T)| / |x(0)| > 1e3``.  With ``cross_check`` the exact solution is
    compared with the Adams solver on ``[0, 2]`` at ``h = 2^-10``.
    """
    coef = stable_manifold_coefficient()
    c1 = -coef * c2 * c2
    t = np.linspace(0.0, T, samples)
    sol = cong_exact_solution(c1, c2, t)
    x, y = sol.x, sol.y
    metrics: dict = {"coefficient": coef, "c1": c1, "c2": c2, "x0": float(x[0]), "xT": float(x[-1]),
                     "yT": float(y[-1])}
    if c2 == 0:
        metrics["max_norm"] = float(np.abs(sol.states).max())
        verdict = INVARIANT if metrics["max_norm"] == 0 else INCONCLUSIVE
    else:
        ratio = abs(x[-1]) / abs(x[0])
        ax = np.abs(x)
        metrics.update(
            growth_ratio=float(ratio),
            late_abs_x_slope_sign=int(np.sign(ax[-1] - ax[-2])),
            y_positive=bool(np.all(y > 0)),
            y_decreasing=bool(np.all(np.diff(y) < 0)),
            quadrature_error_estimate=sol.meta.get("quadrature_error_estimate"),
        )
        verdict = NON_INVARIANT if ratio > 1e3 else (INVARIANT if ratio < 1 else INCONCLUSIVE)
    if cross_check:
        from .io import load_system

        spec = load_system("4.7.1")
        sys_ = FractionalSystem(0.5, spec.field, (c1, c2), "4.7.1")
        fam = fam_solve(sys_, 2.0**-10, 2.0)
        ex = cong_exact_solution(c1, c2, fam.t[::64])
        scale = max(np.abs(ex.states).max(), 1e-300)
        metrics["fam_relative_deviation"] = float(np.abs(fam.states[::64] - ex.states).max() / scale)
    return AuditResult(
        "cong", verdict, metrics, {"refuted_if_growth_ratio_above": 1e3},
        {"system": "4.7.1", "alpha": 0.5, "c1": c1, "c2": c2, "T": T, "samples": samples,
         "method": "exact"},
        {"exact": sol},
    )


# ---------------------------------------------------------------------------
# Leibniz rule


@dataclass(frozen=True)
class Monomial:
    """``x(t) = c t^p`` with integer ``p >= 0``."""

    p: int
    c: float = 1.0

    def value(self, t):
        return self.c * np.asarray(t, dtype=float) ** self.p

    def deriv(self, k: int, t):
        if k > self.p:
            return np.zeros_like(np.asarray(t, dtype=float))
        fall = math.perm(self.p, k)
        return self.c * fall * np.asarray(t, dtype=float) ** (self.p - k)

    def rl_integral(self, order: float, t):
        t = np.asarray(t, dtype=float)
        return self.c * gamma(self.p + 1) * rgamma(self.p + 1 + order) * t ** (self.p + order)

    def caputo(self, alpha: float, t):
        return np.zeros_like(np.asarray(t, dtype=float)) if self.p == 0 else self.c * caputo_power(alpha, self.p, t)

    def squared(self) -> "Monomial":
        return Monomial(2 * self.p, self.c * self.c)


@dataclass(frozen=True)
class MLFunction:
    """``x(t) = c E_a(lam t^a)``."""

    a: float
    lam: float
    c: float = 1.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * ml(self.a, 1.0, self.lam * t**self.a)

    def deriv(self, k: int, t):
        # d^k/dt^k E_a(lam t^a) = t^(-k) E_{a,1-k}(lam t^a)
        t = np.asarray(t, dtype=float)
        if k == 0:
            return self.value(t)
        return self.c * t ** (-k) * ml_general(self.a, 1.0 - k, self.lam * t**self.a)

    def rl_integral(self, order: float, t):
        t = np.asarray(t, dtype=float)
        if order == 0:
            return self.value(t)
        return self.c * t**order * ml(self.a, 1.0 + order, self.lam * t**self.a)

    def caputo(self, alpha: float, t):
        return None

    def squared(self):
        return None


@dataclass
class LeibnizDemo:
    t: np.ndarray
    terms: dict            # k -> binom(alpha,k) I^{k-alpha}x * x^(k)
    boundary: np.ndarray   # the two t^(-alpha) x(0) terms
    extra: np.ndarray      # sum of terms plus boundary
    residual: np.ndarray | None  # D(x^2) - [D x] x - extra, when closed forms exist

    @property
    def max_abs_extra(self) -> float:
        return float(np.max(np.abs(self.extra)))


def leibniz_obstruction_demo(alpha: float, x, K: int, t_grid) -> LeibnizDemo:
    """Extra terms of the Caputo Leibniz rule for ``x(t)^2``.

    Evaluates ``sum_{k=1}^{K} binom(alpha, k) (I^{k-alpha} x) x^(k)`` and the
    ``t^-alpha x(0)`` terms; they vanish for every curve only in the classical
    case.  When ``x`` is a monomial the identity residual
    ``D^alpha x^2 - [D^alpha x] x - extra`` is returned as well.
    """
    if not isinstance(x, (Monomial, MLFunction)):
        raise TypeError("only analytic inputs (Monomial, MLFunction) are supported")
    if not 1 <= K <= 3:
        raise ValueError("K must be 1, 2 or 3")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    terms = {}
    for k in range(1, K + 1):
        bk = binom(alpha, k)
        terms[k] = bk * x.rl_integral(k - alpha, t) * x.deriv(k, t) if bk != 0 else np.zeros_like(t)
    x0 = float(x.value(0.0)) if isinstance(x, Monomial) else x.c
    kern = t ** (-alpha) * float(rgamma(1 - alpha))
    xt = x.value(t)
    boundary = kern * x0 * xt - kern * x0 * x0
    extra = sum(terms.values()) + boundary
    residual = None
    sq = x.squared()
    if sq is not None:
        residual = sq.caputo(alpha, t) - x.caputo(alpha, t) * xt - extra
    return LeibnizDemo(t, terms, boundary, extra, residual)
