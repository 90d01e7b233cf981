"""Invariant-curve detectors for planar polynomial fields.

Each detector turns closed-form coefficient conditions into candidate
curves and attaches a certificate from the exact verifier.  A detector
whose hypotheses fail returns an empty :class:`InvariantReport` whose
diagnostics name the failed clauses; structural preconditions (wrong
degree, constant terms where the origin must be an equilibrium) raise
``ValueError``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .curves import (
    FAMILY,
    Certificate,
    CurveCandidate,
    CurveKind,
    InvariantReport,
    isclose_dir,
    line_through,
)
from .field import (
    ExpGraph,
    NonHamiltonianError,
    PolyField2D,
    darboux_check,
    equilibria,
    eval_field,
    hamiltonian,
    is_hamiltonian,
    jacobian,
    lie_derivative_on_graph,
)
from .poly import BivariatePoly, UPoly, upoly_gcd
from .roots import real_roots
from .scalar import exact_sign, format_scalar, is_exact

__all__ = [
    "line_polynomials",
    "detect_lines_origin",
    "detect_lines_axis",
    "detect_lines_affine",
    "detect_lines",
    "detect_parabola_y",
    "detect_parabola_x",
    "detect_parabola_rotated",
    "detect_cubic",
    "detect_power_family",
    "detect_exponential_family",
    "detect_separatrix",
    "verify_curve",
    "ArtesDiagnostics",
    "validate_artes_bounds",
    "analyze",
]

NUMERIC_TOL = 1e-9
SUBSET_ENUM_MAX_DEGREE = 4


# ---------------------------------------------------------------------------
# certificates


def _fmt(v) -> str:
    return format_scalar(v)


def _numeric_darboux(field: PolyField2D, g: BivariatePoly) -> float:
    """Relative size of the remainder of ``grad(g).F`` modulo ``g`` for float ``g``."""
    flow = g.diff("x") * field.P + g.diff("y") * field.Q
    _, rem = divmod(flow, g)
    scale = max([abs(float(c)) for c in flow.terms.values()] + [1.0])
    return max([abs(float(c)) for c in rem.terms.values()] + [0.0]) / scale


def certify(field: PolyField2D, g: BivariatePoly) -> Certificate | None:
    """Darboux certificate for ``g = 0``; ``None`` if the curve is not invariant."""
    if g.is_exact():
        try:
            res = darboux_check(field, g)
        except ValueError:
            res = None
        if res is not None:
            if not res.ok:
                return None
            return Certificate("darboux", True, f"K = {res.cofactor}")
    r = _numeric_darboux(field, g)
    if r <= NUMERIC_TOL:
        return Certificate("numeric", False, f"relative remainder {r:.3g}")
    return None


def verify_curve(field: PolyField2D, g: BivariatePoly) -> Certificate | None:
    """Public alias of the exact invariance check used by every detector."""
    return certify(field, g)


def _require_origin_quadratic(field: PolyField2D) -> tuple[list, list]:
    if field.degree > 2:
        raise ValueError(f"quadratic field required (degree {field.degree})")
    if field.has_constant_terms():
        raise ValueError("origin must be an equilibrium: a(0,0) = b(0,0) = 0 required")
    return PolyField2D(2, field.P, field.Q).alias()


# ---------------------------------------------------------------------------
# lines


def line_polynomials(field: PolyField2D) -> dict[int, UPoly]:
    """The polynomials ``E_k(m)``, ``k = 1..n``, of the graph ``y = m x``.

    ``Q(x, m x) - m P(x, m x) = sum_k E_k(m) x^k``, so ``y = m x`` is
    invariant exactly when ``m`` is a common root of all ``E_k``.
    """
    X = BivariatePoly.x()
    M = BivariatePoly.y()  # second variable stands for the slope m
    R = field.Q.compose(X, X * M) - M * field.P.compose(X, X * M)
    by_k = R.coeffs_in("x")
    return {k: by_k.get(k, UPoly()) for k in range(1, field.degree + 1)}


def _eval_ok(polys, m) -> tuple[bool, bool]:
    """(holds, exactly) for ``m`` being a root of every polynomial."""
    try:
        if not isinstance(m, float):
            return all(p(m) == 0 for p in polys), True
    except ValueError:
        pass
    mf = float(m)
    for p in polys:
        scale = max([abs(c) for c in p.float_coeffs()] + [1.0]) * max(1.0, abs(mf)) ** p.degree
        if abs(np.polyval(p.float_coeffs()[::-1], mf)) > NUMERIC_TOL * scale:
            return False, False
    return True, False


def _quadratic_case(E1: UPoly, E2: UPoly) -> str:
    if E1.is_zero() and E2.is_zero():
        return "case 1(d)"
    if E1.is_zero():
        return "case 1(a)"
    if E2.is_zero():
        return "case 1(b)"
    return "case 1(c)"


def detect_lines_origin(field: PolyField2D) -> InvariantReport:
    """Invariant straight lines through the origin.

    Parameters
    ----------
    field : PolyField2D
        Field with ``a(0,0) = b(0,0) = 0``.

    Returns
    -------
    InvariantReport
        Lines ``y = m x`` for every real common root ``m`` of the
        ``E_k`` (see :func:`line_polynomials`), the vertical ``x = 0`` when
        ``P(0, y)`` vanishes identically, or the infinite family when every
        ``E_k`` is the zero polynomial.

    Raises
    ------
    ValueError
        If the field has a constant term; use :func:`detect_lines_affine`
        at an equilibrium instead.
    """
    if field.has_constant_terms():
        raise ValueError(
            "field has a nonzero constant term so the origin is not an equilibrium; "
            "use detect_lines_affine at an equilibrium"
        )
    rep = InvariantReport()
    E = line_polynomials(field)
    n = field.degree
    quad_label = _quadratic_case(E[1], E[2]) if n == 2 else None

    if all(p.is_zero() for p in E.values()):
        clause = f"quadratic lines, {quad_label}" if n == 2 else "all line conditions vanish"
        rep.add(CurveCandidate(
            CurveKind.LINE_THROUGH_ORIGIN, {}, FAMILY, clause,
            Certificate("tangency", True, "Q(x,mx) - m P(x,mx) = 0 identically in (x, m)"),
        ))
        rep.diagnostics.append(f"lines through origin: {clause}: every y=mx is invariant")
        return rep

    nonzero = [k for k, p in E.items() if not p.is_zero()]
    if n <= SUBSET_ENUM_MAX_DEGREE:
        subsets = []
        for r in range(1, n + 1):
            for S in itertools.combinations(range(1, n + 1), r):
                # a subset is admissible when the equations outside it vanish identically
                if all(E[k].is_zero() for k in range(1, n + 1) if k not in S):
                    subsets.append(S)
    else:
        subsets = [tuple(nonzero)]

    roots: list = []
    for S in subsets:
        active = [E[k] for k in S if not E[k].is_zero()]
        g = active[0]
        for p in active[1:]:
            g = upoly_gcd(g, p)
        if g.degree < 1:
            continue
        for m in real_roots(g):
            if all(abs(float(m) - float(r)) > 1e-10 * max(1.0, abs(float(r))) for r in roots):
                roots.append(m)

    if n == 2:
        clause = f"quadratic lines, {quad_label}"
        if quad_label == "case 1(a)":
            clause += f": cubic {(-E[2]).to_str('m')} = 0"
        elif quad_label == "case 1(b)":
            clause += f": quadratic {E[1].to_str('m')} = 0"
        else:
            clause += ": common roots of the quadratic and cubic"
    else:
        clause = "common roots of line conditions k in {" + ",".join(map(str, nonzero)) + "}"

    all_E = list(E.values())
    for m in sorted(roots, key=float):
        ok, exact = _eval_ok(all_E, m)
        if not ok:
            continue
        cand = line_through((0, 0), (1, m), clause)
        g = cand.implicit() if exact else BivariatePoly({(1, 0): float(m), (0, 1): -1.0})
        cert = certify(field, g) if exact else Certificate(
            "numeric", False, "all line conditions vanish to 1e-9"
        )
        if cert is None:
            continue
        rep.add(CurveCandidate(cand.kind, cand.params, cand.multiplicity, clause, cert))

    if field.P.compose(BivariatePoly(), BivariatePoly.y()).is_zero():
        cert = certify(field, BivariatePoly.x())
        rep.add(line_through((0, 0), (0, 1), "P(0,y) = 0 identically", cert))
    rep.diagnostics.append(f"lines through origin: {clause}")
    return rep


def _common_roots(polys: dict[int, UPoly]):
    nz = [p for p in polys.values() if not p.is_zero()]
    if not nz:
        return None
    g = nz[0]
    for p in nz[1:]:
        g = upoly_gcd(g, p)
    return real_roots(g) if g.degree >= 1 else []


def detect_lines_axis(field: PolyField2D) -> InvariantReport:
    """Vertical lines ``x = k`` with ``P(k, y) = 0`` and horizontal ``y = l`` with ``Q(x, l) = 0``."""
    rep = InvariantReport()
    ks = _common_roots(field.P.coeffs_in("y"))
    if ks is None:
        rep.add(CurveCandidate(CurveKind.VERTICAL_LINE, {}, FAMILY, "P = 0 identically",
                               Certificate("tangency", True, "P = 0")))
    else:
        for k in ks:
            g = BivariatePoly({(1, 0): 1, (0, 0): -k}) if not isinstance(k, float) else None
            cert = certify(field, g) if g is not None else Certificate(
                "numeric", False, "P(k, y) coefficients vanish to 1e-9")
            if cert:
                rep.add(CurveCandidate(CurveKind.VERTICAL_LINE, {"k": k}, "single",
                                       "axis-parallel: P(k,y) = 0 identically", cert))
    ls = _common_roots(field.Q.coeffs_in("x"))
    if ls is None:
        rep.add(CurveCandidate(CurveKind.HORIZONTAL_LINE, {}, FAMILY, "Q = 0 identically",
                               Certificate("tangency", True, "Q = 0")))
    else:
        for l in ls:
            g = BivariatePoly({(0, 1): 1, (0, 0): -l}) if not isinstance(l, float) else None
            cert = certify(field, g) if g is not None else Certificate(
                "numeric", False, "Q(x, l) coefficients vanish to 1e-9")
            if cert:
                rep.add(CurveCandidate(CurveKind.HORIZONTAL_LINE, {"l": l}, "single",
                                       "axis-parallel: Q(x,l) = 0 identically", cert))
    return rep


def detect_lines_affine(field: PolyField2D, eq) -> InvariantReport:
    """Invariant lines through the equilibrium ``eq``.

    The field is recentred exactly at ``eq`` and :func:`detect_lines_origin`
    runs on the shifted coefficients; lines are mapped back.  ``eq`` must be
    exact (``Fraction``/``QuadNum``/int) or a float that is recognisable as
    a small-denominator rational.
    """
    x0, y0 = (_as_exact_coordinate(v) for v in eq)
    F = eval_field(field, (float(x0), float(y0)))
    if math.hypot(*F) > 1e-10:
        raise ValueError(f"({_fmt(x0)}, {_fmt(y0)}) is not an equilibrium: |F| = {math.hypot(*F):.3g}")
    if field.P(x0, y0) != 0 or field.Q(x0, y0) != 0:
        raise ValueError("equilibrium is only approximate; pass exact coordinates")
    if x0 == 0 and y0 == 0:
        return detect_lines_origin(field)
    shifted = field.translate(x0, y0)
    base = detect_lines_origin(shifted)
    rep = InvariantReport()
    where = f"lines through ({_fmt(x0)}, {_fmt(y0)})"
    for c in base.candidates:
        if c.is_family:
            rep.add(CurveCandidate(CurveKind.AFFINE_LINE, {"point": (x0, y0)}, FAMILY,
                                   f"{where}: {c.clause}", c.certificate))
            continue
        _, d = c.line_geometry()
        cand = line_through((x0, y0), d, f"{where}: {c.clause}")
        g = cand.implicit()
        cert = certify(field, g) if g.is_exact() else c.certificate
        if cert:
            rep.add(CurveCandidate(cand.kind, cand.params, cand.multiplicity, cand.clause, cert))
    rep.diagnostics.extend(f"{where}: {d}" for d in base.diagnostics)
    return rep


def _as_exact_coordinate(v):
    if is_exact(v):
        return Fraction(v) if isinstance(v, int) else v
    r = Fraction(float(v)).limit_denominator(10**6)
    if abs(float(r) - float(v)) > 1e-12 * max(1.0, abs(float(v))):
        raise ValueError(f"coordinate {v!r} is not exactly representable; pass an exact value")
    return r


def detect_lines(field: PolyField2D) -> InvariantReport:
    """All invariant lines the detectors can reach.

    Axis-parallel lines, lines through the origin (when it is an
    equilibrium) and lines through every exactly known equilibrium.
    """
    rep = detect_lines_axis(field)
    if not field.has_constant_terms():
        rep.merge(detect_lines_origin(field))
    eqs = equilibria(field)
    if eqs.infinite:
        rep.diagnostics.append("equilibria form a continuum; affine line search skipped")
        return rep
    for pt, ex in zip(eqs.points, eqs.exact):
        if ex is None:
            rep.diagnostics.append(f"equilibrium ({pt[0]:.6g}, {pt[1]:.6g}) not exact; skipped")
            continue
        if ex[0] == 0 and ex[1] == 0:
            continue
        try:
            rep.merge(detect_lines_affine(field, ex))
        except ValueError as err:
            rep.diagnostics.append(f"affine lines at ({_fmt(ex[0])}, {_fmt(ex[1])}): {err}")
    return rep


# ---------------------------------------------------------------------------
# parabolas y = m x^2 and x = m y^2

# alias names after the mirror x <-> y (a_i of the swapped field is b_sigma(i))
_MIRROR = {"a1": "b2", "a2": "b1", "a3": "b4", "a4": "b3", "a5": "b5",
           "b1": "a2", "b2": "a1", "b3": "a4", "b4": "a3", "b5": "a5"}


def _rename(text: str, names: dict) -> str:
    out = []
    i = 0
    while i < len(text):
        tok = text[i:i + 2]
        if tok in names and (i + 2 == len(text) or not text[i + 2].isdigit()):
            out.append(names[tok])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def _parabola_core(field: PolyField2D, names: dict, kind: CurveKind, direction: str,
                   label: str) -> InvariantReport:
    (a1, a2, a3, a4, a5), (b1, b2, b3, b4, b5) = _require_origin_quadratic(field)
    rep = InvariantReport()
    n = (lambda s: _rename(s, names)) if names else (lambda s: s)
    failed = [txt for txt, ok in (("b1 = 0", b1 == 0), ("b4 = 2a5", b4 == 2 * a5), ("a4 = 0", a4 == 0))
              if not ok]
    if failed:
        rep.diagnostics.append(f"{label}: necessary condition violated: " + ", ".join(n(f) for f in failed))
        return rep
    lin_trivial = b3 == 0 and b2 == 2 * a1       # m (2a1 - b2) = b3 holds for all m
    cub_trivial = b5 == 2 * a3 and a2 == 0       # 2 a2 m = b5 - 2a3 holds for all m
    m = None
    if lin_trivial and cub_trivial:
        case = "2(d)"
    elif lin_trivial and a2 != 0 and b5 != 2 * a3:
        case, m = "2(a)", (b5 - 2 * a3) / (2 * a2)
    elif cub_trivial and b3 != 0 and b2 != 2 * a1:
        case, m = "2(b)", -b3 / (b2 - 2 * a1)
    elif (b3 != 0 and b2 != 2 * a1 and b5 != 2 * a3 and a2 != 0
          and 2 * a2 * b3 + b2 * b5 - 2 * b2 * a3 - 2 * a1 * b5 + 4 * a1 * a3 == 0):
        case, m = "2(c)", -b3 / (b2 - 2 * a1)
    else:
        rep.diagnostics.append(
            f"{label}: no case applies (" + n("m(2a1-b2) = b3") + " and " + n("2a2 m = b5-2a3")
            + " have no common nonzero solution)"
        )
        return rep
    clause = f"{label}, case {case}"
    if case == "2(d)":
        X, M = BivariatePoly.x(), BivariatePoly.y()
        P2, Q2 = (field.P, field.Q) if direction == "y_of_x" else (field.Q.swap(), field.P.swap())
        Y = M * X * X
        resid = 2 * M * X * P2.compose(X, Y) - Q2.compose(X, Y)
        if not resid.is_zero():  # cannot happen when the case analysis is right
            rep.diagnostics.append(f"{clause}: family residual nonzero")
            return rep
        rep.add(CurveCandidate(kind, {}, FAMILY, clause,
                               Certificate("tangency", True, "graph residual = 0 identically in (s, m)")))
        rep.diagnostics.append(f"{clause}: every m")
        return rep
    resid = lie_derivative_on_graph(field, UPoly([0, 0, m]), direction)
    if not resid.is_zero():
        rep.diagnostics.append(f"{clause}: m = {_fmt(m)} failed graph verification")
        return rep
    cand = CurveCandidate(kind, {"m": m}, "single", clause)
    cert = certify(field, cand.implicit())
    rep.add(CurveCandidate(kind, {"m": m}, "single", clause, cert))
    rep.diagnostics.append(f"{clause}: m = {_fmt(m)}")
    return rep


def detect_parabola_y(field: PolyField2D) -> InvariantReport:
    """Invariant parabolas ``y = m x^2`` of a quadratic field with an equilibrium at the origin.

    Necessary: ``b1 = 0``, ``b4 = 2 a5``, ``a4 = 0``.  Then ``m`` solves
    ``m (2 a1 - b2) = b3`` and ``2 a2 m = b5 - 2 a3``; cases (a)-(d) say which
    of the two equations pins ``m`` (case (d): neither, all ``m``).
    """
    return _parabola_core(field, {}, CurveKind.PARABOLA_Y_OF_X, "y_of_x", "parabola y=mx^2")


def detect_parabola_x(field: PolyField2D) -> InvariantReport:
    """Invariant parabolas ``x = m y^2``; mirror image of :func:`detect_parabola_y`."""
    _require_origin_quadratic(field)
    mirrored = PolyField2D(2, field.P, field.Q).swap()
    rep = _parabola_core(mirrored, _MIRROR, CurveKind.PARABOLA_X_OF_Y, "y_of_x", "parabola x=my^2")
    out = InvariantReport(diagnostics=rep.diagnostics)
    for c in rep.candidates:
        if c.is_family:
            out.add(c)
            continue
        # re-verify on the original orientation
        resid = lie_derivative_on_graph(field, UPoly([0, 0, c.params["m"]]), "x_of_y")
        if resid.is_zero():
            out.add(CurveCandidate(c.kind, c.params, c.multiplicity, c.clause,
                                   certify(field, c.implicit())))
    return out


# ---------------------------------------------------------------------------
# general parabola  m1 x^2 + m2 xy + m3 y^2 + m4 x + m5 y = 0


def _normalize(coeffs: list) -> list:
    """Scale so ``max |m_i| = 1`` with the first nonzero entry positive."""
    big = None
    for c in coeffs:
        if c != 0 and (big is None or abs(float(c)) > abs(float(big))):
            big = c
    if big is None:
        return coeffs
    big = abs(big)
    out = [c / big for c in coeffs]
    first = next(c for c in out if c != 0)
    sign = exact_sign(first) if not isinstance(first, float) else (1 if first > 0 else -1)
    return [c * sign if sign > 0 else -c for c in out]


def _theorem_branch_ok(a, b, theta: float, tol: float = 1e-10) -> bool:
    a1, a2, a3, a4, a5 = (float(v) for v in a)
    b1, b2, b3, b4, b5 = (float(v) for v in b)
    s, c = math.sin(theta), math.cos(theta)
    if abs(c) < 1e-14 or abs(s) < 1e-14:
        return False
    t = s / c
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    rhs = {
        "a1": b2 + b1 * (-1 / t + t),
        "a2": b1,
        "a3": (b3 / c * (29 * s + math.sin(3 * theta)) - 2 * b4 * s2 + 2 * b5 * (3 + c2)) / 16,
        "a4": t * (b4 * (3 + c2) + t * (-2 * b5 * s * s + b3 * (3 + c2) * t)) / 8,
        "a5": (-4 * b3 * (5 + c2) * s * s - 2 * (-5 * c + math.cos(3 * theta)) * (b4 * c + b5 * s))
        / (16 * c * c),
    }
    lhs = {"a1": a1, "a2": a2, "a3": a3, "a4": a4, "a5": a5}
    scale = max(1.0, *(abs(v) for v in (*a, *b)))
    return all(abs(lhs[k] - rhs[k]) <= tol * scale for k in lhs)


def _theorem_coefficients(b, t) -> list:
    """Parabola coefficients for ``tan(theta) = t``, scaled by ``cos(theta)``."""
    b1, b2, b3, b4, b5 = b
    one = 1 + t * t
    C = (1 - t * t) / one
    S = 2 * t / one
    B = b3 * (3 + C) ** 2 + S * (b4 * S - b5 * (3 + C))
    K = 2 * b1 / t - b2 + b1 * t
    return [B / 16, -B * t / 8, B * t * t / 16, t * K / one, K / one]


def _rotated_theorem_route(field, a, b, rep: InvariantReport) -> list:
    a1, a2 = a[0], a[1]
    b1, b2 = b[0], b[1]
    if a2 != b1:
        rep.diagnostics.append("rotated parabola: a2 = b1 fails, closed form not applicable")
        return []
    found = []
    t_roots = real_roots(UPoly([-b1, b2 - a1, b1]))  # b1 t^2 + (b2 - a1) t - b1 = 0, t = tan(theta)
    for t in t_roots:
        for k in (0, 1):
            theta = (math.atan(float(t)) + k * math.pi) % (2 * math.pi)
            if not _theorem_branch_ok(a, b, theta):
                continue
            try:
                coeffs = _normalize(_theorem_coefficients(b, t))
            except (ValueError, ZeroDivisionError):
                coeffs = _normalize(_theorem_coefficients([float(v) for v in b], float(t)))
            if coeffs[0] == 0 and coeffs[1] == 0 and coeffs[2] == 0:
                continue
            found.append((coeffs, theta, f"rotated parabola, closed form, theta = {theta:.12g}"))
    if not found:
        rep.diagnostics.append("rotated parabola: no theta branch satisfies the closed-form constraints")
    return found


def _nullspace(rows: list[list]) -> list[list]:
    """Null space basis of a small matrix (exact elimination, or SVD for floats)."""
    ncol = len(rows[0])
    if any(isinstance(v, float) for r in rows for v in r):
        A = np.array([[float(v) for v in r] for r in rows])
        _, s, vt = np.linalg.svd(A)
        tol = 1e-10 * max(1.0, s[0] if len(s) else 1.0)
        rank = int(np.sum(s > tol))
        return [list(v) for v in vt[rank:]]
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [vi - f * vr for vi, vr in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    free = [c for c in range(ncol) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncol
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fc]
        basis.append(v)
    return basis


def _rotated_general_route(field, a, b, rep: InvariantReport) -> list:
    """Parabolas ``s l^2 + w1 x + w2 y = 0`` with ``l`` an invariant direction of the quadratic part."""
    a1, a2, a3, a4, a5 = a
    b1, b2, b3, b4, b5 = b
    x, y = BivariatePoly.x(), BivariatePoly.y()
    P2 = BivariatePoly({(2, 0): a3, (0, 2): a4, (1, 1): a5})
    Q2 = BivariatePoly({(2, 0): b3, (0, 2): b4, (1, 1): b5})
    cubic = UPoly([a4, a5 - b4, a3 - b5, -b3])  # P2(t,1) - t Q2(t,1)
    if cubic.is_zero():
        rep.diagnostics.append("rotated parabola: every direction is invariant for the quadratic part")
        return []
    ells = []
    for t in real_roots(cubic):
        ells.append(x - y * t)
    if b3 == 0:
        ells.append(y)
    eigs = real_roots(UPoly([a1 * b2 - a2 * b1, -(a1 + b2), 1]))
    found = []
    for ell in ells:
        flow2 = ell.diff("x") * P2 + ell.diff("y") * Q2
        K1, rem = divmod(2 * flow2, ell)
        if not rem.is_zero() and _max_abs(rem) > 1e-10:
            continue
        for k0 in eigs:
            K = K1 + k0
            basis = [ell * ell, x, y]
            cols = []
            for gpart in basis:
                expr = gpart.diff("x") * field.P + gpart.diff("y") * field.Q - K * gpart
                cols.append(expr)
            monos = sorted({m for e in cols for m in e.terms})
            rows = [[e.coeff(*m) for e in cols] for m in monos]
            for v in _nullspace(rows):
                s, w1, w2 = v
                if _is_zero(s):
                    continue
                lx, ly = ell.coeff(1, 0), ell.coeff(0, 1)
                if _is_zero(w1 * ly - w2 * lx):
                    continue  # linear part parallel to the axis line: degenerate
                g = ell * ell * s + x * w1 + y * w2
                coeffs = _normalize([g.coeff(2, 0), g.coeff(1, 1), g.coeff(0, 2), g.coeff(1, 0), g.coeff(0, 1)])
                found.append((coeffs, None, "rotated parabola, invariant-direction construction"))
    return found


def _max_abs(p: BivariatePoly) -> float:
    return max([abs(float(c)) for c in p.terms.values()] + [0.0])


def _is_zero(v) -> bool:
    return abs(float(v)) < 1e-12 if isinstance(v, float) else v == 0


def detect_parabola_rotated(field: PolyField2D) -> InvariantReport:
    """Invariant parabolas in general position ``m1 x^2 + m2 xy + m3 y^2 + m4 x + m5 y = 0``.

    The closed-form route solves ``b1 t^2 + (b2 - a1) t - b1 = 0`` for
    ``t = tan(theta)``, checks the remaining coefficient constraints on every
    branch of ``theta`` in ``[0, 2 pi)``, and builds the coefficients as
    rational functions of ``t`` so that they stay exact in ``Q(sqrt d)``.
    When no branch applies (for instance a linear part that is not
    symmetric) a second construction is tried: the parabola axis must be an
    invariant direction of the quadratic part and the linear term a left
    eigenvector of the linear part, leaving a small linear system.  Every
    candidate is certified with :func:`darboux_check`.
    """
    a, b = _require_origin_quadratic(field)
    rep = InvariantReport()
    if b[0] == 0:
        rep.diagnostics.append(
            "rotated parabola: b1 = 0, angle formula undefined; deferred to y=mx^2 and x=my^2 detectors"
        )
        rep.merge(detect_parabola_y(field))
        rep.merge(detect_parabola_x(field))
        return rep
    found = _rotated_theorem_route(field, a, b, rep)
    if not found:
        found = _rotated_general_route(field, a, b, rep)
    for coeffs, theta, clause in found:
        params = {"coefficients": tuple(coeffs)}
        if theta is not None:
            params["theta"] = theta
        cand = CurveCandidate(CurveKind.ROTATED_PARABOLA, params, "single", clause)
        g = cand.implicit()
        cert = certify(field, g)
        if cert is None:
            rep.diagnostics.append(f"{clause}: candidate {g} failed verification")
            continue
        if rep.add(CurveCandidate(cand.kind, params, "single", clause, cert)):
            rep.diagnostics.append(f"{clause}: {g} = 0")
    return rep


# ---------------------------------------------------------------------------
# cubic, power and exponential families


def detect_cubic(field: PolyField2D) -> InvariantReport:
    """Invariant cubic ``y = x^3 + m x^2 + u x``.

    Conditions: ``a2 = a4 = a5 = b4 = 0``, ``b5 = 3 a3``, ``a3 != 0``,
    ``a1 != b2`` and the scalar constraint
    ``6a1^3 - 11a1^2 b2 + 6a1 b2^2 - b2^3 - a1 a3 b3 + a3 b2 b3 - 2 a3^2 b1 = 0``
    (the ``x^2`` coefficient of the tangency residual once ``m`` and ``u``
    are fixed by the lower orders).  Then ``m = (3a1 - b2)/a3`` and
    ``u = b1/(a1 - b2)``.
    """
    (a1, a2, a3, a4, a5), (b1, b2, b3, b4, b5) = _require_origin_quadratic(field)
    rep = InvariantReport()
    clauses = [
        ("a4 = 0", a4 == 0), ("a2 = 0", a2 == 0), ("b4 = 0", b4 == 0), ("a5 = 0", a5 == 0),
        ("b5 = 3a3", b5 == 3 * a3), ("a3≠0", a3 != 0), ("a1≠b2", a1 != b2),
    ]
    failed = [f"{txt} violated" for txt, ok in clauses if not ok]
    if a3 != 0 and a1 != b2:
        constraint = (6 * a1**3 - 11 * a1**2 * b2 + 6 * a1 * b2**2 - b2**3
                      - a1 * a3 * b3 + a3 * b2 * b3 - 2 * a3**2 * b1)
        if constraint != 0:
            failed.append("scalar constraint violated")
    if failed:
        rep.diagnostics.append("cubic: " + "; ".join(failed))
        return rep
    m = (3 * a1 - b2) / a3
    u = b1 / (a1 - b2)
    clause = "cubic y=x^3+mx^2+ux"
    resid = lie_derivative_on_graph(field, UPoly([0, u, m, 1]))
    if not resid.is_zero():
        rep.diagnostics.append(f"{clause}: graph verification failed")
        return rep
    cand = CurveCandidate(CurveKind.CUBIC, {"m": m, "u": u}, "single", clause)
    rep.add(CurveCandidate(cand.kind, cand.params, "single", clause, certify(field, cand.implicit())))
    rep.diagnostics.append(f"{clause}: m = {_fmt(m)}, u = {_fmt(u)}")
    return rep


def detect_power_family(field: PolyField2D) -> InvariantReport:
    """The family ``y = m x^k`` (all ``m``) for one exponent ``k > 0``.

    Requires ``b1 = b3 = a2 = a4 = 0`` and ``(b2, b5, b4) = k (a1, a3, a5)``.
    Then ``x Q = k y P`` so ``dy/dx = k y / x`` along every orbit.
    """
    (a1, a2, a3, a4, a5), (b1, b2, b3, b4, b5) = _require_origin_quadratic(field)
    rep = InvariantReport()
    failed = [f"{n} violated" for n, ok in
              (("b1 = 0", b1 == 0), ("b3 = 0", b3 == 0), ("a4 = 0", a4 == 0), ("a2 = 0", a2 == 0)) if not ok]
    ks = {}
    for (an, av), (bn, bv) in ((("a1", a1), ("b2", b2)), (("a3", a3), ("b5", b5)), (("a5", a5), ("b4", b4))):
        if av == 0:
            if bv != 0:
                failed.append(f"{bn} = k {an} violated ({an} = 0, {bn} ≠ 0)")
        else:
            ks[f"{bn}/{an}"] = bv / av
    distinct = []
    for v in ks.values():
        if v not in distinct:
            distinct.append(v)
    if len(distinct) > 1:
        failed.append("inconsistent k: " + ", ".join(f"{n} = {_fmt(v)}" for n, v in ks.items()))
    if failed:
        rep.diagnostics.append("power family: " + "; ".join(failed))
        return rep
    k = distinct[0] if distinct else None
    if k is not None and not (float(k) > 0):
        rep.diagnostics.append(f"power family: k = {_fmt(k)} is not positive")
        return rep
    x, y = BivariatePoly.x(), BivariatePoly.y()
    kk = k if k is not None else Fraction(1)
    if not (x * field.Q - y * field.P * kk).is_zero():
        rep.diagnostics.append("power family: x Q - k y P is not identically zero")
        return rep
    detail = "x Q - k y P = 0 identically" if k is not None else "field vanishes; every k"
    clause = "power family y=mx^k"
    rep.add(CurveCandidate(CurveKind.POWER_FAMILY, {"k": k} if k is not None else {}, FAMILY, clause,
                           Certificate("tangency", True, detail)))
    rep.diagnostics.append(f"{clause}: k = {_fmt(k) if k is not None else 'any'}")
    return rep


def detect_exponential_family(field: PolyField2D) -> InvariantReport:
    """The family ``y = m e^x``: needs ``a3 = a4 = a5 = b1 = b2 = b3 = 0``, ``b4 = a2``, ``b5 = a1``."""
    (a1, a2, a3, a4, a5), (b1, b2, b3, b4, b5) = _require_origin_quadratic(field)
    rep = InvariantReport()
    named = [("a3 = 0", a3 == 0), ("a4 = 0", a4 == 0), ("a5 = 0", a5 == 0), ("b1 = 0", b1 == 0),
             ("b2 = 0", b2 == 0), ("b3 = 0", b3 == 0), ("b4 = a2", b4 == a2), ("b5 = a1", b5 == a1)]
    failed = [f"{n} violated" for n, ok in named if not ok]
    resid = lie_derivative_on_graph(field, ExpGraph())
    if failed:
        rep.diagnostics.append("exponential family: " + "; ".join(failed)
                               + f" (residual {resid.poly} with z = m e^x)")
        return rep
    if not resid.is_zero():
        rep.diagnostics.append("exponential family: residual nonzero")
        return rep
    clause = "exponential family y=me^x"
    rep.add(CurveCandidate(CurveKind.EXPONENTIAL_FAMILY, {}, FAMILY, clause,
                           Certificate("tangency", True, "z P - Q = 0 with z = m e^x")))
    rep.diagnostics.append(f"{clause}: every m")
    return rep


# ---------------------------------------------------------------------------
# Hamiltonian separatrices


def detect_separatrix(field: PolyField2D) -> InvariantReport:
    """Level sets of the Hamiltonian through saddle equilibria.

    Raises
    ------
    NonHamiltonianError
        If the divergence is not identically zero.
    """
    H = hamiltonian(field).H
    rep = InvariantReport()
    eqs = equilibria(field)
    if eqs.infinite:
        rep.diagnostics.append("separatrix: continuum of equilibria")
        return rep
    for pt, ex in zip(eqs.points, eqs.exact):
        J = jacobian(field, pt)
        if np.linalg.det(J) >= 0:
            continue
        c = H(*ex) if ex is not None else H.evaluate_float(*pt)
        cand = CurveCandidate(CurveKind.LEVEL_SET, {"H": H, "c": c}, "single",
                              f"level set through saddle ({_fmt(ex[0]) if ex else pt[0]}, "
                              f"{_fmt(ex[1]) if ex else pt[1]})")
        g = H - c
        cert = certify(field, g)
        if cert is None:
            continue
        if rep.add(CurveCandidate(cand.kind, cand.params, "single", cand.clause, cert)):
            rep.diagnostics.append(f"separatrix: H = {_fmt(c)} through saddle {cand.clause.split('saddle ')[1]}")
    if not rep.candidates:
        rep.diagnostics.append("separatrix: no saddle equilibria")
    return rep


# ---------------------------------------------------------------------------
# sanity bounds on line configurations


@dataclass
class ArtesDiagnostics:
    ok: bool
    skipped: bool = False
    messages: list = dc_field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate_artes_bounds(report: InvariantReport, n: int) -> ArtesDiagnostics:
    """Check at most ``n`` parallel lines and at most ``n + 1`` slopes through any point.

    Only meaningful when the field has finitely many invariant lines, so
    reports containing a family of lines are skipped.
    """
    if any(c.is_line and c.is_family for c in report.candidates):
        return ArtesDiagnostics(True, True, ["skipped: infinitely many invariant lines"])
    geo = [c.line_geometry() for c in report.candidates if c.is_line]
    geo = [((float(p[0]), float(p[1])), (float(d[0]), float(d[1]))) for p, d in geo]
    msgs = []
    ok = True
    classes: list[list] = []
    for g in geo:
        for cl in classes:
            if isclose_dir(cl[0][1], g[1]):
                cl.append(g)
                break
        else:
            classes.append([g])
    for cl in classes:
        if len(cl) > n:
            ok = False
            msgs.append(f"{len(cl)} parallel lines with direction {cl[0][1]} exceed n = {n}")
    points = []
    for (p1, d1), (p2, d2) in itertools.combinations(geo, 2):
        det = d1[0] * (-d2[1]) - (-d2[0]) * d1[1]
        if abs(det) < 1e-12:
            continue
        rx, ry = p2[0] - p1[0], p2[1] - p1[1]
        s = (rx * (-d2[1]) - (-d2[0]) * ry) / det
        pt = (p1[0] + s * d1[0], p1[1] + s * d1[1])
        if all(math.hypot(pt[0] - q[0], pt[1] - q[1]) > 1e-9 for q in points):
            points.append(pt)
    for pt in points:
        dirs = []
        for p, d in geo:
            dist = abs((pt[0] - p[0]) * d[1] - (pt[1] - p[1]) * d[0]) / math.hypot(*d)
            if dist <= 1e-9 * max(1.0, math.hypot(*pt)) and not any(isclose_dir(d, e) for e in dirs):
                dirs.append(d)
        if len(dirs) > n + 1:
            ok = False
            msgs.append(f"{len(dirs)} slopes through ({pt[0]:.6g}, {pt[1]:.6g}) exceed n+1 = {n + 1}")
    if ok:
        msgs.append(f"{len(geo)} lines, {len(classes)} directions: bounds hold for n = {n}")
    return ArtesDiagnostics(ok, False, msgs)


# ---------------------------------------------------------------------------
# combined analysis


def analyze(field: PolyField2D, extra_curves=None) -> InvariantReport:
    """Run every applicable detector and merge the results.

    ``extra_curves`` is an optional iterable of ``(label, g)`` pairs of
    polynomials to test with the Darboux check; outcomes go to diagnostics
    and verified curves join the candidates as ``ImplicitPoly``.
    """
    rep = detect_lines(field)
    quadratic_origin = field.degree <= 2 and not field.has_constant_terms()
    if quadratic_origin:
        for det in (detect_parabola_y, detect_parabola_x, detect_parabola_rotated,
                    detect_cubic, detect_power_family, detect_exponential_family):
            rep.merge(det(field))
    if is_hamiltonian(field) and not field.is_zero():
        try:
            rep.merge(detect_separatrix(field))
        except NonHamiltonianError:  # pragma: no cover - guarded above
            pass
    for label, g in extra_curves or ():
        cert = certify(field, g)
        if cert is None:
            rep.diagnostics.append(f"{label}: {g} = 0 is NOT invariant (nonzero Darboux remainder)")
        else:
            rep.diagnostics.append(f"{label}: {g} = 0 is invariant ({cert.detail})")
            rep.add(CurveCandidate(CurveKind.IMPLICIT_POLY, {"g": g}, "single", label, cert))
    if field.is_zero():
        rep.diagnostics.append("trivial flow: every point is an equilibrium")
    art = validate_artes_bounds(rep, field.degree)
    rep.diagnostics.extend(f"line bounds: {m}" for m in art.messages)
    return rep
