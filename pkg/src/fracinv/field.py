"""Planar polynomial vector fields and their exact algebra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Mapping, Sequence

import numpy as np

from .poly import BivariatePoly, UPoly, upoly_gcd
from .roots import numeric_real_roots, real_roots
from .scalar import QuadNum, to_exact

__all__ = [
    "PolyField2D",
    "ExpGraph",
    "ExpResidual",
    "DarbouxResult",
    "HamiltonianResult",
    "NonHamiltonianError",
    "EquilibriumSet",
    "eval_field",
    "lie_derivative_on_graph",
    "darboux_check",
    "divergence",
    "is_hamiltonian",
    "hamiltonian",
    "equilibria",
    "jacobian",
]

# quadratic alias index -> monomial, as in  a1 x + a2 y + a3 x^2 + a4 y^2 + a5 xy
QUADRATIC_ALIAS = {1: (1, 0), 2: (0, 1), 3: (2, 0), 4: (0, 2), 5: (1, 1)}

EQ_RESIDUAL_TOL = 1e-10
EQ_DEDUP_TOL = 1e-8


class PolyField2D:
    """Planar polynomial system ``x' = P(x, y)``, ``y' = Q(x, y)`` of degree ``n``.

    Parameters
    ----------
    degree : int
        Declared degree ``n``; every stored monomial satisfies ``i + j <= n``.
    a, b : mapping ``(i, j) -> scalar``
        Coefficients of ``P`` and ``Q``.  Scalars are ints, ``Fraction``,
        ``QuadNum`` or rational strings.  Absent keys are zero.
    """

    __slots__ = ("degree", "P", "Q")

    def __init__(self, degree: int, a: Mapping = None, b: Mapping = None):
        if int(degree) < 1:
            raise ValueError("degree must be a positive integer")
        self.degree = int(degree)
        self.P = a if isinstance(a, BivariatePoly) else BivariatePoly(_clean(a))
        self.Q = b if isinstance(b, BivariatePoly) else BivariatePoly(_clean(b))
        for poly in (self.P, self.Q):
            if poly.degree > self.degree:
                raise ValueError(
                    f"monomial of degree {poly.degree} exceeds declared degree {self.degree}"
                )
            if not poly.is_exact():
                raise TypeError("field coefficients must be exact")
        self.radicand  # validates a single extension

    @classmethod
    def from_polys(cls, P: BivariatePoly, Q: BivariatePoly, degree: int | None = None):
        n = degree if degree is not None else max(P.degree, Q.degree, 1)
        return cls(n, P, Q)

    @classmethod
    def quadratic(cls, a: Sequence, b: Sequence) -> "PolyField2D":
        """Build from the alias lists ``[a1..a5]`` and ``[b1..b5]``."""
        if len(a) != 5 or len(b) != 5:
            raise ValueError("quadratic alias needs five coefficients per component")
        am = {QUADRATIC_ALIAS[k + 1]: v for k, v in enumerate(a)}
        bm = {QUADRATIC_ALIAS[k + 1]: v for k, v in enumerate(b)}
        return cls(2, am, bm)

    @property
    def a(self) -> dict:
        return self.P.terms

    @property
    def b(self) -> dict:
        return self.Q.terms

    @property
    def radicand(self) -> int | None:
        ds = {d for d in (self.P.radicand(), self.Q.radicand()) if d is not None}
        if len(ds) > 1:
            raise ValueError("field mixes two quadratic extensions")
        return ds.pop() if ds else None

    def alias(self) -> tuple[list, list]:
        """Quadratic alias view ``([a1..a5], [b1..b5])``; requires degree 2."""
        if self.degree != 2:
            raise ValueError("alias view is defined for quadratic fields only")
        a = [self.P.coeff(*QUADRATIC_ALIAS[k]) for k in range(1, 6)]
        b = [self.Q.coeff(*QUADRATIC_ALIAS[k]) for k in range(1, 6)]
        return a, b

    def has_constant_terms(self) -> bool:
        return self.P.coeff(0, 0) != 0 or self.Q.coeff(0, 0) != 0

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero()

    # -- exact transformations ------------------------------------------
    def translate(self, x0, y0) -> "PolyField2D":
        """Field expressed in ``u = x - x0``, ``v = y - y0``."""
        return PolyField2D(self.degree, self.P.shift(x0, y0), self.Q.shift(x0, y0))

    def swap(self) -> "PolyField2D":
        """Mirror ``x <-> y`` (so ``x = m y^2`` becomes ``y = m x^2``)."""
        return PolyField2D(self.degree, self.Q.swap(), self.P.swap())

    def scale(self, c) -> "PolyField2D":
        c = to_exact(c)
        return PolyField2D(self.degree, self.P * c, self.Q * c)

    def linear_change(self, M: Sequence[Sequence]) -> "PolyField2D":
        """Field in new coordinates ``X' = M X`` for an exact invertible 2x2 ``M``."""
        (m11, m12), (m21, m22) = [[to_exact(v) for v in row] for row in M]
        det = m11 * m22 - m12 * m21
        if det == 0:
            raise ValueError("singular coordinate change")
        i11, i12, i21, i22 = m22 / det, -m12 / det, -m21 / det, m11 / det
        X = BivariatePoly({(1, 0): i11, (0, 1): i12})
        Y = BivariatePoly({(1, 0): i21, (0, 1): i22})
        P0 = self.P.compose(X, Y)
        Q0 = self.Q.compose(X, Y)
        return PolyField2D(self.degree, P0 * m11 + Q0 * m12, P0 * m21 + Q0 * m22)

    def __eq__(self, other):
        return (
            isinstance(other, PolyField2D)
            and self.degree == other.degree
            and self.P == other.P
            and self.Q == other.Q
        )

    def __hash__(self):
        return hash((self.degree, self.P, self.Q))

    def __call__(self, x, y):
        return self.P.evaluate_float(x, y), self.Q.evaluate_float(x, y)

    def __repr__(self):
        return f"PolyField2D(degree={self.degree}, x'={self.P}, y'={self.Q})"


def _clean(m: Mapping | None) -> dict:
    out = {}
    for k, v in (m or {}).items():
        if isinstance(k, str):
            i, j = (int(s) for s in k.split(","))
        else:
            i, j = k
        out[(i, j)] = to_exact(v) if not isinstance(v, QuadNum) else v
    return out


def eval_field(field: PolyField2D, point) -> tuple[float, float]:
    x, y = float(point[0]), float(point[1])
    return float(field.P.evaluate_float(x, y)), float(field.Q.evaluate_float(x, y))


def jacobian(field: PolyField2D, point) -> np.ndarray:
    x, y = float(point[0]), float(point[1])
    return np.array(
        [
            [field.P.diff("x").evaluate_float(x, y), field.P.diff("y").evaluate_float(x, y)],
            [field.Q.diff("x").evaluate_float(x, y), field.Q.diff("y").evaluate_float(x, y)],
        ],
        dtype=float,
    )


# ---------------------------------------------------------------------------
# tangency on graphs


@dataclass(frozen=True)
class ExpGraph:
    """The graph ``y = m e^x`` (or ``x = m e^y``); ``m=None`` means the whole family."""

    m: object = None


@dataclass(frozen=True)
class ExpResidual:
    """Tangency residual for an exponential graph.

    ``poly`` is a polynomial in ``(s, z)`` where ``s`` is the graph variable
    and ``z`` stands for ``m e^s``; the residual equals ``poly(s, m e^s)``.
    """

    poly: BivariatePoly
    m: object = None

    def is_zero(self) -> bool:
        if self.poly.is_zero():
            return True
        if self.m is not None and self.m == 0:
            return all(j > 0 for (_, j) in self.poly.terms)
        return False

    def evaluate(self, s, m=None):
        m = self.m if m is None else m
        if m is None:
            raise ValueError("a concrete m is needed to evaluate the residual")
        s = np.asarray(s, dtype=float)
        return self.poly.evaluate_float(s, float(m) * np.exp(s))


def lie_derivative_on_graph(field: PolyField2D, h, direction: str = "y_of_x"):
    """Tangency residual ``h'(s) F_dep(graph) - F_indep(graph)`` along a graph.

    For ``direction="y_of_x"`` the graph is ``y = h(x)`` and the residual is
    ``h'(x) P(x, h(x)) - Q(x, h(x))``; ``"x_of_y"`` swaps the roles.  ``h`` is
    a :class:`UPoly` (result is an exact ``UPoly``) or an :class:`ExpGraph`
    (result is an :class:`ExpResidual`).  The graph is invariant exactly when
    the residual is identically zero.
    """
    if direction not in ("y_of_x", "x_of_y"):
        raise ValueError(f"unknown direction {direction!r}")
    P, Q = (field.P, field.Q) if direction == "y_of_x" else (field.Q.swap(), field.P.swap())
    if isinstance(h, ExpGraph):
        z = BivariatePoly.y()
        return ExpResidual(z * P - Q, h.m)
    if not isinstance(h, UPoly):
        raise TypeError("h must be a UPoly or an ExpGraph")
    s = UPoly.x()
    Ps = P.substitute(s, h)
    Qs = Q.substitute(s, h)
    return h.derivative() * Ps - Qs


# ---------------------------------------------------------------------------
# Darboux / cofactor check


@dataclass(frozen=True)
class DarbouxResult:
    ok: bool
    cofactor: BivariatePoly | None
    remainder: BivariatePoly

    def __bool__(self):
        return self.ok


def darboux_check(field: PolyField2D, g: BivariatePoly) -> DarbouxResult:
    """Exact test of ``grad(g) . F = K g``; returns the cofactor ``K`` when it exists."""
    if g.is_constant():
        raise ValueError("g must be non-constant")
    flow = g.diff("x") * field.P + g.diff("y") * field.Q
    K, rem = divmod(flow, g)
    if rem.is_zero():
        return DarbouxResult(True, K, rem)
    return DarbouxResult(False, None, rem)


# ---------------------------------------------------------------------------
# Hamiltonian structure


class NonHamiltonianError(ValueError):
    def __init__(self, div: BivariatePoly):
        super().__init__(f"field is not Hamiltonian: divergence = {div}")
        self.divergence = div


@dataclass(frozen=True)
class HamiltonianResult:
    H: BivariatePoly
    note: str = "normalized so that H(0,0) = 0; dH/dy = x', dH/dx = -y'"


def divergence(field: PolyField2D) -> BivariatePoly:
    return field.P.diff("x") + field.Q.diff("y")


def is_hamiltonian(field: PolyField2D) -> bool:
    return divergence(field).is_zero()


def hamiltonian(field: PolyField2D) -> HamiltonianResult:
    div = divergence(field)
    if not div.is_zero():
        raise NonHamiltonianError(div)
    H = field.P.integrate("y")
    rest = -field.Q - H.diff("x")
    # zero divergence leaves a function of x alone
    assert rest.degree_in("y") <= 0
    H = H + rest.integrate("x")
    H = H - H.coeff(0, 0)
    return HamiltonianResult(H)


# ---------------------------------------------------------------------------
# equilibria


@dataclass
class EquilibriumSet:
    points: list = dc_field(default_factory=list)
    exact: list = dc_field(default_factory=list)
    infinite: bool = False
    method: str = ""

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]


def _det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = UPoly()
    for c in range(n):
        if M[0][c].is_zero():
            continue
        minor = [row[:c] + row[c + 1 :] for row in M[1:]]
        term = M[0][c] * _det(minor)
        total = total + term if c % 2 == 0 else total - term
    return total


def resultant_y(P: BivariatePoly, Q: BivariatePoly) -> UPoly:
    """Sylvester resultant with respect to ``y`` (polynomial in ``x``)."""
    pc = P.coeffs_in("y")
    qc = Q.coeffs_in("y")
    dp, dq = max(pc), max(qc)
    size = dp + dq
    zero = UPoly()
    rows = []
    for r in range(dq):
        row = [zero] * size
        for k in range(dp + 1):
            row[r + dp - k] = pc.get(k, zero)
        rows.append(row)
    for r in range(dp):
        row = [zero] * size
        for k in range(dq + 1):
            row[r + dq - k] = qc.get(k, zero)
        rows.append(row)
    return _det(rows)


def _in_y(poly: BivariatePoly, x0) -> UPoly:
    cs = poly.coeffs_in("y")
    if not cs:
        return UPoly()
    return UPoly([cs[k](x0) if k in cs else 0 for k in range(max(cs) + 1)])


def _newton(field, p, iters=50):
    x = np.array(p, dtype=float)
    for _ in range(iters):
        F = np.array(eval_field(field, x))
        if np.linalg.norm(F) < 1e-15:
            break
        J = jacobian(field, x)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x = x - step
        if np.linalg.norm(step) < 1e-16 * max(1.0, np.linalg.norm(x)):
            break
    return x


def _add_point(out: EquilibriumSet, field, pt, ex):
    F = eval_field(field, pt)
    if np.hypot(*F) > EQ_RESIDUAL_TOL or not np.all(np.isfinite(pt)):
        return
    for q in out.points:
        if np.hypot(pt[0] - q[0], pt[1] - q[1]) <= EQ_DEDUP_TOL:
            return
    out.points.append((float(pt[0]), float(pt[1])))
    out.exact.append(ex)


def equilibria(field: PolyField2D) -> EquilibriumSet:
    """All finite equilibria (resultant elimination for degree <= 2)."""
    out = EquilibriumSet(method="resultant" if field.degree <= 2 else "grid-newton")
    P, Q = field.P, field.Q
    if P.is_zero() or Q.is_zero():
        other = Q if P.is_zero() else P
        if other.is_zero() or not other.is_constant():
            out.infinite = True
            return out
        return out
    if field.degree > 2:
        for gx, gy in itertools.product(np.linspace(-10, 10, 21), repeat=2):
            p = _newton(field, (gx, gy))
            _add_point(out, field, p, None)
        _sort(out)
        return out

    if P.degree_in("y") <= 0 or Q.degree_in("y") <= 0:
        # one component depends on x alone: its roots give the abscissae
        only_x = P if P.degree_in("y") <= 0 else Q
        R = UPoly([only_x.coeff(i, 0) for i in range(only_x.degree + 1)])
    else:
        R = resultant_y(P, Q)
    if R.is_zero():
        out.infinite = True
        return out
    for x0 in real_roots(R):
        _solve_fibre(out, field, x0)
    _sort(out)
    return out


def _solve_fibre(out, field, x0):
    P, Q = field.P, field.Q
    if isinstance(x0, float):
        py = _in_y(P, x0) if not P.is_zero() else UPoly()
        qy = _in_y(Q, x0)
        cands = []
        for poly in (py, qy):
            if poly.degree >= 1:
                cands.extend(numeric_real_roots(poly))
        for y0 in cands:
            _add_point(out, field, _newton(field, (x0, y0)), None)
        return
    try:
        py, qy = _in_y(P, x0), _in_y(Q, x0)
        if py.is_zero() and qy.is_zero():
            out.infinite = True
            return
        if py.is_zero() or qy.is_zero():
            g = qy if py.is_zero() else py
        else:
            g = upoly_gcd(py, qy)
        ys = real_roots(g) if g.degree >= 1 else []
    except ValueError:
        return _solve_fibre(out, field, float(x0))
    for y0 in ys:
        exact = not isinstance(y0, float)
        pt = (float(x0), float(y0))
        if not exact:
            pt = tuple(_newton(field, pt))
        _add_point(out, field, pt, (x0, y0) if exact else None)


def _sort(out: EquilibriumSet):
    order = sorted(range(len(out.points)), key=lambda k: out.points[k])
    out.points = [out.points[k] for k in order]
    out.exact = [out.exact[k] for k in order]
