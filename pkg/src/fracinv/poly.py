"""Exact univariate and bivariate polynomials over Q or Q(sqrt d)."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .scalar import QuadNum, conjugate, format_scalar, to_exact

__all__ = ["UPoly", "BivariatePoly"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _coerce(c):
    if isinstance(c, float):
        return c
    return to_exact(c)


class UPoly:
    """Univariate polynomial, coefficients stored low degree first.

    Trailing zeros are trimmed, so ``degree`` of the zero polynomial is -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_coerce(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def monomial(cls, k: int, c=1) -> "UPoly":
        return cls([0] * k + [c])

    @classmethod
    def x(cls) -> "UPoly":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_exact(self) -> bool:
        return not any(isinstance(c, float) for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs)

    def lead(self):
        return self.coeffs[-1] if self.coeffs else _ZERO

    def __getitem__(self, k):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else _ZERO

    def __eq__(self, other):
        if not isinstance(other, UPoly):
            other = UPoly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        if not isinstance(other, UPoly):
            other = UPoly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        return UPoly([self[k] + other[k] for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return UPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, UPoly):
            other = UPoly([other])
        return self + (-other)

    def __rsub__(self, other):
        return UPoly([other]) - self

    def __mul__(self, other):
        if not isinstance(other, UPoly):
            return UPoly([c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return UPoly()
        out = [_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return UPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = UPoly([1])
        for _ in range(n):
            out = out * self
        return out

    def __divmod__(self, other: "UPoly"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [_ZERO] * max(0, len(rem) - len(other.coeffs) + 1)
        lc = other.lead()
        dg = other.degree
        for k in range(len(rem) - 1, dg - 1, -1):
            c = rem[k]
            if c == 0:
                continue
            f = c / lc
            q[k - dg] = f
            for j, b in enumerate(other.coeffs):
                rem[k - dg + j] = rem[k - dg + j] - f * b
            rem[k] = _ZERO  # exact cancellation even with floats
        return UPoly(q), UPoly(rem)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self) -> "UPoly":
        if self.is_zero():
            return self
        lc = self.lead()
        return UPoly([c / lc for c in self.coeffs])

    def derivative(self) -> "UPoly":
        return UPoly([k * c for k, c in enumerate(self.coeffs)][1:])

    def conjugate(self) -> "UPoly":
        return UPoly([conjugate(c) for c in self.coeffs])

    def __call__(self, v):
        acc = _ZERO if not isinstance(v, (float, complex)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * v + c
        return acc

    def compose(self, inner: "UPoly") -> "UPoly":
        out = UPoly()
        for c in reversed(self.coeffs):
            out = out * inner + c
        return out

    def float_coeffs(self) -> list[float]:
        return [float(c) for c in self.coeffs]

    def __repr__(self):
        return f"UPoly({list(self.coeffs)!r})"

    def to_str(self, var: str = "x") -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            terms.append(_term_str(c, _mono(var, k)))
        return _join_terms(terms)

    __str__ = to_str


def upoly_gcd(p: UPoly, q: UPoly) -> UPoly:
    """Monic gcd (exact Euclid); gcd(0, 0) is the zero polynomial."""
    while not q.is_zero():
        p, q = q, p % q
    return p.monic()


UPoly.gcd = staticmethod(upoly_gcd)


def _mono(var, k):
    if k == 0:
        return ""
    if k == 1:
        return var
    return f"{var}^{k}"


def _term_str(c, mono: str) -> str:
    s = format_scalar(c)
    if not mono:
        return s
    if isinstance(c, QuadNum) and c.a != 0:
        s = f"({s})"
    if s == "1":
        return mono
    if s == "-1":
        return "-" + mono
    return f"{s}*{mono}"


def _join_terms(terms: list[str]) -> str:
    out = terms[0]
    for t in terms[1:]:
        if t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


def _glex_key(mono):
    i, j = mono
    return (i + j, i)


class BivariatePoly:
    """Polynomial in ``x, y`` as a sparse map ``(i, j) -> coefficient``.

    Canonical form: no stored zeros.  Term order for printing and division is
    graded lex with ``x > y``.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        clean = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            c = _coerce(c)
            if c != 0:
                clean[(int(i), int(j))] = c
        self._terms = clean

    @classmethod
    def const(cls, c) -> "BivariatePoly":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "BivariatePoly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "BivariatePoly":
        return cls({(0, 1): 1})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: _glex_key(kv[0]), reverse=True)

    def coeff(self, i: int, j: int):
        return self._terms.get((i, j), _ZERO)

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    def degree_in(self, var: str) -> int:
        k = 0 if var == "x" else 1
        if not self._terms:
            return -1
        return max(m[k] for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == (0, 0) for m in self._terms)

    def is_exact(self) -> bool:
        return not any(isinstance(c, float) for c in self._terms.values())

    def radicand(self) -> int | None:
        """The ``d`` of the quadratic extension used by the coefficients, if any."""
        ds = {c.d for c in self._terms.values() if isinstance(c, QuadNum)}
        if len(ds) > 1:
            raise ValueError(f"mixed quadratic extensions {sorted(ds)}")
        return ds.pop() if ds else None

    def leading(self):
        if not self._terms:
            return None
        m = max(self._terms, key=_glex_key)
        return m, self._terms[m]

    # -- arithmetic -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, BivariatePoly):
            other = BivariatePoly.const(other)
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        if not isinstance(other, BivariatePoly):
            other = BivariatePoly.const(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, _ZERO) + c
        return BivariatePoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, BivariatePoly):
            other = BivariatePoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return BivariatePoly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, BivariatePoly):
            return BivariatePoly({m: c * other for m, c in self._terms.items()})
        out: dict = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, _ZERO) + c1 * c2
        return BivariatePoly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return BivariatePoly({m: c / scalar for m, c in self._terms.items()})

    def __pow__(self, n: int):
        out = BivariatePoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __divmod__(self, g: "BivariatePoly"):
        """Division by a single polynomial; remainder is zero iff ``g`` divides ``self``."""
        if g.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        (gi, gj), gc = g.leading()
        p = dict(self._terms)
        q: dict = {}
        r: dict = {}
        while p:
            m = max(p, key=_glex_key)
            c = p[m]
            if m[0] >= gi and m[1] >= gj:
                f = c / gc
                shift = (m[0] - gi, m[1] - gj)
                q[shift] = q.get(shift, _ZERO) + f
                for (i, j), cg in g._terms.items():
                    k = (i + shift[0], j + shift[1])
                    v = p.get(k, _ZERO) - f * cg
                    if k == m or v == 0:
                        p.pop(k, None)
                    else:
                        p[k] = v
            else:
                r[m] = c
                del p[m]
        return BivariatePoly(q), BivariatePoly(r)

    # -- calculus ---------------------------------------------------------
    def diff(self, var: str) -> "BivariatePoly":
        out = {}
        for (i, j), c in self._terms.items():
            if var == "x" and i > 0:
                out[(i - 1, j)] = c * i
            elif var == "y" and j > 0:
                out[(i, j - 1)] = c * j
        return BivariatePoly(out)

    def integrate(self, var: str) -> "BivariatePoly":
        out = {}
        for (i, j), c in self._terms.items():
            if var == "x":
                out[(i + 1, j)] = c / Fraction(i + 1)
            else:
                out[(i, j + 1)] = c / Fraction(j + 1)
        return BivariatePoly(out)

    # -- evaluation / substitution ---------------------------------------
    def __call__(self, x, y):
        if isinstance(x, (float, complex)) or isinstance(y, (float, complex)) or (
            hasattr(x, "dtype") or hasattr(y, "dtype")
        ):
            return self.evaluate_float(x, y)
        acc = _ZERO
        for (i, j), c in self._terms.items():
            acc = acc + c * (x**i) * (y**j)
        return acc

    def evaluate_float(self, x, y):
        acc = 0.0
        for (i, j), c in self._terms.items():
            acc = acc + float(c) * (x**i) * (y**j)
        return acc

    def substitute(self, xs: UPoly, ys: UPoly) -> UPoly:
        """Compose with ``x -> xs(t)``, ``y -> ys(t)``, giving a univariate polynomial."""
        out = UPoly()
        xp = {0: UPoly([1])}
        yp = {0: UPoly([1])}
        for (i, j), c in self._terms.items():
            if i not in xp:
                xp[i] = xs**i
            if j not in yp:
                yp[j] = ys**j
            out = out + xp[i] * yp[j] * c
        return out

    def shift(self, x0, y0) -> "BivariatePoly":
        """Polynomial ``q(u, v) = p(x0 + u, y0 + v)`` (exact recentering)."""
        xs = BivariatePoly({(0, 0): x0, (1, 0): 1})
        ys = BivariatePoly({(0, 0): y0, (0, 1): 1})
        return self.compose(xs, ys)

    def compose(self, xs: "BivariatePoly", ys: "BivariatePoly") -> "BivariatePoly":
        out = BivariatePoly()
        xp: dict = {0: BivariatePoly.const(1)}
        yp: dict = {0: BivariatePoly.const(1)}
        for (i, j), c in self._terms.items():
            if i not in xp:
                xp[i] = xs**i
            if j not in yp:
                yp[j] = ys**j
            out = out + xp[i] * yp[j] * c
        return out

    def swap(self) -> "BivariatePoly":
        return BivariatePoly({(j, i): c for (i, j), c in self._terms.items()})

    def coeffs_in(self, var: str) -> dict[int, UPoly]:
        """View as polynomial in ``var`` with univariate coefficients in the other variable."""
        out: dict[int, list] = {}
        for (i, j), c in self._terms.items():
            k, other = (i, j) if var == "x" else (j, i)
            lst = out.setdefault(k, [])
            while len(lst) <= other:
                lst.append(_ZERO)
            lst[other] = c
        return {k: UPoly(v) for k, v in out.items()}

    def __repr__(self):
        return f"BivariatePoly({self.to_str()!r})"

    def to_str(self) -> str:
        if not self._terms:
            return "0"
        terms = []
        for (i, j), c in self.items():
            parts = [p for p in (_mono("x", i), _mono("y", j)) if p]
            terms.append(_term_str(c, "*".join(parts)))
        return _join_terms(terms)

    __str__ = to_str
