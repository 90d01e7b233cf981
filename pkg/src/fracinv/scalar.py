"""Exact scalars: rationals and one quadratic extension Q(sqrt d).

Coefficients of every polynomial object in the package are either
:class:`fractions.Fraction` or :class:`QuadNum`.  A ``QuadNum`` with a zero
irrational part is never constructed; use :func:`quad` which demotes it to a
``Fraction``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

__all__ = [
    "QuadNum",
    "quad",
    "to_exact",
    "sqrt_exact",
    "exact_sign",
    "conjugate",
    "is_exact",
    "squarefree_decomposition",
    "format_scalar",
    "parse_scalar",
]


def squarefree_decomposition(n: int) -> tuple[int, int]:
    """Return ``(f, s)`` with ``n == f*f*s`` and ``s`` squarefree (``n > 0``)."""
    if n <= 0:
        raise ValueError("n must be positive")
    f, s = 1, 1
    rest = n
    p = 2
    while p * p <= rest and p < 1_000_000:
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        f *= p ** (e // 2)
        if e % 2:
            s *= p
        p += 1 if p == 2 else 2
    if rest > 1:
        r = math.isqrt(rest)
        if r * r == rest:
            f *= r
        else:
            s *= rest
    return f, s


class QuadNum:
    """Number ``a + b*sqrt(d)`` with rational ``a, b`` and squarefree ``d > 1``."""

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)
        if self.d <= 1:
            raise ValueError("radicand must be a squarefree integer > 1")

    # -- coercion ------------------------------------------------------
    def _parts(self, other):
        if isinstance(other, QuadNum):
            if other.d != self.d:
                raise ValueError(
                    f"cannot mix sqrt({self.d}) and sqrt({other.d}) extensions"
                )
            return other.a, other.b
        if isinstance(other, (int, Rational)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return quad(self.a + p[0], self.b + p[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadNum(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return quad(self.a - p[0], self.b - p[1], self.d)

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - float(self)
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return quad(p[0] - self.a, p[1] - self.b, self.d)

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        p = self._parts(other)
        if p is None:
            return NotImplemented
        a, b = p
        return quad(self.a * a + self.d * self.b * b, self.a * b + self.b * a, self.d)

    __rmul__ = __mul__

    def inverse(self):
        n = self.a * self.a - self.d * self.b * self.b
        return quad(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        if isinstance(other, QuadNum):
            return self * other.inverse()
        if isinstance(other, (int, Rational)):
            o = Fraction(other)
            return quad(self.a / o, self.b / o, self.d)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        if isinstance(other, (int, Rational)):
            return Fraction(other) * self.inverse()
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int):
            return float(self) ** n
        if n < 0:
            return self.inverse() ** (-n)
        out = Fraction(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparisons ---------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QuadNum):
            return (self.a, self.b, self.d) == (other.a, other.b, other.d)
        if isinstance(other, (int, Rational)):
            return False  # b != 0 by construction
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        return exact_sign(self - other) < 0

    def __le__(self, other):
        return exact_sign(self - other) <= 0

    def __gt__(self, other):
        return exact_sign(self - other) > 0

    def __ge__(self, other):
        return exact_sign(self - other) >= 0

    def __abs__(self):
        return -self if exact_sign(self) < 0 else self

    def __bool__(self):
        return True

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __complex__(self):
        return complex(float(self))

    def __repr__(self):
        return f"QuadNum({self.a!r}, {self.b!r}, {self.d})"

    def __str__(self):
        return format_scalar(self)


def quad(a, b, d: int):
    """Build ``a + b*sqrt(d)``; returns a ``Fraction`` when ``b == 0``."""
    b = Fraction(b)
    if b == 0:
        return Fraction(a)
    return QuadNum(a, b, d)


def is_exact(v) -> bool:
    return isinstance(v, (int, Fraction, QuadNum))


def to_exact(v):
    """Coerce ints/Fractions/QuadNums; floats are rejected (use Fraction(...) explicitly)."""
    if isinstance(v, QuadNum):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return parse_scalar(v)
    raise TypeError(f"not an exact scalar: {v!r}")


def conjugate(v):
    """Galois conjugate ``a - b*sqrt(d)``; identity on rationals."""
    if isinstance(v, QuadNum):
        return QuadNum(v.a, -v.b, v.d)
    return v


def exact_sign(v) -> int:
    if isinstance(v, QuadNum):
        sa = (v.a > 0) - (v.a < 0)
        sb = (v.b > 0) - (v.b < 0)
        if sa == sb or sa == 0:
            return sb
        if sb == 0:
            return sa
        # opposite signs: compare a^2 with d*b^2
        lhs = v.a * v.a
        rhs = v.d * v.b * v.b
        return sa if lhs > rhs else sb
    v = Fraction(v)
    return (v > 0) - (v < 0)


def sqrt_exact(r):
    """Exact square root of a non-negative rational, or ``None`` if not representable.

    Returns a ``Fraction`` for perfect squares and a ``QuadNum`` otherwise.
    """
    r = Fraction(r)
    if r < 0:
        return None
    if r == 0:
        return Fraction(0)
    num = r.numerator * r.denominator
    f, s = squarefree_decomposition(num)
    if s == 1:
        return Fraction(f, r.denominator)
    return QuadNum(0, Fraction(f, r.denominator), s)


def format_scalar(v) -> str:
    """Compact human-readable form, e.g. ``-8√2`` or ``1/2+3√5``."""
    if isinstance(v, QuadNum):
        b = v.b
        if b == 1:
            irr = f"√{v.d}"
        elif b == -1:
            irr = f"-√{v.d}"
        else:
            irr = f"{b}√{v.d}"
        if v.a == 0:
            return irr
        sep = "" if irr.startswith("-") else "+"
        return f"{v.a}{sep}{irr}"
    if isinstance(v, float):
        return repr(v)
    return str(Fraction(v))


def parse_scalar(text):
    """Parse ``"p/q"``, an int, or the JSON object form ``{"rat","irr","d"}``."""
    if isinstance(text, dict):
        rat = Fraction(str(text.get("rat", "0")))
        irr = Fraction(str(text.get("irr", "0")))
        d = int(text.get("d", 2))
        return quad(rat, irr, d)
    if isinstance(text, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        return Fraction(text.strip())
    raise TypeError(f"cannot parse scalar from {text!r}")
