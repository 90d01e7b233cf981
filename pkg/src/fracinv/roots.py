"""Real roots of exact univariate polynomials.

Roots are returned exactly (``Fraction`` or ``QuadNum``) whenever they are
rational or lie in a single quadratic extension; anything else comes back as
a polished float.  Numeric roots use companion-matrix eigenvalues.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .poly import UPoly, upoly_gcd
from .scalar import QuadNum, sqrt_exact

__all__ = ["real_roots", "squarefree", "rational_roots", "numeric_real_roots"]

IMAG_CUTOFF = 1e-10
DEDUP_TOL = 1e-10
_MAX_RRT_CANDIDATES = 200_000


def squarefree(p: UPoly) -> UPoly:
    d = p.derivative()
    if d.is_zero():
        return p.monic()
    g = upoly_gcd(p, d)
    return (p // g).monic()


def _integer_coeffs(p: UPoly) -> list[int]:
    den = 1
    for c in p.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in p.coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return [v // g for v in ints] if g else ints


def _divisors(n: int) -> list[int] | None:
    n = abs(n)
    if n > 10**14:
        return None
    small, large = [], []
    k = 1
    while k * k <= n:
        if n % k == 0:
            small.append(k)
            if k * k != n:
                large.append(n // k)
        k += 1
        if k > 10**7:
            return None
    return small + large[::-1]


def rational_roots(p: UPoly) -> list[Fraction]:
    """Distinct rational roots of a polynomial with rational coefficients."""
    if not p.is_rational():
        raise TypeError("rational_roots needs rational coefficients")
    if p.is_zero():
        raise ValueError("zero polynomial has every number as a root")
    roots: list[Fraction] = []
    q = squarefree(p)
    if q[0] == 0:
        roots.append(Fraction(0))
        q = q // UPoly([0, 1])
    if q.degree < 1:
        return roots
    ints = _integer_coeffs(q)
    num_divs = _divisors(ints[0])
    den_divs = _divisors(ints[-1])
    if num_divs is not None and den_divs is not None and (
        len(num_divs) * len(den_divs) <= _MAX_RRT_CANDIDATES
    ):
        cands = {Fraction(s * a, b) for a in num_divs for b in den_divs for s in (1, -1)}
        for c in sorted(cands):
            if q(c) == 0:
                roots.append(c)
        return roots
    # oversized coefficients: recognise numeric roots instead
    for r in numeric_real_roots(q):
        c = Fraction(r).limit_denominator(10**9)
        if q(c) == 0 and c not in roots:
            roots.append(c)
    return roots


def numeric_real_roots(p: UPoly) -> list[float]:
    """Real roots via companion-matrix eigenvalues, Newton-polished."""
    if p.degree < 1:
        return []
    cs = p.float_coeffs()[::-1]  # highest first for numpy
    if p.degree == 1:
        return [-cs[1] / cs[0]]
    eig = np.roots(cs)
    out: list[float] = []
    dp = np.polyder(cs)
    for z in eig:
        if abs(z.imag) > IMAG_CUTOFF * max(1.0, abs(z)):
            continue
        r = float(z.real)
        for _ in range(3):
            fv = np.polyval(cs, r)
            dv = np.polyval(dp, r)
            if dv == 0 or not np.isfinite(fv / dv):
                break
            step = fv / dv
            r_new = r - step
            if abs(np.polyval(cs, r_new)) > abs(fv):
                break
            r = r_new
        if all(abs(r - o) > DEDUP_TOL * max(1.0, abs(r)) for o in out):
            out.append(r)
    return sorted(out)


def _quadratic_roots(a, b, c) -> list:
    """Exact real roots of ``a t^2 + b t + c`` with rational coefficients."""
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    s = sqrt_exact(disc)
    return [(-b + s) / (2 * a), (-b - s) / (2 * a)] if disc else [-b / (2 * a)]


def _exact_rational_poly_roots(q: UPoly) -> list:
    """Exact real roots of a rational polynomial in Q or some Q(sqrt s)."""
    found: list = list(rational_roots(q))
    rest = squarefree(q)
    for r in found:
        rest = rest // UPoly([-r, 1])
    if rest.degree == 2:
        found.extend(_quadratic_roots(rest[2], rest[1], rest[0]))
        return found
    if rest.degree < 3:
        return found
    # look for rational quadratic factors with real roots
    nums = numeric_real_roots(rest)
    used: set[int] = set()
    for i, j in itertools.combinations(range(len(nums)), 2):
        if i in used or j in used:
            continue
        s = Fraction(nums[i] + nums[j]).limit_denominator(10**8)
        pr = Fraction(nums[i] * nums[j]).limit_denominator(10**8)
        fac = UPoly([pr, -s, 1])
        quo, rem = divmod(rest, fac)
        if rem.is_zero():
            found.extend(_quadratic_roots(Fraction(1), -s, pr))
            used.update((i, j))
            rest = quo
    return found


def real_roots(p: UPoly) -> list:
    """Distinct real roots of ``p``; exact where recognisable, float otherwise.

    Coefficients may lie in Q or in one Q(sqrt d).  For the latter the norm
    ``p * conj(p)`` (rational coefficients) supplies exact candidates that
    are re-checked against ``p`` itself.
    """
    if p.is_zero():
        raise ValueError("zero polynomial: every value is a root")
    if p.degree < 1:
        return []
    if not p.is_exact():
        return numeric_real_roots(p)
    q = p if p.is_rational() else p * p.conjugate()
    exact: list = []
    for r in _exact_rational_poly_roots(q):
        try:
            ok = p(r) == 0
        except ValueError:  # r lives in a different quadratic extension
            ok = False
        if ok and r not in exact:
            exact.append(r)
    out = list(exact)
    ef = [float(r) for r in exact]
    for r in numeric_real_roots(squarefree(p)):
        if all(abs(r - e) > 1e-8 * max(1.0, abs(e)) for e in ef):
            out.append(r)
    return sorted(out, key=float)


def is_exact_root(v) -> bool:
    return isinstance(v, (Fraction, QuadNum))
