"""Random quadratic fields with planted invariant lines through the origin."""

import random
from fractions import Fraction

from fracinv.field import PolyField2D
from fracinv.poly import BivariatePoly

X, Y = BivariatePoly.x(), BivariatePoly.y()

GRID = sorted({Fraction(p, q) for p in range(-12, 13) for q in range(1, 13)})


def _r(rng, lo=-4, hi=4):
    return Fraction(rng.randint(lo, hi), rng.randint(1, 3))


def planted_field(rng: random.Random, n_lines: int) -> PolyField2D:
    """Quadratic field through the origin with ``n_lines`` planted slopes from the grid.

    Two planted slopes m1, m2 use a linear part with eigen-directions (1, m1),
    (1, m2), a radial quadratic term (c.X) X and a term proportional to
    (y - m1 x)(y - m2 x); one slope uses a random P and
    Q = m P + (y - m x) L.  ``n_lines = 0`` gives an unconstrained field.
    """
    if n_lines == 0:
        a = [_r(rng) for _ in range(5)]
        b = [_r(rng) for _ in range(5)]
        return PolyField2D.quadratic(a, b)
    if n_lines == 1:
        m = rng.choice(GRID)
        P = BivariatePoly({k: _r(rng) for k in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]})
        L = _r(rng) * X + _r(rng) * Y + _r(rng)
        Q = P * m + (Y - X * m) * L
        return PolyField2D.from_polys(P, Q, 2)
    m1, m2 = rng.sample(GRID, 2)
    l1, l2 = _r(rng), _r(rng)
    # A = V diag(l1, l2) V^-1 with V = [[1, 1], [m1, m2]]
    det = m2 - m1
    A = [[(l1 * m2 - l2 * m1) / det, (l2 - l1) / det],
         [m1 * m2 * (l1 - l2) / det, (l2 * m2 - l1 * m1) / det]]
    c1, c2, r, s = _r(rng), _r(rng), _r(rng), _r(rng)
    radial = c1 * X + c2 * Y
    ell = (Y - X * m1) * (Y - X * m2)
    P = A[0][0] * X + A[0][1] * Y + radial * X - r * ell
    Q = A[1][0] * X + A[1][1] * Y + radial * Y + s * ell
    return PolyField2D.from_polys(P, Q, 2)


def brute_force_slopes(field: PolyField2D):
    """Grid slopes m with Q(x, m x) - m P(x, m x) identically zero."""
    out = set()
    for m in GRID:
        # coefficient of x^k in Q(x, m x) - m P(x, m x)
        coeffs = {}
        for (i, j), c in field.Q.terms.items():
            coeffs[i + j] = coeffs.get(i + j, 0) + c * m**j
        for (i, j), c in field.P.terms.items():
            coeffs[i + j] = coeffs.get(i + j, 0) - c * m ** (j + 1)
        if all(v == 0 for v in coeffs.values()):
            out.add(m)
    return out


def corpus_fields(seed=2024, n=100):
    rng = random.Random(seed)
    return [planted_field(rng, k % 3) for k in range(n)]
