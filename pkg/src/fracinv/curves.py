"""Invariant-curve candidates and detection reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .poly import BivariatePoly, UPoly
from .scalar import QuadNum, format_scalar

__all__ = [
    "CurveKind",
    "Certificate",
    "CurveCandidate",
    "InvariantReport",
    "line_through",
    "scalar_to_json",
]


class CurveKind(str, Enum):
    LINE_THROUGH_ORIGIN = "LineThroughOrigin"
    VERTICAL_LINE = "VerticalLine"
    HORIZONTAL_LINE = "HorizontalLine"
    AFFINE_LINE = "AffineLine"
    PARABOLA_Y_OF_X = "ParabolaYofX"
    PARABOLA_X_OF_Y = "ParabolaXofY"
    ROTATED_PARABOLA = "RotatedParabola"
    CUBIC = "Cubic"
    POWER_FAMILY = "PowerFamily"
    EXPONENTIAL_FAMILY = "ExponentialFamily"
    LEVEL_SET = "LevelSet"
    IMPLICIT_POLY = "ImplicitPoly"


LINE_KINDS = {
    CurveKind.LINE_THROUGH_ORIGIN,
    CurveKind.VERTICAL_LINE,
    CurveKind.HORIZONTAL_LINE,
    CurveKind.AFFINE_LINE,
}

SINGLE = "single"
FAMILY = "infinite-family"


@dataclass(frozen=True)
class Certificate:
    """Evidence that a candidate is invariant.

    ``method`` is ``"darboux"`` (exact cofactor), ``"tangency"`` (identically
    zero graph residual) or ``"numeric"`` (float residual below tolerance).
    """

    method: str
    exact: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"method": self.method, "exact": self.exact, "detail": self.detail}


def scalar_to_json(v):
    if isinstance(v, QuadNum):
        return {"rat": str(v.a), "irr": str(v.b), "d": v.d}
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (tuple, list)):
        return [scalar_to_json(u) for u in v]
    if isinstance(v, BivariatePoly):
        return str(v)
    return v


@dataclass(frozen=True)
class CurveCandidate:
    """One invariant curve (or a one-parameter family of them).

    Lines keep their direction projectively as ``(p, q)`` (the vector
    ``(dx, dy)``), so vertical lines are ``(0, 1)`` with no special case.
    """

    kind: CurveKind
    params: dict
    multiplicity: str = SINGLE
    clause: str = ""
    certificate: Certificate | None = None

    @property
    def is_family(self) -> bool:
        return self.multiplicity == FAMILY

    @property
    def is_line(self) -> bool:
        return self.kind in LINE_KINDS

    # -- geometry ---------------------------------------------------------
    def line_geometry(self):
        """``((x0, y0), (p, q))`` for a single line; ``None`` otherwise."""
        if not self.is_line or self.is_family:
            return None
        k = self.kind
        if k is CurveKind.LINE_THROUGH_ORIGIN:
            return (0, 0), self.params["direction"]
        if k is CurveKind.VERTICAL_LINE:
            return (self.params["k"], 0), (0, 1)
        if k is CurveKind.HORIZONTAL_LINE:
            return (0, self.params["l"]), (1, 0)
        return self.params["point"], self.params["direction"]

    def slope(self):
        geo = self.line_geometry()
        if geo is None:
            return None
        p, q = geo[1]
        return None if p == 0 else q / p

    def implicit(self) -> BivariatePoly | None:
        """Polynomial ``g`` with the curve as its zero set (``None`` for families)."""
        if self.is_family:
            return None
        k, pr = self.kind, self.params
        if self.is_line:
            (x0, y0), (p, q) = self.line_geometry()
            return BivariatePoly({(1, 0): q, (0, 1): -p, (0, 0): p * y0 - q * x0})
        if k is CurveKind.PARABOLA_Y_OF_X:
            return BivariatePoly({(0, 1): 1, (2, 0): -pr["m"]})
        if k is CurveKind.PARABOLA_X_OF_Y:
            return BivariatePoly({(1, 0): 1, (0, 2): -pr["m"]})
        if k is CurveKind.ROTATED_PARABOLA:
            m1, m2, m3, m4, m5 = pr["coefficients"]
            return BivariatePoly({(2, 0): m1, (1, 1): m2, (0, 2): m3, (1, 0): m4, (0, 1): m5})
        if k is CurveKind.CUBIC:
            return BivariatePoly({(0, 1): 1, (3, 0): -1, (2, 0): -pr["m"], (1, 0): -pr["u"]})
        if k is CurveKind.LEVEL_SET:
            return pr["H"] - pr["c"]
        if k is CurveKind.IMPLICIT_POLY:
            return pr["g"]
        return None

    def describe(self) -> str:
        k, pr = self.kind, self.params
        f = format_scalar
        if k is CurveKind.LINE_THROUGH_ORIGIN:
            if self.is_family:
                return "infinite family: all lines y=mx (and x=0) through the origin"
            p, q = pr["direction"]
            if p == 0:
                return "x=0"
            return f"y={_graph(0, q / p)}"
        if k is CurveKind.VERTICAL_LINE:
            return "infinite family: all vertical lines" if self.is_family else f"x={f(pr['k'])}"
        if k is CurveKind.HORIZONTAL_LINE:
            return "infinite family: all horizontal lines" if self.is_family else f"y={f(pr['l'])}"
        if k is CurveKind.AFFINE_LINE:
            x0, y0 = pr["point"]
            if self.is_family:
                return f"infinite family: all lines through ({f(x0)}, {f(y0)})"
            p, q = pr["direction"]
            if p == 0:
                return f"x={f(x0)}"
            m = q / p
            return f"y={_graph(y0 - m * x0, m)}"
        if k is CurveKind.PARABOLA_Y_OF_X:
            return "infinite family: y=mx^2 for all m" if self.is_family else f"y={_graph(0, 0, pr['m'])}"
        if k is CurveKind.PARABOLA_X_OF_Y:
            return "infinite family: x=my^2 for all m" if self.is_family else f"x={_graph(0, 0, pr['m'], var='y')}"
        if k is CurveKind.ROTATED_PARABOLA:
            if self.is_family:
                return f"infinite family of parabolas {pr.get('form', '')}".strip()
            return f"{self.implicit()} = 0"
        if k is CurveKind.CUBIC:
            return f"y={_graph(0, pr['u'], pr['m'], 1)}"
        if k is CurveKind.POWER_FAMILY:
            kk = pr.get("k")
            return "infinite family: y=mx^k for all m, any k" if kk is None else (
                f"infinite family: y=mx^{f(kk)} for all m"
            )
        if k is CurveKind.EXPONENTIAL_FAMILY:
            return "infinite family: y=m e^x for all m"
        if k is CurveKind.LEVEL_SET:
            return f"{pr['H']} = {f(pr['c'])}"
        return f"{pr.get('g')} = 0"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "multiplicity": self.multiplicity,
            "params": {k: scalar_to_json(v) for k, v in self.params.items()},
            "description": self.describe(),
            "clause": self.clause,
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


def _graph(*coeffs, var="x") -> str:
    if any(isinstance(c, float) for c in coeffs):
        return UPoly([float(c) for c in coeffs]).to_str(var).replace("*", "")
    return UPoly(list(coeffs)).to_str(var).replace("*", "")


def line_through(point, direction, clause="", certificate=None) -> CurveCandidate:
    """Pick the most specific line kind for a point/direction pair."""
    (x0, y0), (p, q) = point, direction
    if x0 == 0 and y0 == 0:
        return CurveCandidate(
            CurveKind.LINE_THROUGH_ORIGIN, {"direction": (p, q)}, SINGLE, clause, certificate
        )
    return CurveCandidate(
        CurveKind.AFFINE_LINE, {"point": (x0, y0), "direction": (p, q)}, SINGLE, clause, certificate
    )


def _line_key(c: CurveCandidate):
    (x0, y0), (p, q) = c.line_geometry()
    A, B, C = float(q), -float(p), float(p) * float(y0) - float(q) * float(x0)
    s = A if abs(A) > 1e-14 else B
    return tuple(round(v / s, 9) + 0.0 for v in (A, B, C))


@dataclass
class InvariantReport:
    candidates: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def classification(self) -> str:
        if any(c.is_family for c in self.candidates):
            return "infinite family"
        if not self.candidates:
            return "none"
        return "single" if len(self.candidates) == 1 else "finite set"

    def add(self, cand: CurveCandidate) -> bool:
        """Append unless an equivalent curve is already present."""
        key = self._key(cand)
        if any(self._key(c) == key for c in self.candidates):
            return False
        self.candidates.append(cand)
        return True

    @staticmethod
    def _key(c: CurveCandidate):
        if c.is_line and not c.is_family:
            return ("line", _line_key(c))
        g = c.implicit()
        if g is not None:
            terms = g.terms
            lead = g.leading()[1]
            return ("curve", tuple(sorted((m, round(float(v / lead), 9)) for m, v in terms.items())))
        return (c.kind.value, c.multiplicity, tuple(sorted((k, str(v)) for k, v in c.params.items())))

    def merge(self, other: "InvariantReport") -> "InvariantReport":
        for c in other.candidates:
            self.add(c)
        self.diagnostics.extend(d for d in other.diagnostics if d not in self.diagnostics)
        return self

    def lines(self) -> list:
        return [c for c in self.candidates if c.is_line]

    def slopes(self) -> list:
        """Finite slopes of the single lines in the report (vertical lines excluded)."""
        out = []
        for c in self.candidates:
            if c.is_line and not c.is_family:
                m = c.slope()
                if m is not None:
                    out.append(m)
        return out

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "candidates": [c.to_dict() for c in self.candidates],
            "diagnostics": list(self.diagnostics),
        }

    def summary(self) -> str:
        if not self.candidates:
            lines = ["no invariant curves detected"]
        else:
            lines = [f"- {c.describe()}  [{c.clause}]" for c in self.candidates]
        return "\n".join(lines)


def normalize_direction(p, q):
    """Scale a direction so its first nonzero entry is 1."""
    if p != 0:
        return (p / p, q / p)
    return (0 * q, q / q)


def isclose_dir(d1, d2, tol=1e-10) -> bool:
    p1, q1 = (float(v) for v in d1)
    p2, q2 = (float(v) for v in d2)
    return abs(p1 * q2 - p2 * q1) <= tol * math.hypot(p1, q1) * math.hypot(p2, q2)
