"""Caputo fractional systems: solvers, exact solutions and closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import erfcx, gamma, roots_legendre

from .field import PolyField2D
from .io import write_csv
from .mittag_leffler import ml, ml_matrix

__all__ = [
    "ScalarLinear",
    "FractionalSystem",
    "Trajectory",
    "fam_solve",
    "rk4_solve",
    "linear_exact",
    "solve_scalar_linear",
    "caputo_power",
    "caputo_constant",
    "cong_exact_solution",
    "stable_manifold_coefficient",
    "STABLE_MANIFOLD_EXACT",
    "BLOWUP_NORM",
]

BLOWUP_NORM = 1e12
STABLE_MANIFOLD_EXACT = 4 / math.pi - 1


@dataclass(frozen=True)
class ScalarLinear:
    """Right-hand side ``-lam * x + g(t)``."""

    lam: float
    g: Callable | None = None


def _compile_poly(field: PolyField2D):
    tp = [(i, j, float(c)) for (i, j), c in field.P.terms.items()]
    tq = [(i, j, float(c)) for (i, j), c in field.Q.terms.items()]

    def f(t, X):
        x, y = X[0], X[1]
        return np.array([sum(c * x**i * y**j for i, j, c in tp),
                         sum(c * x**i * y**j for i, j, c in tq)])

    return f


@dataclass
class FractionalSystem:
    """``D^alpha X = rhs(X)`` with Caputo derivative of order ``0 < alpha <= 1``.

    ``rhs`` is a :class:`PolyField2D`, a real 2x2 matrix (linear system) or a
    :class:`ScalarLinear`.
    """

    alpha: float
    rhs: object
    x0: tuple
    label: str = ""

    def __post_init__(self):
        self.alpha = float(self.alpha)
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha = {self.alpha} must lie in (0, 1]")
        if isinstance(self.rhs, PolyField2D):
            self._f = _compile_poly(self.rhs)
            dim = 2
        elif isinstance(self.rhs, ScalarLinear):
            lam, g = float(self.rhs.lam), self.rhs.g
            self._f = (lambda t, X: np.array([-lam * X[0] + (g(t) if g else 0.0)]))
            dim = 1
        else:
            A = np.asarray(self.rhs, dtype=float)
            if A.shape != (2, 2):
                raise ValueError("matrix right-hand side must be 2x2")
            self.rhs = A
            self._f = lambda t, X: A @ X
            dim = 2
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (dim,):
            raise ValueError(f"initial state must have {dim} components")
        self.x0 = tuple(float(v) for v in x0)

    @property
    def dim(self) -> int:
        return len(self.x0)

    def f(self, t, X) -> np.ndarray:
        return self._f(t, np.asarray(X, dtype=float))

    def with_x0(self, x0) -> "FractionalSystem":
        return FractionalSystem(self.alpha, self.rhs, tuple(x0), self.label)

    def with_alpha(self, alpha) -> "FractionalSystem":
        return FractionalSystem(alpha, self.rhs, self.x0, self.label)

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.rhs, np.ndarray)

    @classmethod
    def from_spec(cls, spec, alpha=None, x0=None, prefer_matrix: bool = True) -> "FractionalSystem":
        """Build from a :class:`~fracinv.io.SystemSpec`; CLI values override file values.

        Linear homogeneous fields use the matrix path when ``prefer_matrix``.
        """
        alpha = alpha if alpha is not None else spec.alpha
        x0 = x0 if x0 is not None else spec.x0
        if alpha is None:
            raise ValueError(f"system {spec.name!r} has no alpha; supply one")
        if x0 is None:
            raise ValueError(f"system {spec.name!r} has no initial state; supply one")
        M = spec.matrix if prefer_matrix else None
        rhs = np.array([[float(v) for v in row] for row in M]) if M is not None else spec.field
        return cls(float(alpha), rhs, tuple(float(v) for v in x0), spec.name)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    method: str
    h: float | None = None
    alpha: float | None = None
    blowup: bool = False
    message: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    def at(self, t: float) -> np.ndarray:
        """State at a grid time (nearest node, must be within ``1e-9``)."""
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a grid node")
        return self.states[k]

    def to_csv(self, path):
        names = ["t", "x", "y"][: 1 + self.states.shape[1]]
        rows = ([float(tt), *map(float, s)] for tt, s in zip(self.t, self.states))
        return write_csv(path, names, rows)


# ---------------------------------------------------------------------------
# fractional Adams predictor-corrector


def fam_solve(system: FractionalSystem, h: float, T: float, corrector_iterations: int = 1) -> Trajectory:
    """Fractional Adams–Bashforth–Moulton method on a uniform grid.

    Product-rectangle predictor and product-trapezoidal corrector with the
    full memory sum (``O(N^2)`` work).  With ``alpha = 1`` it reduces to the
    trapezoidal PECE scheme.

    Parameters
    ----------
    system : FractionalSystem
    h : float
        Step size.
    T : float
        Final time; ``N = round(T / h)`` steps are taken.
    corrector_iterations : int, default 1
        Number of corrector passes (1 gives PECE).

    Returns
    -------
    Trajectory
        Truncated with ``blowup=True`` if the state norm exceeds ``1e12``.
    """
    if h <= 0 or T <= 0:
        raise ValueError("h and T must be positive")
    N = int(round(T / h))
    a = system.alpha
    x0 = np.array(system.x0)
    d = x0.size
    t = h * np.arange(N + 1)
    X = np.zeros((N + 1, d))
    F = np.zeros((N + 1, d))
    X[0] = x0
    F[0] = system.f(0.0, x0)
    k = np.arange(N + 2, dtype=float)
    b = (k[1:] ** a - k[:-1] ** a)                             # b_k = (k+1)^a - k^a
    c = (k[:-1] + 2) ** (a + 1) + k[:-1] ** (a + 1) - 2 * (k[:-1] + 1) ** (a + 1)
    cp = h**a / gamma(a + 1)
    cc = h**a / gamma(a + 2)
    blow = False
    msg = ""
    n_done = N
    for n in range(N):
        # predictor: sum_{j=0}^{n} b_{n-j} F_j
        pred_sum = b[n::-1] @ F[: n + 1]
        xp = x0 + cp * pred_sum
        a0 = n ** (a + 1) - (n - a) * (n + 1) ** a
        hist = a0 * F[0]
        if n >= 1:
            hist = hist + c[n - 1::-1][:n] @ F[1: n + 1]
        xc = xp
        for _ in range(corrector_iterations):
            xc = x0 + cc * (system.f(t[n + 1], xc) + hist)
        X[n + 1] = xc
        F[n + 1] = system.f(t[n + 1], xc)
        if not np.all(np.isfinite(xc)) or np.linalg.norm(xc) > BLOWUP_NORM:
            blow = True
            n_done = n + 1
            msg = f"state norm exceeded {BLOWUP_NORM:g} at t = {t[n + 1]:.6g}; trajectory truncated"
            break
    return Trajectory(t[: n_done + 1], X[: n_done + 1], "fam", h, a, blow, msg,
                      {"corrector_iterations": corrector_iterations})


def rk4_solve(system: FractionalSystem, h: float, T: float) -> Trajectory:
    """Classical fourth-order Runge–Kutta (the ``alpha = 1`` reference)."""
    N = int(round(T / h))
    t = h * np.arange(N + 1)
    X = np.zeros((N + 1, system.dim))
    X[0] = system.x0
    f = system.f
    blow, msg, n_done = False, "", N
    for n in range(N):
        x, tn = X[n], t[n]
        k1 = f(tn, x)
        k2 = f(tn + h / 2, x + h / 2 * k1)
        k3 = f(tn + h / 2, x + h / 2 * k2)
        k4 = f(tn + h, x + h * k3)
        X[n + 1] = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(X[n + 1])) or np.linalg.norm(X[n + 1]) > BLOWUP_NORM:
            blow, n_done = True, n + 1
            msg = f"state norm exceeded {BLOWUP_NORM:g} at t = {t[n + 1]:.6g}; trajectory truncated"
            break
    return Trajectory(t[: n_done + 1], X[: n_done + 1], "rk4", h, 1.0, blow, msg)


def linear_exact(system: FractionalSystem, t_grid) -> Trajectory:
    """``X(t) = E_alpha(A t^alpha) X0`` for a matrix system."""
    if not system.is_matrix:
        raise ValueError("exact solution needs a linear (matrix) system")
    t_grid = np.asarray(t_grid, dtype=float)
    x0 = np.array(system.x0)
    X = np.array([ml_matrix(system.alpha, system.rhs, float(t)) @ x0 for t in t_grid])
    return Trajectory(t_grid, X, "exact", None, system.alpha)


# ---------------------------------------------------------------------------
# variation of constants for D^alpha x = -lam x + g(t)


def _gl_graded(fun, b, per, nodes, levels=48):
    """Gauss–Legendre on dyadic intervals ``[b 2^-(k+1), b 2^-k]`` graded toward 0.

    Each dyadic interval is split into ``per`` equal panels; the last one,
    ``[0, b 2^-levels]``, is a single panel.  Algebraic endpoint behaviour at 0
    is then integrated at the full rate of the rule.
    """
    xg, wg = nodes
    hi = b * 2.0 ** -np.arange(levels)
    lo = hi / 2
    frac = np.arange(per + 1) / per
    edges = (lo[:, None] + (hi - lo)[:, None] * frac[None, :])
    a_, b_ = edges[:, :-1].ravel(), edges[:, 1:].ravel()
    a_ = np.append(a_, 0.0)
    b_ = np.append(b_, lo[-1])
    xs = (a_ + b_)[:, None] / 2 + (b_ - a_)[:, None] / 2 * xg[None, :]
    ws = (b_ - a_)[:, None] / 2 * wg[None, :]
    return float(np.sum(ws * fun(xs.ravel()).reshape(xs.shape)))


def _refined(fun, b, tol, order=16, max_per=64):
    nodes = roots_legendre(order)
    per = 1
    prev = _gl_graded(fun, b, per, nodes)
    while per < max_per:
        per *= 2
        cur = _gl_graded(fun, b, per, nodes)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur, abs(cur - prev)
        prev = cur
    return prev, math.inf


def _duhamel(alpha, lam, g, t, tol):
    """``int_0^t tau^(alpha-1) E_{alpha,alpha}(-lam tau^alpha) g(t - tau) d tau``.

    Split at ``t/2``.  Near ``tau = 0`` substitute ``tau = u^(1/alpha)``
    (removes the kernel singularity); near ``tau = t`` substitute
    ``t - tau = w^(1/alpha)`` (absorbs ``s^alpha``-type behaviour of ``g`` at 0).
    """
    if t == 0:
        return 0.0, 0.0
    ia = 1 / alpha
    half = t / 2

    def part1(u):
        tau = u**ia
        return ml(alpha, alpha, -lam * u) * g(t - tau) / alpha

    def part2(w):
        s = w**ia
        tau = t - s
        return tau ** (alpha - 1) * ml(alpha, alpha, -lam * tau**alpha) * g(s) * ia * w ** (ia - 1)

    v1, e1 = _refined(part1, half**alpha, tol)
    v2, e2 = _refined(part2, half**alpha, tol)
    return v1 + v2, e1 + e2


def solve_scalar_linear(alpha: float, lam: float, g, x0: float, t_grid, tol: float = 1e-9) -> Trajectory:
    """Exact solution of ``D^alpha x = -lam x + g(t)``, ``x(0) = x0``.

    ``x(t) = x0 E_alpha(-lam t^alpha) + int_0^t tau^(alpha-1) E_{alpha,alpha}(-lam tau^alpha) g(t-tau) d tau``
    evaluated by Gauss–Legendre quadrature on panels graded toward the
    singular endpoints, refined until two successive panel doublings agree to
    ``tol``.  ``g=None`` means no forcing.
    """
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha = {alpha} must lie in (0, 1]")
    t_grid = np.asarray(t_grid, dtype=float)
    xs = np.empty_like(t_grid)
    err = 0.0
    for k, t in enumerate(t_grid):
        hom = x0 * ml(alpha, 1.0, -lam * t**alpha) if x0 != 0 else 0.0
        if g is None:
            xs[k] = hom
            continue
        v, e = _duhamel(alpha, lam, g, float(t), tol)
        err = max(err, e)
        xs[k] = hom + v
    return Trajectory(t_grid, xs, "variation-of-constants", None, alpha,
                      meta={"quadrature_error_estimate": err})


# ---------------------------------------------------------------------------
# closed forms


def caputo_power(alpha: float, p: float, t):
    """Caputo derivative of ``t^p``: ``Gamma(p+1)/Gamma(p+1-alpha) t^(p-alpha)``."""
    if p <= 0:
        raise ValueError("p must be positive (the derivative of a constant is caputo_constant)")
    if p - alpha <= -1:
        raise ValueError("p - alpha <= -1 is not supported")
    return gamma(p + 1) / gamma(p + 1 - alpha) * np.asarray(t, dtype=float) ** (p - alpha)


def caputo_constant() -> float:
    return 0.0


def cong_exact_solution(c1: float, c2: float, t_grid, tol: float = 1e-9) -> Trajectory:
    """Exact solution of ``D^(1/2) x = x - y^2``, ``D^(1/2) y = -y``.

    ``y(t) = c2 E_{1/2}(-sqrt t)`` and
    ``x(t) = c1 E_{1/2}(sqrt t) - c2^2 int_0^t (t-s)^(-1/2) E_{1/2,1/2}(sqrt(t-s)) E_{1/2}(-sqrt s)^2 ds``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    y = c2 * erfcx(np.sqrt(t_grid)) if c2 != 0 else np.zeros_like(t_grid)
    if c2 == 0:
        x = c1 * ml(0.5, 1.0, np.sqrt(t_grid)) if c1 != 0 else np.zeros_like(t_grid)
        meta = {"quadrature_error_estimate": 0.0}
    else:
        def g(s):
            # E_{1/2}(-x) = erfcx(x) for x >= 0
            return -(c2**2) * erfcx(np.sqrt(s)) ** 2

        sol = solve_scalar_linear(0.5, -1.0, g, c1, t_grid, tol)
        x = sol.x
        meta = sol.meta
    return Trajectory(t_grid, np.column_stack([x, y]), "exact", None, 0.5, meta=meta)


def stable_manifold_coefficient() -> float:
    """``int_0^inf e^(-s) E_{1/2}(-sqrt s)^2 ds`` (exact value ``4/pi - 1``).

    With ``s = u^2`` the integrand is smooth; the range is cut at ``s = 100``
    where ``0 <= E_{1/2}(-sqrt s) <= 1`` bounds the tail by ``e^(-100)``.
    """
    def integrand(u):
        return 2 * u * math.exp(-u * u) * ml(0.5, 1.0, -u) ** 2

    val, _ = integrate.quad(integrand, 0.0, 10.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val
