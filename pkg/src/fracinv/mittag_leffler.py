"""Mittag-Leffler functions E_{alpha,beta}(z), scalar and 2x2 matrix.

Two evaluation strategies are provided:

* ``"series"`` -- the defining power series.  In double precision it is used
  only when the sum is well conditioned; otherwise it is summed in
  arbitrary precision (``mpmath``) with enough guard digits to absorb the
  cancellation.
* ``"contour"`` -- numerical inversion of the Laplace transform
  ``s^(alpha-beta) / (s^alpha - z)`` along an optimal parabolic contour with
  residues of the poles to the right of it (Garrappa, SIAM J. Numer. Anal.
  53, 2015).

``method="auto"`` picks the double-precision series for small, well
conditioned arguments and the contour otherwise.
"""

from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
from scipy.special import rgamma

__all__ = [
    "MLDomainError",
    "ALPHA_MIN",
    "Z_MAX",
    "ml",
    "ml_series",
    "ml_series_mp",
    "ml_contour",
    "ml_general",
    "ml_matrix",
    "ml_matrix_deriv",
]

ALPHA_MIN = 0.3
ALPHA_MAX = 1.0
Z_MAX = 50.0
SERIES_RADIUS = 5.0
_LOG_EPS = math.log(np.finfo(float).eps)
_TOL = 1e-15


class MLDomainError(ValueError):
    """Arguments outside the range where the requested accuracy is certified."""


def _check(alpha, beta, z):
    if not (ALPHA_MIN - 1e-15 <= alpha <= ALPHA_MAX + 1e-15):
        raise MLDomainError(f"alpha = {alpha} outside the certified range [{ALPHA_MIN}, {ALPHA_MAX}]")
    if not beta > 0:
        raise MLDomainError(f"beta = {beta} must be positive (use ml_general for beta <= 0)")
    if abs(z) > Z_MAX * (1 + 1e-12):
        raise MLDomainError(f"|z| = {abs(z):.6g} exceeds the certified radius {Z_MAX}")


# ---------------------------------------------------------------------------
# power series


def _series_terms(alpha, beta, z, kmax=100_000):
    """Terms ``z^k / Gamma(alpha k + beta)`` in double precision until negligible."""
    terms = []
    logz = cmath.log(z) if z != 0 else None
    k = 0
    peak = -math.inf
    while k < kmax:
        if z == 0:
            return [rgamma(beta)]
        lt = k * logz - math.lgamma(alpha * k + beta)  # Gamma > 0 since beta > 0
        if lt.real > 700:
            raise OverflowError("series term overflows double precision")
        t = cmath.exp(lt)
        terms.append(t)
        peak = max(peak, lt.real)
        # past the peak and below round-off of the largest term
        if k > 2 and lt.real < peak - 40:
            break
        k += 1
    return terms


def ml_series(alpha: float, beta: float, z: complex) -> tuple[complex, float]:
    """Double-precision series with exact-rounded summation.

    Returns
    -------
    value : complex
    cond : float
        ``sum |t_k| / |sum t_k|``; the relative error is about ``cond * 1e-16``.
    """
    terms = _series_terms(alpha, beta, complex(z))
    re = math.fsum(t.real for t in terms)
    im = math.fsum(t.imag for t in terms)
    val = complex(re, im)
    mag = math.fsum(abs(t) for t in terms)
    cond = mag / abs(val) if val != 0 else math.inf
    return val, cond


def _ml_series_vec(alpha, beta, z: np.ndarray):
    """Vectorized :func:`ml_series` for ``0 < |z| <= SERIES_RADIUS`` (pairwise sums)."""
    rmax = float(np.abs(z).max())
    k = 0
    peak = -math.inf
    while True:
        lt = k * math.log(rmax) - math.lgamma(alpha * k + beta)
        peak = max(peak, lt)
        if k > 2 and lt < peak - 40:
            break
        k += 1
    ks = np.arange(k + 1)
    logt = ks[:, None] * np.log(z.astype(complex))[None, :]
    logt -= np.array([math.lgamma(alpha * j + beta) for j in ks])[:, None]
    terms = np.exp(logt)
    val = terms.sum(axis=0)
    with np.errstate(divide="ignore"):
        cond = np.abs(terms).sum(axis=0) / np.abs(val)
    return val, cond


def ml_series_mp(alpha, beta, z, dps: int = 30):
    """Series in arbitrary precision with guard digits for the cancellation.

    ``dps`` is the number of correct digits wanted; the working precision is
    raised by ``log10`` of the largest term.  Returns an ``mpmath.mpc``.
    """
    z = complex(z)
    if z == 0:
        return mpmath.mpc(mpmath.rgamma(beta))
    r = abs(z)
    # locate the largest term on the log scale
    peak, k = -math.inf, 0
    while True:
        lt = k * math.log(r) - math.lgamma(alpha * k + beta)
        if lt > peak:
            peak = lt
        elif lt < peak - 5 and k > 5:
            break
        k += 1
    guard = max(0, int(peak / math.log(10))) + 5
    with mpmath.workdps(dps + guard):
        a, b = mpmath.mpf(alpha), mpmath.mpf(beta)
        zz = mpmath.mpc(z.real, z.imag)
        s = mpmath.mpc(0)
        p = mpmath.mpc(1)
        tiny = mpmath.mpf(10) ** (-(dps + guard))
        kk = 0
        while True:
            t = p * mpmath.rgamma(a * kk + b)
            s += t
            if kk > k and abs(t) < tiny * max(abs(s), 1):
                break
            p *= zz
            kk += 1
        return +s


# ---------------------------------------------------------------------------
# Laplace-transform inversion on a parabolic contour


def _param_rb(t, phi_j, phi_j1, pj, qj, log_eps):
    """Optimal contour parameters on a bounded region between two singularities."""
    fac = 1.01
    f_max = math.exp(log_eps - _LOG_EPS)
    sq_j = math.sqrt(phi_j)
    threshold = 2 * math.sqrt((log_eps - _LOG_EPS) / t)
    sq_j1 = min(math.sqrt(phi_j1), threshold - sq_j)
    f_bar = None
    if pj < 1e-14 and qj < 1e-14:
        sb_j, sb_j1 = sq_j, sq_j1
        f_bar = 1.0
    elif pj < 1e-14:
        sb_j = sq_j
        f_min = fac * (sq_j / (sq_j1 - sq_j)) ** qj if sq_j > 0 else fac
        if f_min >= f_max:
            return 0.0, 0.0, math.inf
        f_bar = f_min + f_min / f_max * (f_max - f_min)
        fq = f_bar ** (-1 / qj)
        sb_j1 = (2 * sq_j1 - fq * sq_j) / (2 + fq)
    elif qj < 1e-14:
        sb_j1 = sq_j1
        f_min = fac * (sq_j1 / (sq_j1 - sq_j)) ** pj
        if f_min >= f_max:
            return 0.0, 0.0, math.inf
        f_bar = f_min + f_min / f_max * (f_max - f_min)
        fp = f_bar ** (-1 / pj)
        sb_j = (2 * sq_j + fp * sq_j1) / (2 - fp)
    else:
        f_min = fac * (sq_j + sq_j1) / (sq_j1 - sq_j) ** max(pj, qj)
        if f_min >= f_max:
            return 0.0, 0.0, math.inf
        f_min = max(f_min, 1.5)
        f_bar = f_min + f_min / f_max * (f_max - f_min)
        fp = f_bar ** (-1 / pj)
        fq = f_bar ** (-1 / qj)
        w = -phi_j1 * t / log_eps
        den = 2 + w - (1 + w) * fp + fq
        sb_j = ((2 + w + fq) * sq_j + fp * sq_j1) / den
        sb_j1 = (-(1 + w) * fq * sq_j + (2 + w - (1 + w) * fp) * sq_j1) / den
    log_eps = log_eps - math.log(f_bar)
    w = -sb_j1 ** 2 * t / log_eps
    mu = (((1 + w) * sb_j + sb_j1) / (2 + w)) ** 2
    h = -2 * math.pi / log_eps * (sb_j1 - sb_j) / ((1 + w) * sb_j + sb_j1)
    N = math.ceil(math.sqrt(1 - log_eps / t / mu) / h)
    return mu, h, N


def _param_ru(t, phi_j, pj, log_eps):
    """Optimal contour parameters on the unbounded region right of the last singularity."""
    sq_j = math.sqrt(phi_j)
    phib = phi_j * 1.01 if phi_j > 0 else 0.01
    sqb = math.sqrt(phib)
    f_min, f_max, f_tar = 1.0, 10.0, 5.0
    for _ in range(200):
        phi_t = phib * t
        le = log_eps / phi_t
        N = math.ceil(phi_t / math.pi * (1 - 3 * le / 2 + math.sqrt(1 - 2 * le)))
        A = math.pi * N / phi_t
        sq_mu = sqb * abs(4 - A) / abs(7 - math.sqrt(1 + 12 * A))
        fbar = ((sqb - sq_j) / sq_mu) ** (-pj)
        if pj < 1e-14 or f_min < fbar < f_max:
            break
        sqb = f_tar ** (-1 / pj) * sq_mu + sq_j
        phib = sqb ** 2
    mu = sq_mu ** 2
    h = (-3 * A - 2 + 2 * math.sqrt(1 + 12 * A)) / (4 - A) / N
    threshold = (log_eps - _LOG_EPS) / t
    if mu > threshold:
        Q = 0.0 if abs(pj) < 1e-14 else f_tar ** (-1 / pj) * math.sqrt(mu)
        phib = (Q + math.sqrt(phi_j)) ** 2
        if phib < threshold:
            w = math.sqrt(_LOG_EPS / (_LOG_EPS - log_eps))
            u = math.sqrt(-phib * t / _LOG_EPS)
            mu = threshold
            N = math.ceil(w * log_eps / 2 / math.pi / (u * w - 1))
            h = math.sqrt(_LOG_EPS / (_LOG_EPS - log_eps)) / N
        else:
            N, h = math.inf, 0.0
    return mu, h, N


def ml_contour(alpha: float, beta: float, z: complex, tol: float = _TOL) -> complex:
    """``E_{alpha,beta}(z)`` by inverse Laplace transform on an optimal parabola."""
    z = complex(z)
    if abs(z) < 1e-15:
        return complex(rgamma(beta))
    t = 1.0
    log_eps = math.log(tol)
    theta = cmath.phase(z)
    kmin = math.ceil(-alpha / 2 - theta / (2 * math.pi))
    kmax = math.floor(alpha / 2 - theta / (2 * math.pi))
    r = abs(z) ** (1 / alpha)
    poles = [r * cmath.exp(1j * (theta + 2 * k * math.pi) / alpha) for k in range(kmin, kmax + 1)]
    phis = [(s.real + abs(s)) / 2 for s in poles]
    order = sorted(range(len(poles)), key=lambda i: phis[i])
    poles = [poles[i] for i in order if phis[i] > 1e-15]
    phis = [phis[i] for i in order if phis[i] > 1e-15]
    s_star = [0j] + poles
    phi = [0.0] + phis
    J = len(s_star) - 1
    p = [max(0.0, -2 * (alpha - beta + 1))] + [1.0] * J
    q = [1.0] * J + [math.inf]
    phi_ext = phi + [math.inf]
    admissible = [j for j in range(J + 1)
                  if phi_ext[j] < (log_eps - _LOG_EPS) / t and phi_ext[j] < phi_ext[j + 1]]
    while True:
        best = (math.inf, None, None, None)
        for j in admissible:
            if j < J:
                mu, h, N = _param_rb(t, phi_ext[j], phi_ext[j + 1], p[j], q[j], log_eps)
            else:
                mu, h, N = _param_ru(t, phi_ext[j], p[j], log_eps)
            if N < best[0]:
                best = (N, mu, h, j)
        if best[0] <= 200:
            break
        log_eps += math.log(10)  # relax the target until the node count is moderate
        if log_eps > math.log(1e-10):
            raise MLDomainError(f"contour for z = {z} needs too many nodes at the requested accuracy")
    N, mu, h, jbest = best
    if not math.isfinite(N):
        raise MLDomainError("no admissible integration contour")
    k = np.arange(-N, N + 1)
    u = h * k
    zc = mu * (1j * u + 1) ** 2
    zd = -2 * mu * u + 2j * mu
    F = zc ** (alpha - beta) / (zc ** alpha - z) * zd
    integral = h * np.sum(np.exp(zc * t) * F) / (2j * math.pi)
    res = sum(s ** (1 - beta) * cmath.exp(t * s) / alpha for s in s_star[jbest + 1:])
    return complex(integral + res)


# ---------------------------------------------------------------------------
# public entry points


def _ml_scalar(alpha, beta, z, method):
    try:
        return _ml_scalar_unchecked(alpha, beta, z, method)
    except OverflowError:
        raise MLDomainError(f"E_{{{alpha},{beta}}}({z}) overflows double precision") from None


def _ml_scalar_unchecked(alpha, beta, z, method):
    _check(alpha, beta, z)
    if alpha == 1.0 and beta == 1.0 and method == "auto":
        # no algebraic tail: e^z is exponentially small for Re z << 0 and only
        # the closed form keeps relative accuracy there
        return cmath.exp(z)
    if method == "series":
        return complex(ml_series_mp(alpha, beta, z, dps=20))
    if method == "contour":
        val = ml_contour(alpha, beta, z)
    elif method == "auto":
        val = None
        if abs(z) <= SERIES_RADIUS:
            try:
                v, cond = ml_series(alpha, beta, z)
                if cond < 1e4:
                    val = v
            except OverflowError:
                pass
        if val is None:
            val = ml_contour(alpha, beta, z)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise MLDomainError(f"E_{{{alpha},{beta}}}({z}) overflows double precision")
    return val


def ml(alpha: float, beta: float = 1.0, z=0.0, method: str = "auto"):
    """Two-parameter Mittag-Leffler function ``sum_k z^k / Gamma(alpha k + beta)``.

    Parameters
    ----------
    alpha : float
        Order, certified on ``[0.3, 1]``.
    beta : float, default 1
        Must be positive; see :func:`ml_general` otherwise.
    z : complex or array_like
        Argument(s) with ``|z| <= 50``.
    method : {"auto", "series", "contour"}
        ``"series"`` always sums the power series (arbitrary precision when
        needed), ``"contour"`` always inverts the Laplace transform.

    Returns
    -------
    complex, float or ndarray
        Real input gives real output.

    Raises
    ------
    MLDomainError
        Outside the certified parameter range or on overflow.
    """
    alpha, beta = float(alpha), float(beta)
    arr = np.asarray(z)
    real_in = not np.iscomplexobj(arr)
    flat = arr.ravel()
    out = np.full(flat.shape, np.nan, dtype=complex)
    if method == "auto" and flat.size > 8 and not (alpha == 1.0 and beta == 1.0):
        _check(alpha, beta, 0.0)
        fast = (np.abs(flat) <= SERIES_RADIUS) & (flat != 0)
        if fast.any():
            val, cond = _ml_series_vec(alpha, beta, flat[fast])
            idx = np.flatnonzero(fast)[cond < 1e4]
            out[idx] = val[cond < 1e4]
    for i in np.flatnonzero(np.isnan(out)):
        out[i] = _ml_scalar(alpha, beta, complex(flat[i]), method)
    out = out.reshape(arr.shape)
    if real_in:
        out = out.real
    if arr.ndim == 0:
        return out.item()
    return out


def ml_general(alpha: float, beta: float, z, method: str = "auto"):
    """``E_{alpha,beta}`` for any real ``beta`` via ``E_{a,b} = 1/Gamma(b) + z E_{a,a+b}``."""
    beta = float(beta)
    if beta > 0:
        return ml(alpha, beta, z, method)
    z = np.asarray(z)
    return rgamma(beta) + z * ml_general(alpha, alpha + beta, z, method)


def ml_matrix(alpha: float, A, t: float, beta: float = 1.0) -> np.ndarray:
    """``E_{alpha,beta}(A t^alpha)`` for a real 2x2 matrix ``A``.

    Uses the eigenvalues: a complex pair ``u +- i v`` gives
    ``Re(E) I + Im(E)/v (A - u I)``; distinct real eigenvalues use the
    Lagrange–Sylvester formula; a repeated (or numerically coincident)
    eigenvalue ``l`` uses ``f(l) I + f'(l) (A - l I)``, exact because
    ``(A - l I)^2 = 0`` for a defective 2x2 matrix.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    if t < 0:
        raise ValueError("t must be non-negative")
    I = np.eye(2)
    if t == 0:
        return I * float(rgamma(beta))
    ta = t ** alpha
    tr, det = np.trace(A), np.linalg.det(A)
    disc = tr * tr / 4 - det
    scale = max(1.0, np.abs(A).max())
    if disc < -1e-12 * scale * scale:
        u, v = tr / 2, math.sqrt(-disc)
        E = ml(alpha, beta, complex(u, v) * ta)
        return E.real * I + (E.imag / v) * (A - u * I)
    if disc > 1e-12 * scale * scale:
        r = math.sqrt(disc)
        l1, l2 = tr / 2 + r, tr / 2 - r
        f1, f2 = ml(alpha, beta, l1 * ta), ml(alpha, beta, l2 * ta)
        return (f1 * (A - l2 * I) - f2 * (A - l1 * I)) / (l1 - l2)
    lam = tr / 2
    f = ml(alpha, beta, lam * ta)
    return f * I + ml_matrix_deriv(alpha, beta, lam, t) * (A - lam * I)


def ml_matrix_deriv(alpha, beta, lam, t):
    """``d/dl E_{alpha,beta}(l t^alpha)``."""
    ta = t ** alpha
    # d/dz E_{a,b}(z) = (E_{a,b-1}(z) - (b-1) E_{a,b}(z)) / (a z), with the z -> 0 limit 1/Gamma(a+b)
    z = lam * ta
    if abs(z) < 1e-8:
        return ta * (float(rgamma(alpha + beta)) + 2 * z * float(rgamma(2 * alpha + beta)))
    if beta == 1.0:
        return ta * ml(alpha, alpha, z) / alpha
    return ta * (ml_general(alpha, beta - 1, z) - (beta - 1) * ml(alpha, beta, z)) / (alpha * z)
