"""Hardy's function Z(t), the Riemann-Siegel theta function and Gram points.

Z(t) = exp(i*theta(t)) * zeta(1/2 + it) is real for real t.  Two evaluation
routes are used:

* t >= ``em_threshold``: Riemann-Siegel main sum plus up to four remainder
  corrections C0..C4 (compiled with numba, vectorised over t);
* t <  ``em_threshold``: zeta(1/2+it) by Euler-Maclaurin summation, rotated
  by the theta phase.

Everything here is double precision.  The high-precision reference used by
the test-suite is mpmath, which the engine itself never imports.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import brentq
from scipy.special import bernoulli

from ._rs_tables import RS_COEFFS
from .errors import AccuracyError, BracketError, DomainError

__all__ = [
    "EULER_GAMMA",
    "EvalConfig",
    "Method",
    "ZEval",
    "theta",
    "hardy_z",
    "z_values",
    "zeta_em",
    "rs_error_bound",
    "gram_point",
    "oscillation_scale",
]

EULER_GAMMA = 0.57721566490153286061
TWO_PI = 2.0 * math.pi
LOG_PI = math.log(math.pi)

# t below which theta uses the shifted log-Gamma route instead of Stirling.
STIRLING_MIN_T = 20.0

# Gabcke-type bounds |R_k(t)| <= a_k * t**(-(2k+3)/4) on the remainder left
# after keeping C0..C_k.
_RS_BOUND_COEF = (0.127, 0.053, 0.011, 0.031, 0.017)

_RS_TABLE = np.array(RS_COEFFS, dtype=np.float64)

# lnGamma Stirling tail: B_{2j} / (2j (2j-1)), j = 1..10
_B = bernoulli(20)
_STIRLING_LG = np.array([_B[2 * j] / (2 * j * (2 * j - 1)) for j in range(1, 11)])


class Method(str, enum.Enum):
    riemann_siegel = "riemann_siegel"
    euler_maclaurin = "euler_maclaurin"


@dataclass(frozen=True)
class EvalConfig:
    """Knobs for a single Z(t) evaluation.

    rs_correction_order: number of Riemann-Siegel corrections kept (0-4).
    em_threshold: below this t, Euler-Maclaurin replaces Riemann-Siegel.
    em_terms: length N of the direct sum in Euler-Maclaurin.
    target_abs_error: absolute error goal; a larger a-priori bound raises.
    """

    rs_correction_order: int = 4
    em_threshold: float = 50.0
    em_terms: int = 50
    target_abs_error: float = 1e-6

    def __post_init__(self):
        if not 0 <= self.rs_correction_order <= 4:
            raise DomainError(f"rs_correction_order must be in [0, 4], got {self.rs_correction_order}")
        if not self.em_threshold >= 10:
            raise DomainError(f"em_threshold must be >= 10, got {self.em_threshold}")
        if not self.em_terms >= 10:
            raise DomainError(f"em_terms must be >= 10, got {self.em_terms}")
        if not self.target_abs_error > 0:
            raise DomainError(f"target_abs_error must be > 0, got {self.target_abs_error}")


DEFAULT_CONFIG = EvalConfig()


@dataclass(frozen=True)
class ZEval:
    t: float
    z: float
    theta: float
    est_error: float
    method: Method


def _check_nonneg(t):
    t = np.asarray(t, dtype=np.float64)
    if t.size and (np.isnan(t).any() or t.min() < 0):
        raise DomainError("t must be >= 0")
    return t


def _log_gamma(z):
    """Complex log-Gamma on the continuous branch, for Re z > 0.

    Shifts the argument up by recurrence until |z| >= 16, then applies the
    Stirling series with ten Bernoulli terms (truncation below 1e-17).
    """
    z = np.asarray(z, dtype=np.complex128)
    shift = 16
    acc = np.zeros_like(z)
    for k in range(shift):
        acc += np.log(z + k)
    w = z + shift
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    for c in _STIRLING_LG[::-1]:
        series = series * inv2 + c
    lg = (w - 0.5) * np.log(w) - w + 0.5 * math.log(TWO_PI) + series * inv
    return lg - acc


def _theta_stirling(t):
    return 0.5 * t * np.log(t / TWO_PI) - 0.5 * t - math.pi / 8 + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t**3)


def theta(t, cfg: EvalConfig | None = None):
    """Riemann-Siegel theta: -(t/2) ln(pi) + Im lnGamma(1/4 + it/2).

    Accepts a scalar or an array.  Stirling's form through 1/t^3 is used for
    t >= 20 (truncation < 2e-10 there); below that the shifted log-Gamma.
    """
    scalar = np.ndim(t) == 0
    t = _check_nonneg(t)
    out = np.empty_like(t, dtype=np.float64)
    big = t >= STIRLING_MIN_T
    if big.any():
        out[big] = _theta_stirling(t[big])
    small = ~big
    if small.any():
        ts = t[small]
        out[small] = _log_gamma(0.25 + 0.5j * ts).imag - 0.5 * ts * LOG_PI
    return float(out) if scalar else out


def oscillation_scale(t):
    """Mean gap between sign changes of Z near t: 2*pi / ln(t / 2*pi)."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=np.float64)
    if t.size and not (t > TWO_PI * math.e).all():
        raise DomainError("oscillation_scale needs t > 2*pi*e")
    out = TWO_PI / np.log(t / TWO_PI)
    return float(out) if scalar else out


def rs_error_bound(t, order: int):
    """A-priori bound on the Riemann-Siegel truncation error at t.

    Also carries a rounding term ~1e-15 * t ln t from the phase t*ln(n).
    """
    t = np.asarray(t, dtype=np.float64)
    k = int(order)
    trunc = _RS_BOUND_COEF[k] * t ** (-(2 * k + 3) / 4.0)
    return trunc + 1e-15 * t * np.log(t)


# --- Euler-Maclaurin -------------------------------------------------------

_EM_BERNOULLI = bernoulli(60)


def zeta_em(t, n_terms: int = 50, max_corr: int = 25):
    """zeta(1/2 + it) by Euler-Maclaurin summation.

    Returns ``(values, est_error)``; the error estimate is the magnitude of
    the last correction term kept.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    s = 0.5 + 1j * t
    N = int(n_terms)
    n = np.arange(1, N, dtype=np.float64)
    logn = np.log(n)
    # sum_{n<N} n^{-s}
    head = (np.exp(-np.outer(s, logn))).sum(axis=1)
    logN = math.log(N)
    n_pow = np.exp(-s * logN)  # N^{-s}
    val = head + N * n_pow / (s - 1.0) + 0.5 * n_pow
    # sum_k B_2k/(2k)! s(s+1)...(s+2k-2) N^{-s-2k+1}
    poch = s.copy()  # s(s+1)...(s+2k-2), starting k=1
    term_pow = n_pow / N  # N^{-s-1}
    fact = 2.0
    last = np.zeros(t.shape)
    for k in range(1, max_corr + 1):
        term = _EM_BERNOULLI[2 * k] / fact * poch * term_pow
        val = val + term
        last = np.abs(term)
        if last.max() < 1e-17:
            break
        poch = poch * (s + 2 * k - 1) * (s + 2 * k)
        term_pow = term_pow / (N * N)
        fact *= (2 * k + 1) * (2 * k + 2)
    return val, last + 1e-15


# --- Riemann-Siegel ----------------------------------------------------------

_tables = {"logn": np.zeros(1), "rsq": np.zeros(1)}


def _ensure_tables(nmax):
    if _tables["logn"].size <= nmax:
        size = max(2 * nmax, 1024)
        n = np.arange(size, dtype=np.float64)
        n[0] = 1.0
        _tables["logn"] = np.log(n)
        _tables["rsq"] = 1.0 / np.sqrt(n)
    return _tables["logn"], _tables["rsq"]


@numba.njit(cache=True)
def _rs_kernel(t, th, order, coef, logn, rsq):  # pragma: no cover - compiled
    out = np.empty(t.size)
    ncoef = coef.shape[1]
    for i in range(t.size):
        ti = t[i]
        tau = math.sqrt(ti / (2.0 * math.pi))
        N = int(tau)
        thi = th[i]
        s = 0.0
        for n in range(1, N + 1):
            s += rsq[n] * math.cos(thi - ti * logn[n])
        x = tau - N - 0.5
        rem = 0.0
        pw = 1.0
        for k in range(order + 1):
            acc = 0.0
            for j in range(ncoef - 1, -1, -1):
                acc = acc * x + coef[k, j]
            rem += acc * pw
            pw /= tau
        if (N - 1) % 2 == 1:
            rem = -rem
        out[i] = 2.0 * s + rem / math.sqrt(tau)
    return out


def z_values(t, cfg: EvalConfig = DEFAULT_CONFIG, *, return_error: bool = False):
    """Vectorised Z(t) for an array of t >= 0.

    Raises AccuracyError when the a-priori error bound at any Riemann-Siegel
    point exceeds ``cfg.target_abs_error``.
    """
    t = _check_nonneg(t)
    shape = t.shape
    t = t.ravel()
    z = np.empty_like(t)
    err = np.empty_like(t)
    em = t < cfg.em_threshold
    rs = ~em
    if em.any():
        te = t[em]
        zeta, zerr = zeta_em(te, cfg.em_terms)
        rot = np.exp(1j * theta(te)) * zeta
        if np.abs(rot.imag).max() >= 1e-8:
            raise AccuracyError(f"Im(e^(i theta) zeta) = {np.abs(rot.imag).max():.3g} not negligible")
        z[em] = rot.real
        err[em] = zerr + np.abs(rot.imag)
    if rs.any():
        tr = t[rs]
        bound = rs_error_bound(tr, cfg.rs_correction_order)
        worst = bound.max()
        if worst > cfg.target_abs_error:
            raise AccuracyError(
                f"Riemann-Siegel bound {worst:.3g} exceeds target {cfg.target_abs_error:.3g} "
                f"(order {cfg.rs_correction_order}, t = {tr[bound.argmax()]:.6g})"
            )
        logn, rsq = _ensure_tables(int(math.sqrt(tr.max() / TWO_PI)) + 2)
        z[rs] = _rs_kernel(tr, theta(tr), cfg.rs_correction_order, _RS_TABLE, logn, rsq)
        err[rs] = bound
    z = z.reshape(shape)
    if return_error:
        return z, err.reshape(shape)
    return z


def hardy_z(t: float, cfg: EvalConfig = DEFAULT_CONFIG) -> ZEval:
    """Evaluate Z(t) at a single ordinate."""
    t = float(t)
    z, err = z_values(np.array([t]), cfg, return_error=True)
    method = Method.euler_maclaurin if t < cfg.em_threshold else Method.riemann_siegel
    return ZEval(t=t, z=float(z[0]), theta=theta(t), est_error=float(err[0]), method=method)


def gram_point(n: int, cfg: EvalConfig | None = None) -> float:
    """The unique t > 7 with theta(t) = n*pi."""
    n = int(n)
    if n < -1:
        raise DomainError("gram_point index must be >= -1")
    target = n * math.pi
    lo, hi = 7.0, 20.0
    while theta(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise BracketError("no bracket for Gram point", bracket=(lo, hi))
    try:
        return brentq(lambda x: theta(x) - target, lo, hi, xtol=1e-13, rtol=1e-14, maxiter=200)
    except RuntimeError as exc:
        raise BracketError(str(exc), bracket=(lo, hi)) from exc
