"""Jacob's ladder phi(T), the mean-value levels sigma(T), sigma1(T), and the
exponentially weighted second moment (TKA) checks.

phi(T) is obtained by inverting the almost-exact main term

    F(phi) = (phi/2) ln(phi/2) + (c - ln 2pi)(phi/2) + c0,   F(phi(T)) = I2(T),

with c Euler's constant.  The nonlinear integral equation that defines the
ladder is kept as a residual check (``integral_equation_residual``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError
from .quad import DEFAULT_QUAD, WEIGHTED_QUAD, PanelSamples, QuadConfig, weighted_z2, z2_prefix
from .zeta_core import DEFAULT_CONFIG, EULER_GAMMA, EvalConfig

LOG_2PI = math.log(2.0 * math.pi)
PHI_MIN = 2.0 * math.e


@dataclass(frozen=True)
class LadderPoint:
    T: float
    i2: float
    phi: float
    sigma: float
    sigma1: float
    c0_used: float
    solve_residual: float


@dataclass(frozen=True)
class TkaReport:
    delta: float
    lhs: float
    rhs_main: float
    diff: float
    c0_estimate: float
    lhs_error: float = 0.0


def hl_main_term(phi: float, c0: float = 0.0) -> float:
    """F(phi) = (phi/2) ln(phi/2) + (c - ln 2pi) phi/2 + c0."""
    if not phi >= 2.0:
        raise DomainError(f"hl_main_term needs phi >= 2, got {phi}")
    h = 0.5 * phi
    return h * math.log(h) + (EULER_GAMMA - LOG_2PI) * h + c0


def solve_phi(T: float, i2: float, c0: float = 0.0) -> LadderPoint:
    """Invert F(phi) = i2 on the increasing branch phi > 2e."""
    T = float(T)
    floor = hl_main_term(PHI_MIN * 1.01, c0)
    if not i2 > floor:
        raise BracketError(
            f"I2 = {i2:.6g} below F(2e*1.01) = {floor:.6g}; T is below the working range (use T >= ~10)",
            bracket=(PHI_MIN, 4 * T + 100),
        )
    lo, hi = PHI_MIN, 4.0 * T + 100.0
    while hl_main_term(hi, c0) < i2:
        hi *= 2.0
        if hi > 1e300:
            raise BracketError("no upper bracket for phi", bracket=(lo, hi))
    phi = brentq(lambda p: hl_main_term(p, c0) - i2, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=200)
    resid = abs(hl_main_term(phi, c0) - i2)
    sigma = hl_main_term(phi, c0) / T if T > 0 else math.nan
    s1 = sigma_balasubramanian(T) if T > 1 else math.nan
    return LadderPoint(T=T, i2=i2, phi=phi, sigma=sigma, sigma1=s1, c0_used=c0, solve_residual=resid)


def sigma_moser(pt: LadderPoint, T: float | None = None) -> float:
    """Main part of the mean value of Z^2 over [0, T] from the ladder."""
    T = pt.T if T is None else float(T)
    if not T > 0:
        raise DomainError("T must be > 0")
    h = 0.5 * pt.phi
    return h / T * math.log(h) + (EULER_GAMMA - LOG_2PI) * h / T + pt.c0_used / T


def sigma_balasubramanian(T: float) -> float:
    """ln T + 2c - 1 - ln 2pi."""
    if not T > 1:
        raise DomainError("sigma_balasubramanian needs T > 1")
    return math.log(T) + 2.0 * EULER_GAMMA - 1.0 - LOG_2PI


def ladder_point(T, c0=0.0, cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = DEFAULT_QUAD, ckpt=None):
    """Compute I2(T) and solve the ladder at T."""
    res, _ = z2_prefix(T, ckpt, cfg, qcfg)
    return solve_phi(T, res.value, c0)


def default_mu(x: float) -> float:
    """Default upper cutoff mu(x) = 7 x ln x for the integral equation."""
    return 7.0 * x * math.log(x)


def integral_equation_residual(
    T: float,
    x: float,
    mu_of_x: float,
    cfg: EvalConfig = DEFAULT_CONFIG,
    qcfg: QuadConfig = WEIGHTED_QUAD,
    i2: float | None = None,
) -> float:
    """LHS - RHS of the ladder's integral equation for a candidate (x, mu).

    The weighted integral is truncated at 20x where mu exceeds it (the
    neglected tail is below 1e-17 relative).
    """
    if not x > 0 or not mu_of_x >= 0:
        raise DomainError("need x > 0 and mu >= 0")
    if i2 is None:
        i2 = z2_prefix(T, None, cfg)[0].value
    if mu_of_x == 0:
        return -i2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lhs = weighted_z2(mu_of_x, 1.0 / x, cfg, qcfg).value
    return lhs - i2


@dataclass(frozen=True)
class LadderParameter:
    T: float
    x: float
    mu: float
    residual: float
    phi: float


def solve_ladder_parameter(
    T: float,
    i2: float | None = None,
    mu=default_mu,
    cfg: EvalConfig = DEFAULT_CONFIG,
    qcfg: QuadConfig = WEIGHTED_QUAD,
    tail_cut: float = 9.0,
) -> LadderParameter:
    """Find x(T) solving the integral equation for a given cutoff rule mu(x).

    Z^2 is sampled once on the panel grid and reused for every trial x.  The
    weighted integral is cut at ``tail_cut * x`` (weight below
    exp(-2 tail_cut)); a cutoff mu(x) beyond that point cannot move the root.
    """
    if i2 is None:
        i2 = z2_prefix(T, None, cfg)[0].value
    phi = solve_phi(T, i2).phi
    lo, hi = 0.8 * phi, 1.25 * phi
    samples = PanelSamples(tail_cut * hi, cfg, qcfg)

    def resid(x):
        if mu(x) < tail_cut * x:
            raise DomainError("mu(x) below the truncation point; use integral_equation_residual")
        return samples.weighted(1.0 / x, tail_cut).value - i2

    flo, fhi = resid(lo), resid(hi)
    for _ in range(20):
        if flo < 0 < fhi:
            break
        if flo >= 0:
            lo /= 1.25
            flo = resid(lo)
        if fhi <= 0:
            hi *= 1.25
            fhi = resid(hi)
    else:
        raise BracketError("could not bracket x(T)", bracket=(lo, hi))
    x = brentq(resid, lo, hi, rtol=1e-12, maxiter=200)
    return LadderParameter(T=float(T), x=x, mu=mu(x), residual=resid(x), phi=phi)


def tka_rhs_main(delta: float) -> float:
    """(c - ln(4 pi delta)) / (2 sin delta)."""
    return (EULER_GAMMA - math.log(4.0 * math.pi * delta)) / (2.0 * math.sin(delta))


def tka_check(delta_list, cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = WEIGHTED_QUAD) -> list[TkaReport]:
    """Weighted second moment against its leading closed form, per delta.

    c0 is extrapolated linearly in delta to 0 from the two smallest deltas.
    """
    deltas = [float(d) for d in delta_list]
    for d in deltas:
        if not 0 < d <= 0.5:
            raise DomainError(f"delta must lie in (0, 0.5], got {d}")
    rows = []
    for d in deltas:
        res = weighted_z2(20.0 / d, d, cfg, qcfg)
        rhs = tka_rhs_main(d)
        rows.append((d, res.value, rhs, res.value - rhs, res.est_error))
    c0 = math.nan
    if len(rows) >= 2:
        (d1, *_, f1, _e1), (d2, *_, f2, _e2) = sorted(rows)[:2]
        c0 = extrapolate_to_zero(d1, f1, d2, f2)
    return [TkaReport(d, lhs, rhs, diff, c0, err) for d, lhs, rhs, diff, err in rows]


def extrapolate_to_zero(d1, f1, d2, f2):
    """Value at 0 of the line through (d1, f1), (d2, f2)."""
    return f1 - d1 * (f2 - f1) / (d2 - d1)


def fit_c0(deltas=(0.02, 0.01), cfg: EvalConfig = DEFAULT_CONFIG) -> float:
    return tka_check(deltas, cfg)[0].c0_estimate


def ladder_table(Ts, c0=0.0, cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = DEFAULT_QUAD):
    """Ladder points on an increasing grid, reusing one prefix sweep."""
    from .quad import SweepCheckpoint, advance

    ckpt = SweepCheckpoint.start(cfg, qcfg)
    out = []
    for T in np.sort(np.asarray(Ts, dtype=float)):
        ckpt, r2, _ = advance(ckpt, T, cfg, qcfg)
        out.append(solve_phi(T, r2.value, c0))
    return out
