"""Sign sets of Z^2 - sigma on [0, T], the areas above/below the level and
the weighted means eta1, eta2.

With f = Z^2 and a level sigma:

    m_plus  = integral over {f >= sigma} of (f - sigma)
    m_minus = integral over {f <  sigma} of (sigma - f)

so that m_plus - m_minus = I2(T) - T*sigma for every level, and

    eta1*m_plus - eta2*m_minus = I4(T) - T*sigma^2

with eta1, eta2 the means of f + sigma weighted by |f - sigma| on the two
sets.  Both identities are checked in every report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateSetError, DomainError, GridBudgetError
from .ladder import sigma_balasubramanian, solve_phi
from .quad import DEFAULT_QUAD, QuadConfig, SweepCheckpoint, advance, integrate, integrate_panels, panel_edges
from .zeta_core import DEFAULT_CONFIG, TWO_PI, EvalConfig, z_values

GRID_CAP = 0.25
GRID_FLOOR = 0.05
GRID_FLOOR_UNTIL = 10.0
NEAR_TANGENCY = 1e-9
_E2_2PI = TWO_PI * math.e**2


def sample_grid(T: float) -> np.ndarray:
    """Sampling points on [0, T]: step 0.05 below t = 10, then oscillation_scale/8 (capped)."""
    blocks = np.arange(0, int(math.ceil(T)), dtype=np.float64)
    right = blocks + 1.0
    step = np.minimum(GRID_CAP, TWO_PI / np.log(np.maximum(right, _E2_2PI) / TWO_PI) / 8.0)
    step = np.where(right <= GRID_FLOOR_UNTIL, GRID_FLOOR, step)
    counts = np.ceil(1.0 / step - 1e-12).astype(np.int64)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    pts = np.repeat(blocks, counts) + offs / np.repeat(counts, counts)
    pts = pts[pts < T]
    return np.append(pts, float(T))


def z_squared(cfg: EvalConfig = DEFAULT_CONFIG):
    def f(t):
        return z_values(t, cfg) ** 2

    return f


@dataclass
class SignDecomposition:
    T: float
    sigma_level: float
    crossings: np.ndarray
    signs: np.ndarray  # +1 / -1 per interval
    near_tangency_count: int = 0
    samples: int = 0
    max_sample: float = 0.0
    growth_ratio: float = 0.0  # max f(t)/t^(1/3) over samples with t >= 50
    integrand: object = field(default=None, repr=False, compare=False)
    _moments: object = field(default=None, repr=False, compare=False)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], self.crossings, [self.T]])

    @property
    def intervals(self) -> list[tuple[float, float, str]]:
        e = self.edges
        return [(float(e[i]), float(e[i + 1]), "+" if self.signs[i] > 0 else "-") for i in range(self.signs.size)]


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _vertex(t0, t1, t2, y0, y1, y2):
    """Extremal value of the parabola through three points."""
    d01 = (y1 - y0) / (t1 - t0)
    d12 = (y2 - y1) / (t2 - t1)
    a = (d12 - d01) / (t2 - t0)
    b = d01 - a * (t0 + t1)
    with np.errstate(divide="ignore", invalid="ignore"):
        tv = np.where(a != 0, -b / (2 * a), t1)
    tv = np.clip(tv, t0, t2)
    return a * tv * tv + b * tv + (y1 - a * t1 * t1 - b * t1)


def _hidden_excursions(f, sigma_level, t, g, tol):
    """Brackets for pairs of crossings that fall between two samples.

    A sampled local maximum of g below 0 (or minimum at or above 0) may hide a
    short excursion across the level.  Candidates are screened with a
    parabola, then the true extremum is located by golden-section search and,
    where it crosses, split into two sign-change brackets.
    """
    if t.size < 3:
        return np.empty(0), np.empty(0), np.empty(0, dtype=bool)
    g0, g1, g2 = g[:-2], g[1:-1], g[2:]
    is_max = (g1 >= g0) & (g1 >= g2) & (g1 < 0)
    is_min = (g1 <= g0) & (g1 <= g2) & (g1 >= 0)
    v = _vertex(t[:-2], t[1:-1], t[2:], g0, g1, g2)
    slack = np.maximum(np.abs(g1 - g0), np.abs(g1 - g2))
    cand = (is_max & (v + slack >= 0)) | (is_min & (v - slack < 0))
    idx = np.nonzero(cand)[0] + 1
    if idx.size == 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=bool)
    sgn = np.where(g[idx] < 0, 1.0, -1.0)  # maximise sgn * g

    def h(x):
        return sgn * (np.asarray(f(x), dtype=np.float64) - sigma_level)

    a, b = t[idx - 1].copy(), t[idx + 1].copy()
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    hc, hd = h(c), h(d)
    while (b - a).max() > tol:
        left = hc > hd  # maximum lies in [a, d]
        a, b = np.where(left, a, c), np.where(left, d, b)
        x = np.where(left, b - _INV_PHI * (b - a), a + _INV_PHI * (b - a))
        hx = h(x)
        c, d, hc, hd = (
            np.where(left, x, d),
            np.where(left, c, x),
            np.where(left, hx, hd),
            np.where(left, hc, hx),
        )
    tx = np.where(hc > hd, c, d)
    hx = np.maximum(hc, hd)
    crossed = np.where(sgn > 0, hx >= 0, hx > 0)
    idx, tx = idx[crossed], tx[crossed]
    side = g[idx] >= 0  # sign of g outside the excursion
    lo = np.concatenate([t[idx - 1], tx])
    hi = np.concatenate([tx, t[idx + 1]])
    left_pos = np.concatenate([side, ~side])
    return lo, hi, left_pos


def decompose_sign_sets(
    T: float,
    sigma_level: float,
    cfg: EvalConfig = DEFAULT_CONFIG,
    *,
    integrand=None,
    bisect_tol: float = 1e-10,
    max_samples: int = 50_000_000,
) -> SignDecomposition:
    """Tile [0, T] into maximal intervals where f - sigma keeps its sign.

    Points with f == sigma belong to the + set.  Crossings are bracketed on
    the sampling grid and bisected to ``bisect_tol``.
    """
    T = float(T)
    if not T > 0 or not sigma_level > 0:
        raise DomainError("need T > 0 and sigma_level > 0")
    f = integrand or z_squared(cfg)
    n_est = int(T / (TWO_PI / math.log(max(T, _E2_2PI) / TWO_PI) / 8.0)) + int(GRID_FLOOR_UNTIL / GRID_FLOOR)
    if n_est > max_samples:
        raise GridBudgetError(f"about {n_est} samples needed, budget {max_samples}")
    t = sample_grid(T)
    y = np.asarray(f(t), dtype=np.float64)
    g = y - sigma_level
    pos = g >= 0
    change = np.nonzero(pos[1:] != pos[:-1])[0]
    ha, hb, hpos = _hidden_excursions(f, sigma_level, t, g, bisect_tol)
    a = np.concatenate([t[change], ha])
    b = np.concatenate([t[change + 1], hb])
    left_pos = np.concatenate([pos[change], hpos])
    while a.size and (b - a).max() > bisect_tol:
        m = 0.5 * (a + b)
        mpos = (np.asarray(f(m)) - sigma_level) >= 0
        same = mpos == left_pos
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    crossings = np.sort(0.5 * (a + b))
    n_int = crossings.size + 1
    signs = np.where(np.arange(n_int) % 2 == 0, 1, -1) * (1 if pos[0] else -1)
    near = np.abs(g) < NEAR_TANGENCY
    if change.size:
        near[change] = False
        near[change + 1] = False
    late = t >= 50.0
    growth = float((y[late] / np.cbrt(t[late])).max()) if late.any() else 0.0
    return SignDecomposition(
        T=T,
        sigma_level=float(sigma_level),
        crossings=crossings,
        signs=signs.astype(np.int64),
        near_tangency_count=int(near.sum()),
        samples=int(t.size),
        max_sample=float(y.max()),
        growth_ratio=growth,
        integrand=f,
    )


@dataclass
class SetMoments:
    """Integrals of f and f^2 and set measures on S+ and S-."""

    f_plus: float
    f_minus: float
    f2_plus: float
    f2_minus: float
    len_plus: float
    len_minus: float
    m_plus_raw: float
    m_minus_raw: float
    h_plus: float  # integral over S+ of f^2 - sigma^2
    h_minus: float  # integral over S- of sigma^2 - f^2
    est_error_f: float
    est_error_f2: float
    panels: int
    evals: int


def set_moments(dec: SignDecomposition, qcfg: QuadConfig = DEFAULT_QUAD) -> SetMoments:
    """Integrate f and f^2 over every interval of the decomposition (cached)."""
    if dec._moments is not None:
        return dec._moments
    f = dec.integrand or z_squared()
    lo, hi = panel_edges(0.0, dec.T, qcfg)
    edges = np.union1d(np.concatenate([lo, [dec.T]]), dec.crossings)
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    def pair(t):
        v = np.asarray(f(t), dtype=np.float64)
        return np.stack([v, v * v])

    vals, errs, panels, evals = integrate_panels(pair, lo, hi, qcfg)
    which = np.searchsorted(dec.crossings, 0.5 * (lo + hi))
    plus = dec.signs[which] > 0
    minus = ~plus
    s = dec.sigma_level
    w = hi - lo
    mom = SetMoments(
        f_plus=math.fsum(vals[0][plus]),
        f_minus=math.fsum(vals[0][minus]),
        f2_plus=math.fsum(vals[1][plus]),
        f2_minus=math.fsum(vals[1][minus]),
        len_plus=math.fsum(w[plus]),
        len_minus=math.fsum(w[minus]),
        m_plus_raw=math.fsum(vals[0][plus] - s * w[plus]),
        m_minus_raw=math.fsum(s * w[minus] - vals[0][minus]),
        h_plus=math.fsum(vals[1][plus] - s * s * w[plus]),
        h_minus=math.fsum(s * s * w[minus] - vals[1][minus]),
        est_error_f=math.fsum(errs[0]),
        est_error_f2=math.fsum(errs[1]),
        panels=panels,
        evals=evals,
    )
    dec._moments = mom
    return mom


def areas(dec: SignDecomposition, qcfg: QuadConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """(m_plus, m_minus), each clamped at 0."""
    mom = set_moments(dec, qcfg)
    return max(mom.m_plus_raw, 0.0), max(mom.m_minus_raw, 0.0)


def eta_values(dec: SignDecomposition, m_plus: float, m_minus: float, qcfg: QuadConfig = DEFAULT_QUAD):
    """(eta1, eta2): means of f + sigma weighted by f - sigma on S+ and sigma - f on S-."""
    mom = set_moments(dec, qcfg)
    floor = 1e-6 * dec.T
    if mom.len_plus < floor or mom.len_minus < floor or m_plus <= 0 or m_minus <= 0:
        raise DegenerateSetError(
            f"|S+| = {mom.len_plus:.3g}, |S-| = {mom.len_minus:.3g}, m+ = {m_plus:.3g}, m- = {m_minus:.3g}"
        )
    return mom.h_plus / m_plus, mom.h_minus / m_minus


def reconstruct_areas_via_eta(diff, eta1, eta2, T, i4, sigma_level, tol: float = 1e-12):
    """Solve m+ - m- = diff, eta1 m+ - eta2 m- = I4 - T sigma^2 for (m+, m-)."""
    gap = eta1 - eta2
    if abs(gap) <= tol * max(abs(eta1), abs(eta2), 1.0):
        raise DegenerateSetError(f"singular system: eta1 - eta2 = {gap:.3g}")
    rhs = i4 - T * sigma_level**2
    return (rhs - eta2 * diff) / gap, (rhs - eta1 * diff) / gap


def fourth_moment_main(T: float) -> float:
    return T * math.log(T) ** 4 / (2.0 * math.pi**2)


def fourth_moment_check(T: float, cfg=DEFAULT_CONFIG, qcfg=DEFAULT_QUAD, *, i4=None, integrand=None) -> float:
    """I4(T) divided by the main term T ln^4 T / (2 pi^2).

    ``integrand`` replaces Z^4 (it is integrated directly).
    """
    if not T >= 100:
        raise DomainError("fourth_moment_check needs T >= 100")
    if i4 is None:
        if integrand is not None:
            i4 = integrate(integrand, 0.0, T, qcfg).value
        else:
            _, _, r4 = advance(SweepCheckpoint.start(cfg, qcfg), T, cfg, qcfg)
            i4 = r4.value
    return i4 / fourth_moment_main(T)


@dataclass
class AreaReport:
    T: float
    mode: str
    sigma_level: float
    m_plus: float
    m_minus: float
    diff: float
    abs_sum: float
    eta1: float | None
    eta2: float | None
    i2: float
    i4: float
    identity_residuals: dict
    crossings: int = 0
    near_tangency_count: int = 0
    measure_plus: float = 0.0
    measure_minus: float = 0.0
    max_z2_sampled: float = 0.0
    growth_ratio: float = 0.0
    phi: float | None = None
    solve_residual: float = 0.0
    est_error: dict = field(default_factory=dict)
    m_plus_hat: float | None = None
    m_minus_hat: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def identity_ok(self, rtol: float = 1e-6) -> bool:
        """Both exact identities hold to rtol relative to I2 and I4."""
        r = self.identity_residuals
        ok = abs(r["area_balance"]) <= rtol * max(abs(self.i2), 1.0) + 10 * self.est_error.get("i2", 0.0)
        if r.get("eta_moment") is not None:
            ok &= abs(r["eta_moment"]) <= rtol * max(abs(self.i4), 1.0) + 10 * self.est_error.get("i4", 0.0)
        return bool(ok)


def parse_mode(mode) -> tuple[str, float | None]:
    """'moser' | 'balasubramanian' | 'level=<x>' | number -> (name, level)."""
    if isinstance(mode, (int, float)):
        return "level", float(mode)
    m = str(mode).strip().lower()
    if m in ("moser", "balasubramanian"):
        return m, None
    if m.startswith("level="):
        return "level", float(m.split("=", 1)[1])
    raise DomainError(f"unknown mode {mode!r}")


def area_balance_report(
    T: float,
    mode="moser",
    *,
    c0: float = 0.0,
    cfg: EvalConfig = DEFAULT_CONFIG,
    qcfg: QuadConfig = DEFAULT_QUAD,
    prefix: tuple[float, float] | None = None,
    prefix_error: tuple[float, float] = (0.0, 0.0),
    integrand=None,
) -> AreaReport:
    """Decompose, integrate and check both identities at one T.

    ``prefix`` supplies (I2(T), I4(T)) when already known (e.g. from a
    sweep checkpoint).  ``integrand`` swaps Z^2 for a synthetic function.
    """
    T = float(T)
    name, level = parse_mode(mode)
    if prefix is None:
        if integrand is None:
            _, r2, r4 = advance(SweepCheckpoint.start(cfg, qcfg), T, cfg, qcfg)
        else:
            def pair(t):
                v = np.asarray(integrand(t), dtype=np.float64)
                return np.stack([v, v * v])

            _, r2, r4 = advance(SweepCheckpoint(), T, cfg, qcfg, integrand=pair)
        i2, i4 = r2.value, r4.value
        prefix_error = (r2.est_error, r4.est_error)
    else:
        i2, i4 = prefix
    phi = None
    solve_residual = 0.0
    if name == "moser":
        pt = solve_phi(T, i2, c0)
        level, phi, solve_residual = pt.sigma, pt.phi, pt.solve_residual
    elif name == "balasubramanian":
        level = sigma_balasubramanian(T)

    dec = decompose_sign_sets(T, level, cfg, integrand=integrand)
    mom = set_moments(dec, qcfg)
    m_plus, m_minus = areas(dec, qcfg)
    diff = m_plus - m_minus
    residuals = {
        "area_balance": diff - (i2 - T * level),
        "clamp_plus": m_plus - mom.m_plus_raw,
        "clamp_minus": m_minus - mom.m_minus_raw,
        "eta_moment": None,
        "reconstruction_plus": None,
        "reconstruction_minus": None,
    }
    eta1 = eta2 = m_hat_p = m_hat_m = None
    try:
        eta1, eta2 = eta_values(dec, m_plus, m_minus, qcfg)
    except DegenerateSetError:
        pass
    else:
        residuals["eta_moment"] = eta1 * m_plus - eta2 * m_minus - (i4 - T * level**2)
        try:
            m_hat_p, m_hat_m = reconstruct_areas_via_eta(diff, eta1, eta2, T, i4, level)
        except DegenerateSetError:
            pass
        else:
            residuals["reconstruction_plus"] = m_hat_p - m_plus
            residuals["reconstruction_minus"] = m_hat_m - m_minus
    return AreaReport(
        T=T,
        mode=name if name != "level" else f"level={level!r}",
        sigma_level=level,
        m_plus=m_plus,
        m_minus=m_minus,
        diff=diff,
        abs_sum=m_plus + m_minus,
        eta1=eta1,
        eta2=eta2,
        i2=i2,
        i4=i4,
        identity_residuals=residuals,
        crossings=int(dec.crossings.size),
        near_tangency_count=dec.near_tangency_count,
        measure_plus=mom.len_plus,
        measure_minus=mom.len_minus,
        max_z2_sampled=dec.max_sample,
        growth_ratio=dec.growth_ratio,
        phi=phi,
        solve_residual=solve_residual,
        est_error={"i2": prefix_error[0], "i4": prefix_error[1], "f": mom.est_error_f, "f2": mom.est_error_f2},
        m_plus_hat=m_hat_p,
        m_minus_hat=m_hat_m,
    )


def conditional_diagnostics(T: float, report: AreaReport, eps=(0.1, 0.01), A: float = 1.0) -> dict:
    """Areas scaled by T^(1-eps) and T^(1 - A/lnln T); reported, never asserted."""
    out = {}
    for e in eps:
        d = T ** (1.0 - e)
        out[f"m_plus/T^(1-{e:g})"] = report.m_plus / d
        out[f"m_minus/T^(1-{e:g})"] = report.m_minus / d
    d = T ** (1.0 - A / math.log(math.log(T)))
    out[f"m_plus/T^(1-{A:g}/lnlnT)"] = report.m_plus / d
    out[f"m_minus/T^(1-{A:g}/lnlnT)"] = report.m_minus / d
    return out
