"""Panel quadrature of Z^2, Z^4 and exponentially weighted Z^2.

Panels come from a global grid that depends only on position: the unit
block [k, k+1) is cut into ``ceil(1/w_k)`` equal panels, where ``w_k`` is
the smaller of ``QuadConfig.panel_cap`` and a quarter of the oscillation
scale at the block's right edge.  Any integral over [a, b] uses the grid
panels clipped to [a, b], so splitting a range changes at most one panel.

Each panel gets Gauss-Legendre order 15 on the whole panel and on both
halves; the halves give the value, their difference from the whole gives
the error estimate.  Panels over budget are bisected.  Panel values are
summed with ``math.fsum`` so the total does not depend on evaluation order.
"""

from __future__ import annotations

import csv
import fcntl
import hashlib
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import CheckpointMismatch, DomainError, QuadratureError
from .zeta_core import DEFAULT_CONFIG, EULER_GAMMA, TWO_PI, EvalConfig, z_values

GL_ORDER = 15
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
_E2_2PI = TWO_PI * math.e**2


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-300
    max_depth: int = 20
    panel_cap: float = 0.5
    chunk_panels: int = 8192

    @property
    def policy(self) -> str:
        return f"gl{GL_ORDER}-bisect;w<=min({self.panel_cap},scale(right)/4);unit-blocks"


DEFAULT_QUAD = QuadConfig()
WEIGHTED_QUAD = QuadConfig(rel_tol=1e-6)


@dataclass(frozen=True)
class QuadResult:
    value: float
    est_error: float
    panels: int
    evals: int


def _block_counts(blocks, cap):
    right = blocks + 1.0
    width = np.minimum(cap, TWO_PI / np.log(np.maximum(right, _E2_2PI) / TWO_PI) / 4.0)
    return np.ceil(1.0 / width - 1e-12).astype(np.int64)


def panel_edges(a: float, b: float, qcfg: QuadConfig = DEFAULT_QUAD) -> tuple[np.ndarray, np.ndarray]:
    """Grid panels clipped to [a, b], as ``(lo, hi)`` arrays in ascending order."""
    if b <= a:
        return np.empty(0), np.empty(0)
    k0, k1 = int(math.floor(a)), int(math.ceil(b))
    blocks = np.arange(k0, k1, dtype=np.float64)
    counts = _block_counts(blocks, qcfg.panel_cap)
    starts = np.repeat(blocks, counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    n = np.repeat(counts, counts).astype(np.float64)
    lo = starts + offs / n
    hi = starts + (offs + 1) / n
    # the last panel of each block ends exactly on the integer boundary
    hi[np.cumsum(counts) - 1] = blocks + 1.0
    keep = (hi > a) & (lo < b)
    lo = np.maximum(lo[keep], a)
    hi = np.minimum(hi[keep], b)
    keep = hi > lo
    return lo[keep], hi[keep]


def _as_components(y, m):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape[-1] != m:
        raise ValueError("integrand returned wrong number of values")
    return y


def _gl_nodes(lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid[:, None] + half[:, None] * _GL_X[None, :], half


def _eval_halves(func, lo, hi):
    """GL15 on both halves of each panel; returns (k, P) values."""
    mid = 0.5 * (lo + hi)
    tl, hl = _gl_nodes(lo, mid)
    tr, hr = _gl_nodes(mid, hi)
    P = lo.size
    t = np.concatenate([tl, tr], axis=1).ravel()
    y = _as_components(func(t), t.size).reshape(-1, P, 2 * GL_ORDER)
    left = (y[:, :, :GL_ORDER] @ _GL_W) * hl
    right = (y[:, :, GL_ORDER:] @ _GL_W) * hr
    return left, right, t.size


def _eval_whole(func, lo, hi):
    t, h = _gl_nodes(lo, hi)
    P = lo.size
    y = _as_components(func(t.ravel()), t.size).reshape(-1, P, GL_ORDER)
    return (y @ _GL_W) * h, t.size


def integrate_panels(func, lo, hi, qcfg: QuadConfig = DEFAULT_QUAD):
    """Adaptive panel rule over the given panels.

    ``func`` maps a 1-D array of t to an array of shape (m,) or (k, m).
    Returns ``(values, errors, panels, evals)`` where ``values`` and
    ``errors`` have shape (k, P): the integral and error estimate over each
    input panel (after any internal bisection).
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    P = lo.size
    if P == 0:
        return np.zeros((1, 0)), np.zeros((1, 0)), 0, 0
    evals = 0
    whole_parts, left_parts, right_parts = [], [], []
    for s in range(0, P, qcfg.chunk_panels):
        sl = slice(s, s + qcfg.chunk_panels)
        w, n1 = _eval_whole(func, lo[sl], hi[sl])
        l, r, n2 = _eval_halves(func, lo[sl], hi[sl])
        whole_parts.append(w)
        left_parts.append(l)
        right_parts.append(r)
        evals += n1 + n2
    whole = np.concatenate(whole_parts, axis=1)
    left = np.concatenate(left_parts, axis=1)
    right = np.concatenate(right_parts, axis=1)
    values = left + right
    errors = np.abs(values - whole)
    scale = np.array([math.fsum(np.abs(v)) for v in values])
    tol = np.maximum(qcfg.rel_tol * scale / P, qcfg.abs_tol)  # per-panel budget, per component
    widths = hi - lo
    bad = np.nonzero((errors > _budget(tol[:, None], values, qcfg)).any(axis=0))[0]
    n_panels = P
    for idx in bad:
        val, err, np_, ne = _refine(func, lo[idx], hi[idx], left[:, idx], right[:, idx], tol, widths[idx], qcfg, 1)
        values[:, idx] = val
        errors[:, idx] = err
        n_panels += np_ - 1
        evals += ne
    return values, errors, n_panels, evals


def _budget(uniform, values, qcfg=DEFAULT_QUAD):
    # a panel also passes at rel_tol/10 of its own magnitude, which keeps the
    # total within rel_tol while tolerating evaluation noise where |f| peaks
    return np.maximum(uniform, 0.1 * qcfg.rel_tol * np.abs(values))


def _refine(func, a, b, left, right, tol, width0, qcfg, depth):
    """Bisect [a, b]; ``left``/``right`` are its known half-panel values."""
    m = 0.5 * (a + b)
    lo = np.array([a, m])
    hi = np.array([m, b])
    l, r, n = _eval_halves(func, lo, hi)
    whole = np.stack([left, right], axis=1)  # (k, 2)
    vals = l + r
    errs = np.abs(vals - whole)
    out_v = np.zeros(vals.shape[0])
    out_e = np.zeros(vals.shape[0])
    panels = 0
    evals = n
    for j in range(2):
        budget = _budget(tol * (hi[j] - lo[j]) / width0, vals[:, j], qcfg)
        if (errs[:, j] <= budget).all():
            out_v += vals[:, j]
            out_e += errs[:, j]
            panels += 1
        elif depth >= qcfg.max_depth:
            raise QuadratureError(
                f"tolerance not met after {depth} subdivisions on [{lo[j]!r}, {hi[j]!r}]",
                worst_panel=(float(lo[j]), float(hi[j]), float(errs[:, j].max())),
            )
        else:
            v, e, p, ne = _refine(func, lo[j], hi[j], l[:, j], r[:, j], tol, width0, qcfg, depth + 1)
            out_v += v
            out_e += e
            panels += p
            evals += ne
    return out_v, out_e, panels, evals


def integrate_many(func, a: float, b: float, qcfg: QuadConfig = DEFAULT_QUAD) -> list[QuadResult]:
    """Integrate a (possibly multi-component) integrand over [a, b]."""
    lo, hi = panel_edges(a, b, qcfg)
    if lo.size == 0:
        probe = _as_components(func(np.array([float(a)])), 1)
        return [QuadResult(0.0, 0.0, 0, 0) for _ in range(probe.shape[0])]
    values, errors, panels, evals = integrate_panels(func, lo, hi, qcfg)
    return [
        QuadResult(math.fsum(values[j]), math.fsum(errors[j]), panels, evals)
        for j in range(values.shape[0])
    ]


def integrate(func, a: float, b: float, qcfg: QuadConfig = DEFAULT_QUAD) -> QuadResult:
    """Integrate a scalar integrand over [a, b] on the global panel grid."""
    return integrate_many(func, a, b, qcfg)[0]


def z_moments_integrand(cfg: EvalConfig = DEFAULT_CONFIG):
    """Integrand returning the stacked pair (Z^2, Z^4)."""

    def f(t):
        z2 = z_values(t, cfg) ** 2
        return np.stack([z2, z2 * z2])

    return f


# --- prefix integrals with checkpoints ----------------------------------------


def config_hash(cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = DEFAULT_QUAD) -> str:
    blob = json.dumps({"eval": asdict(cfg), "quad": asdict(qcfg)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepCheckpoint:
    """Prefix integrals of Z^2 and Z^4 over [0, frontier]."""

    frontier: float = 0.0
    i2: float = 0.0
    i4: float = 0.0
    est_error_i2: float = 0.0
    est_error_i4: float = 0.0
    cfg_hash: str = ""
    panel_width_policy: str = DEFAULT_QUAD.policy

    @classmethod
    def start(cls, cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = DEFAULT_QUAD):
        return cls(cfg_hash=config_hash(cfg, qcfg), panel_width_policy=qcfg.policy)


def advance(
    ckpt: SweepCheckpoint,
    T: float,
    cfg: EvalConfig = DEFAULT_CONFIG,
    qcfg: QuadConfig = DEFAULT_QUAD,
    integrand=None,
) -> tuple[SweepCheckpoint, QuadResult, QuadResult]:
    """Extend both prefix integrals from ``ckpt.frontier`` to T.

    ``integrand`` overrides the (Z^2, Z^4) pair; it must return two rows.
    """
    T = float(T)
    if not T >= ckpt.frontier >= 0:
        raise DomainError(f"need T >= frontier >= 0 (T={T}, frontier={ckpt.frontier})")
    if integrand is None:
        h = config_hash(cfg, qcfg)
        if ckpt.cfg_hash and ckpt.cfg_hash != h:
            raise CheckpointMismatch(f"checkpoint hash {ckpt.cfg_hash} != current config {h}")
        integrand = z_moments_integrand(cfg)
    r2, r4 = integrate_many(integrand, ckpt.frontier, T, qcfg)
    new = replace(
        ckpt,
        frontier=T,
        i2=ckpt.i2 + r2.value,
        i4=ckpt.i4 + r4.value,
        est_error_i2=ckpt.est_error_i2 + r2.est_error,
        est_error_i4=ckpt.est_error_i4 + r4.est_error,
    )
    res2 = QuadResult(new.i2, new.est_error_i2, r2.panels, r2.evals)
    res4 = QuadResult(new.i4, new.est_error_i4, r4.panels, r4.evals)
    return new, res2, res4


def z2_prefix(T, ckpt=None, cfg=DEFAULT_CONFIG, qcfg=DEFAULT_QUAD):
    """I2(T) = integral of Z^2 over [0, T]; returns ``(QuadResult, checkpoint)``."""
    ckpt = ckpt or SweepCheckpoint.start(cfg, qcfg)
    new, r2, _ = advance(ckpt, T, cfg, qcfg)
    return r2, new


def z4_prefix(T, ckpt=None, cfg=DEFAULT_CONFIG, qcfg=DEFAULT_QUAD):
    """I4(T) = integral of Z^4 over [0, T]; returns ``(QuadResult, checkpoint)``."""
    ckpt = ckpt or SweepCheckpoint.start(cfg, qcfg)
    new, _, r4 = advance(ckpt, T, cfg, qcfg)
    return r4, new


CHECKPOINT_FIELDS = ["frontier", "i2", "i4", "est_error_i2", "est_error_i4", "cfg_hash"]


class CheckpointFile:
    """Append-only CSV of checkpoints; one writer at a time (flock)."""

    def __init__(self, path):
        self.path = os.fspath(path)

    def rows(self) -> list[SweepCheckpoint]:
        if not os.path.exists(self.path):
            return []
        with open(self.path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CHECKPOINT_FIELDS:
                raise CheckpointMismatch(f"unexpected checkpoint header {reader.fieldnames}")
            out = []
            for row in reader:
                out.append(
                    SweepCheckpoint(
                        frontier=float(row["frontier"]),
                        i2=float(row["i2"]),
                        i4=float(row["i4"]),
                        est_error_i2=float(row["est_error_i2"]),
                        est_error_i4=float(row["est_error_i4"]),
                        cfg_hash=row["cfg_hash"],
                    )
                )
            return out

    def append(self, ckpt: SweepCheckpoint) -> None:
        new_file = not os.path.exists(self.path) or os.path.getsize(self.path) == 0
        with open(self.path, "a", newline="") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                w = csv.writer(fh)
                if new_file:
                    w.writerow(CHECKPOINT_FIELDS)
                w.writerow([repr(ckpt.frontier), repr(ckpt.i2), repr(ckpt.i4),
                            repr(ckpt.est_error_i2), repr(ckpt.est_error_i4), ckpt.cfg_hash])
                fh.flush()
                os.fsync(fh.fileno())
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def resume(self, cfg_hash: str, upto: float = math.inf) -> SweepCheckpoint | None:
        """Last row with a matching hash and frontier <= ``upto``.

        Raises CheckpointMismatch if the file has rows but none match.
        """
        rows = self.rows()
        matching = [r for r in rows if r.cfg_hash == cfg_hash]
        if rows and not matching:
            raise CheckpointMismatch(f"no checkpoint row matches config {cfg_hash}")
        usable = [r for r in matching if r.frontier <= upto]
        return usable[-1] if usable else None


# --- exponentially weighted Z^2 -----------------------------------------------


def _tail_estimate(cut, delta):
    """Rough size of the integral of Z^2 exp(-2 delta t) over [cut, inf)."""
    mean = max(math.log(max(cut, TWO_PI) / TWO_PI) + 2 * EULER_GAMMA, 1.0)
    return mean * math.exp(-2.0 * delta * cut) / (2.0 * delta)


def weighted_z2(
    upper: float,
    decay: float,
    cfg: EvalConfig = DEFAULT_CONFIG,
    qcfg: QuadConfig = WEIGHTED_QUAD,
    *,
    tail_cut: float = 20.0,
    integrand=None,
) -> QuadResult:
    """Integral of Z^2(t) exp(-2 decay t) over [0, upper].

    Integration stops at ``min(upper, tail_cut/decay)``; the neglected piece,
    and for the TKA use the piece beyond ``upper``, enter ``est_error``.
    """
    upper = float(upper)
    delta = float(decay)
    if not upper > 0 or not delta > 0:
        raise DomainError("weighted_z2 needs upper > 0 and decay > 0")
    if upper < 20.0 / delta:
        warnings.warn(f"upper {upper:g} < 20/delta = {20 / delta:g}: truncation tail not negligible",
                      stacklevel=2)
    cut = min(upper, tail_cut / delta)
    base = integrand or (lambda t: z_values(t, cfg) ** 2)
    res = integrate(lambda t: base(t) * np.exp(-2.0 * delta * t), 0.0, cut, qcfg)
    tail = _tail_estimate(cut, delta)
    return QuadResult(res.value, res.est_error + tail, res.panels, res.evals)


class PanelSamples:
    """Cached Z^2 at the panel nodes of [0, upper] for repeated weighted integrals.

    Used when the same range is integrated against many different smooth
    weights (root-finding on the decay rate).
    """

    def __init__(self, upper: float, cfg: EvalConfig = DEFAULT_CONFIG, qcfg: QuadConfig = WEIGHTED_QUAD):
        self.cfg = cfg
        self.qcfg = qcfg
        self.upper = 0.0
        self._t_whole = []
        self._w_whole = []
        self._y_whole = []
        self._t_half = []
        self._w_half = []
        self._y_half = []
        self.evals = 0
        self.extend(upper)

    def extend(self, upper: float) -> None:
        upper = float(math.ceil(upper))
        if upper <= self.upper:
            return
        lo, hi = panel_edges(self.upper, upper, self.qcfg)
        for s in range(0, lo.size, self.qcfg.chunk_panels):
            sl = slice(s, s + self.qcfg.chunk_panels)
            a, b = lo[sl], hi[sl]
            m = 0.5 * (a + b)
            tw, hw = _gl_nodes(a, b)
            tl, hl = _gl_nodes(a, m)
            tr, hr = _gl_nodes(m, b)
            th = np.concatenate([tl, tr], axis=1)
            wh = np.concatenate([hl[:, None] * _GL_W, hr[:, None] * _GL_W], axis=1)
            self._t_whole.append(tw)
            self._w_whole.append(hw[:, None] * _GL_W)
            self._y_whole.append(z_values(tw.ravel(), self.cfg).reshape(tw.shape) ** 2)
            self._t_half.append(th)
            self._w_half.append(wh)
            self._y_half.append(z_values(th.ravel(), self.cfg).reshape(th.shape) ** 2)
            self.evals += tw.size + th.size
        self.upper = upper
        self._stack()

    def _stack(self):
        self.t_whole = np.concatenate(self._t_whole)
        self.w_whole = np.concatenate(self._w_whole)
        self.y_whole = np.concatenate(self._y_whole)
        self.t_half = np.concatenate(self._t_half)
        self.w_half = np.concatenate(self._w_half)
        self.y_half = np.concatenate(self._y_half)

    def weighted(self, delta: float, tail_cut: float = 20.0) -> QuadResult:
        """Integral of Z^2 exp(-2 delta t) over [0, tail_cut/delta]."""
        cut = tail_cut / delta
        self.extend(cut)
        keep = self.t_whole[:, -1] < math.ceil(cut)
        whole = (self.y_whole[keep] * np.exp(-2 * delta * self.t_whole[keep]) * self.w_whole[keep]).sum(axis=1)
        half = (self.y_half[keep] * np.exp(-2 * delta * self.t_half[keep]) * self.w_half[keep]).sum(axis=1)
        err = np.abs(half - whole)
        value = math.fsum(half)
        P = int(keep.sum())
        if (err > _budget(self.qcfg.rel_tol * abs(value) / max(P, 1) + self.qcfg.abs_tol, half, self.qcfg)).any():
            i = int(err.argmax())
            raise QuadratureError("cached panel rule misses tolerance",
                                  worst_panel=(float(self.t_whole[keep][i, 0]), float(self.t_whole[keep][i, -1]),
                                               float(err[i])))
        tail = _tail_estimate(math.ceil(cut), delta)
        return QuadResult(value, math.fsum(err) + tail, P, self.evals)
