"""Command-line front end.

    zetaladder areas --t 1000 --mode moser --out r.json
    zetaladder sweep --t-min 100 --t-max 10000 --points 20 --log-grid \\
        --checkpoint ck.csv --out sweep.csv
    zetaladder ladder --t 10000
    zetaladder moments --t 10000
    zetaladder tka --delta-list 0.05,0.02,0.01
    zetaladder c0 --fit

Exit codes: 0 success, 1 usage, 2 tolerance/identity failure, 3 checkpoint
mismatch.  Settings resolve as flag > environment (ZL_REL_TOL, ZL_RS_ORDER,
ZL_C0) > default.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import CheckpointMismatch, ZetaLadderError
from .ladder import fit_c0, solve_phi, tka_check
from .oscillation import area_balance_report, conditional_diagnostics, fourth_moment_main, parse_mode
from .quad import DEFAULT_QUAD, CheckpointFile, QuadConfig, SweepCheckpoint, advance, config_hash
from .zeta_core import EULER_GAMMA, EvalConfig

log = logging.getLogger("zetaladder")

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_CHECKPOINT = 0, 1, 2, 3
DEFAULT_C0_FILE = "zl_c0.json"
DEFAULT_TKA_DELTAS = (0.08, 0.04, 0.02, 0.01)


@dataclass
class SweepRow:
    T: float
    i2: float
    i4: float
    phi: float
    sigma: float
    sigma1: float
    m_plus: float
    m_minus: float
    diff_moser: float
    diff_bala: float
    eta1: float
    eta2: float
    eta_gap_over_ln3T: float
    fourth_moment_ratio: float


SWEEP_FIELDS = [f.name for f in fields(SweepRow)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name, default):
    return os.environ.get(name, default)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zetaladder", description=__doc__.split("\n\n")[0])
    p.add_argument("--rel-tol", type=float, default=None, help="prefix quadrature rel. tolerance [ZL_REL_TOL]")
    p.add_argument("--rs-order", type=int, default=None, help="Riemann-Siegel corrections 0-4 [ZL_RS_ORDER]")
    p.add_argument("--em-threshold", type=float, default=EvalConfig.em_threshold)
    p.add_argument("--em-terms", type=int, default=EvalConfig.em_terms)
    p.add_argument("--target-abs-error", type=float, default=EvalConfig.target_abs_error)
    p.add_argument("--c0", default=None, help="constant c0 (number or 'auto') [ZL_C0]")
    p.add_argument("--c0-file", default=DEFAULT_C0_FILE, help="where 'c0 --fit' stores its estimate")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("areas", help="area-balance report at one T")
    a.add_argument("--t", type=float, required=True)
    a.add_argument("--mode", default="moser", help="moser | balasubramanian | level=<value>")
    a.add_argument("--format", choices=["json", "csv"], default="json")
    a.add_argument("--out", default=None)
    a.add_argument("--identity-rtol", type=float, default=1e-6)

    s = sub.add_parser("sweep", help="resumable table over a T grid")
    s.add_argument("--t-min", type=float, required=True)
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--points", type=int, required=True)
    s.add_argument("--log-grid", action="store_true")
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--plot-dir", default=None, help="write two-column (T, value) files per metric")
    s.add_argument("--stop-after", type=int, default=None, help=argparse.SUPPRESS)

    lad = sub.add_parser("ladder", help="phi(T) and sigma(T)")
    lad.add_argument("--t", type=float, required=True)

    m = sub.add_parser("moments", help="second and fourth moments at T")
    m.add_argument("--t", type=float, required=True)

    t = sub.add_parser("tka", help="exponentially weighted second moment checks")
    t.add_argument("--delta-list", default=",".join(map(str, DEFAULT_TKA_DELTAS)))

    c = sub.add_parser("c0", help="estimate the constant c0")
    c.add_argument("--fit", action="store_true", required=True)
    c.add_argument("--delta-list", default="0.02,0.01")
    return p


def _configs(args) -> tuple[EvalConfig, QuadConfig]:
    rs = args.rs_order if args.rs_order is not None else int(_env("ZL_RS_ORDER", EvalConfig.rs_correction_order))
    rel = args.rel_tol if args.rel_tol is not None else float(_env("ZL_REL_TOL", DEFAULT_QUAD.rel_tol))
    cfg = EvalConfig(
        rs_correction_order=rs,
        em_threshold=args.em_threshold,
        em_terms=args.em_terms,
        target_abs_error=args.target_abs_error,
    )
    return cfg, QuadConfig(rel_tol=rel)


def _resolve_c0(args, cfg) -> float:
    raw = args.c0 if args.c0 is not None else _env("ZL_C0", "0")
    if str(raw).lower() != "auto":
        return float(raw)
    if os.path.exists(args.c0_file):
        with open(args.c0_file) as fh:
            return float(json.load(fh)["c0_estimate"])
    c0 = fit_c0(cfg=cfg)
    _save_c0(args.c0_file, c0, (0.02, 0.01))
    return c0


def _save_c0(path, c0, deltas):
    with open(path, "w") as fh:
        json.dump({"c0_estimate": c0, "deltas": list(deltas)}, fh)


def _parse_deltas(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --delta-list {text!r}") from exc


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def _csv_cell(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def cmd_areas(args, cfg, qcfg, c0) -> int:
    parse_mode(args.mode)
    rep = area_balance_report(args.t, args.mode, c0=c0, cfg=cfg, qcfg=qcfg)
    d = rep.to_dict()
    d["conditional_diagnostics"] = conditional_diagnostics(rep.T, rep)
    fh = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump(d, fh, indent=2, default=_json_default)
            fh.write("\n")
        else:
            flat = {k: v for k, v in d.items() if not isinstance(v, dict)}
            for k, v in d["identity_residuals"].items():
                flat[f"residual_{k}"] = v
            w = csv.DictWriter(fh, fieldnames=list(flat))
            w.writeheader()
            w.writerow({k: _csv_cell(v) for k, v in flat.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    if not rep.identity_ok(args.identity_rtol):
        log.error("identity residuals exceed tolerance: %s", rep.identity_residuals)
        return EXIT_TOLERANCE
    return EXIT_OK


def sweep_grid(t_min, t_max, points, log_grid) -> np.ndarray:
    if log_grid:
        return np.geomspace(t_min, t_max, points)
    return np.linspace(t_min, t_max, points)


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames != SWEEP_FIELDS:
            raise CheckpointMismatch(f"{path}: header {r.fieldnames} does not match the sweep layout")
        return [SweepRow(**{k: float(v) for k, v in row.items()}) for row in r]


def sweep_row(T, ckpt, c0, cfg, qcfg) -> SweepRow:
    rep = area_balance_report(T, "moser", c0=c0, cfg=cfg, qcfg=qcfg, prefix=(ckpt.i2, ckpt.i4),
                              prefix_error=(ckpt.est_error_i2, ckpt.est_error_i4))
    pt = solve_phi(T, ckpt.i2, c0)
    gap = (rep.eta1 - rep.eta2) if rep.eta1 is not None else math.nan
    return SweepRow(
        T=float(T),
        i2=ckpt.i2,
        i4=ckpt.i4,
        phi=pt.phi,
        sigma=rep.sigma_level,
        sigma1=pt.sigma1,
        m_plus=rep.m_plus,
        m_minus=rep.m_minus,
        diff_moser=rep.diff,
        diff_bala=ckpt.i2 - T * pt.sigma1,
        eta1=rep.eta1 if rep.eta1 is not None else math.nan,
        eta2=rep.eta2 if rep.eta2 is not None else math.nan,
        eta_gap_over_ln3T=gap / math.log(T) ** 3,
        fourth_moment_ratio=ckpt.i4 / fourth_moment_main(T),
    )


def run_sweep(t_min, t_max, points, log_grid=False, *, checkpoint=None, out=None,
              c0=0.0, cfg=EvalConfig(), qcfg=DEFAULT_QUAD, stop_after=None) -> list[SweepRow]:
    """Compute (or resume) the sweep table; rows are appended to ``out`` as they finish."""
    grid = sweep_grid(t_min, t_max, points, log_grid)
    h = config_hash(cfg, qcfg)
    done: list[SweepRow] = []
    if out and os.path.exists(out) and os.path.getsize(out) > 0:
        done = read_sweep_csv(out)
        if len(done) > len(grid) or any(r.T != g for r, g in zip(done, grid)):
            raise CheckpointMismatch(f"{out}: existing rows do not match the requested grid")
    ck_file = CheckpointFile(checkpoint) if checkpoint else None
    ckpt = None
    if ck_file is not None and len(done) < len(grid):
        ckpt = ck_file.resume(h, upto=float(grid[len(done)]))
    ckpt = ckpt or SweepCheckpoint.start(cfg, qcfg)

    fh = None
    if out:
        new = not done
        fh = open(out, "a", newline="")
        writer = csv.writer(fh)
        if new:
            writer.writerow(SWEEP_FIELDS)
    rows = list(done)
    computed = 0
    try:
        for T in grid[len(done):]:
            if stop_after is not None and computed >= stop_after:
                break
            ckpt, _, _ = advance(ckpt, float(T), cfg, qcfg)
            if ck_file is not None:
                ck_file.append(ckpt)
            row = sweep_row(float(T), ckpt, c0, cfg, qcfg)
            rows.append(row)
            computed += 1
            log.info("T=%.6g diff_moser=%.3g diff_bala=%.3g", row.T, row.diff_moser, row.diff_bala)
            if fh is not None:
                writer.writerow([repr(v) for v in asdict(row).values()])
                fh.flush()
    finally:
        if fh is not None:
            fh.close()
    return rows


def write_sweep_csv(rows, fh):
    w = csv.writer(fh)
    w.writerow(SWEEP_FIELDS)
    for r in rows:
        w.writerow([repr(v) for v in asdict(r).values()])


def write_plot_data(rows, directory):
    os.makedirs(directory, exist_ok=True)
    for name in SWEEP_FIELDS[1:]:
        with open(os.path.join(directory, f"{name}.dat"), "w") as fh:
            for r in rows:
                fh.write(f"{r.T!r} {getattr(r, name)!r}\n")


def cmd_sweep(args, cfg, qcfg, c0) -> int:
    if not (10 <= args.t_min < args.t_max) or args.points < 2:
        log.error("need 10 <= t_min < t_max and points >= 2")
        return EXIT_USAGE
    rows = run_sweep(args.t_min, args.t_max, args.points, args.log_grid, checkpoint=args.checkpoint,
                     out=args.out, c0=c0, cfg=cfg, qcfg=qcfg, stop_after=args.stop_after)
    if not args.out:
        write_sweep_csv(rows, sys.stdout)
    if args.plot_dir:
        write_plot_data(rows, args.plot_dir)
    return EXIT_OK


def cmd_ladder(args, cfg, qcfg, c0) -> int:
    ckpt, r2, _ = advance(SweepCheckpoint.start(cfg, qcfg), args.t, cfg, qcfg)
    pt = solve_phi(args.t, r2.value, c0)
    out = asdict(pt)
    out["phi_over_2T"] = pt.phi / (2 * pt.T)
    out["i2_est_error"] = r2.est_error
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_moments(args, cfg, qcfg, c0) -> int:
    T = args.t
    ckpt, r2, r4 = advance(SweepCheckpoint.start(cfg, qcfg), T, cfg, qcfg)
    main2 = T * math.log(T) + (2 * EULER_GAMMA - 1 - math.log(2 * math.pi)) * T
    out = {
        "T": T,
        "i2": r2.value,
        "i2_est_error": r2.est_error,
        "i2_main_term": main2,
        "i2_rel_dev": r2.value / main2 - 1.0,
        "i4": r4.value,
        "i4_est_error": r4.est_error,
        "fourth_moment_main_term": fourth_moment_main(T),
        "fourth_moment_ratio": r4.value / fourth_moment_main(T),
    }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_tka(args, cfg, qcfg, c0) -> int:
    reports = tka_check(_parse_deltas(args.delta_list), cfg)
    w = csv.writer(sys.stdout)
    names = [f.name for f in fields(reports[0])] if reports else []
    w.writerow(names)
    for r in reports:
        w.writerow([_csv_cell(v) for v in asdict(r).values()])
    return EXIT_OK


def cmd_c0(args, cfg, qcfg, c0) -> int:
    deltas = _parse_deltas(args.delta_list)
    est = fit_c0(tuple(deltas), cfg)
    _save_c0(args.c0_file, est, deltas)
    print(repr(est))
    return EXIT_OK


COMMANDS = {
    "areas": cmd_areas,
    "sweep": cmd_sweep,
    "ladder": cmd_ladder,
    "moments": cmd_moments,
    "tka": cmd_tka,
    "c0": cmd_c0,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, qcfg = _configs(args)
        c0 = _resolve_c0(args, cfg) if args.command != "c0" else 0.0
        return COMMANDS[args.command](args, cfg, qcfg, c0)
    except CheckpointMismatch as exc:
        log.error("%s", exc)
        return EXIT_CHECKPOINT
    except (argparse.ArgumentTypeError, ValueError) as exc:
        log.error("%s", exc)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except ZetaLadderError as exc:
        log.error("%s", exc)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
