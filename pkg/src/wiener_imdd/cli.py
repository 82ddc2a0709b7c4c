"""Command-line runner: ``wiener-imdd {cir,design,shape,sweep}``."""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import replace

from . import config as config_mod
from .channel import build_conv_operator, sample_cir, write_cir_csv
from .errors import DomainError
from .sim import SweepPointError, run_sweep, shape_at_snr
from .wiener import VARIANTS, design_filter, write_filter_csv

SHAPE_SCHEMA = "wiener-imdd/shape/v1"
SWEEP_SCHEMA = "wiener-imdd/sweep/v1"
THREADS_ENV = "WIENER_IMDD_THREADS"

SWEEP_COLUMNS = [
    "snr_el_db", "d_norm", "esr_analytic_db", "esr_empirical_db", "rate_bpcu",
    "sigma_eta2", "seed", "variant", "sweep_index",
]

log = logging.getLogger("wiener_imdd")


def _db(x):
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _fmt(x):
    return repr(float(x))


def _link_meta(cfg, cir, K):
    return {
        "pam_order": cfg.pam_order,
        "length_km": _fmt(cfg.link.length),
        "baud_hz": _fmt(cfg.link.baud),
        "p_tx_opt_w": _fmt(cfg.launch_power_w()),
        "M": cir.M,
        "K": K,
    }


def _write_meta(fh, schema, meta):
    fh.write(f"# schema: {schema}\n")
    for key, value in meta.items():
        fh.write(f"# {key}: {value}\n")


def _setup(cfg):
    cir = sample_cir(cfg.link, cfg.truncation_rel, cfg.n_fft)
    K = cfg.resolve_k(cir.M)
    return cir, build_conv_operator(cir, K, cfg.link.n_os)


def _variants(args, cfg):
    return tuple(args.variant) if args.variant else cfg.filter_variants


def cmd_cir(cfg, args, fh):
    cir = sample_cir(cfg.link, cfg.truncation_rel, cfg.n_fft)
    write_cir_csv(cir, fh)


def cmd_design(cfg, args, fh):
    variants = _variants(args, cfg)
    if len(variants) != 1:
        raise DomainError("design writes one filter; pass exactly one --variant")
    snr = args.snr_db if args.snr_db is not None else cfg.snr_grid_db[-1]
    cir, op = _setup(cfg)
    opp = shape_at_snr(op, cfg.pam_order, cfg.launch_power_w(), snr)
    filt, esr = design_filter(variants[0], op, opp.constellation, opp.sigma_eta2)
    meta = _link_meta(cfg, cir, op.K)
    meta.update(
        snr_el_db=_fmt(snr),
        sigma_eta2=_fmt(opp.sigma_eta2),
        d_norm=_fmt(opp.d_norm),
        esr_analytic_db=_fmt(_db(esr)),
        target_col=op.target_col,
    )
    write_filter_csv(filt, fh, meta)


def cmd_shape(cfg, args, fh):
    grid = [args.snr_db] if args.snr_db is not None else cfg.snr_grid_db
    cir, op = _setup(cfg)
    p_tx = cfg.launch_power_w()
    _write_meta(fh, SHAPE_SCHEMA, _link_meta(cfg, cir, op.K))
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["snr_el_db", "d_norm", "esr_analytic_db", "sigma_eta2"])
    for i, snr in enumerate(grid):
        try:
            opp = shape_at_snr(op, cfg.pam_order, p_tx, snr)
        except Exception as exc:
            raise SweepPointError(i, snr, exc) from exc
        writer.writerow([_fmt(snr), _fmt(opp.d_norm), _fmt(_db(opp.esr)), _fmt(opp.sigma_eta2)])


def cmd_sweep(cfg, args, fh):
    grid = [args.snr_db] if args.snr_db is not None else cfg.snr_grid_db
    variants = _variants(args, cfg)
    cir, op = _setup(cfg)
    rows = run_sweep(
        op, cir, cfg.pam_order, cfg.launch_power_w(), grid, variants,
        cfg.n_symbols, cfg.master_seed, threads=args.threads,
    )
    meta = _link_meta(cfg, cir, op.K)
    meta.update(n_symbols=cfg.n_symbols, master_seed=cfg.master_seed)
    _write_meta(fh, SWEEP_SCHEMA, meta)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([
            _fmt(r.snr_el_db), _fmt(r.d_norm), _fmt(_db(r.esr_analytic)), _fmt(_db(r.esr_empirical)),
            _fmt(r.rate_bpcu), _fmt(r.sigma_eta2), cfg.master_seed, r.variant, r.sweep_index,
        ])


COMMANDS = {"cir": cmd_cir, "design": cmd_design, "shape": cmd_shape, "sweep": cmd_sweep}


def _default_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser():
    parser = argparse.ArgumentParser(prog="wiener-imdd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("cir", "write the sampled channel impulse response"),
        ("design", "write filter taps at one SNR point"),
        ("shape", "ESR-optimal span for each SNR point"),
        ("sweep", "Monte-Carlo sweep over the SNR grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file (defaults when omitted)")
        p.add_argument("--seed", type=int, help="override sweep.master_seed")
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        p.add_argument("--variant", action="append", choices=VARIANTS, help="filter variant (repeatable)")
        p.add_argument(
            "--threads", type=int, default=_default_threads(),
            help=f"worker threads for sweep points (default from ${THREADS_ENV}, else 1)",
        )
        p.add_argument("--snr-db", type=float, help="single SNR_el point instead of the grid")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _error_line(exc):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SweepPointError):
        payload.update(error=type(exc.cause).__name__, sweep_index=exc.index, snr_el_db=exc.snr_el_db)
    return json.dumps(payload, sort_keys=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_mod.load(args.config) if args.config else config_mod.ExperimentConfig()
        if args.seed is not None:
            cfg = replace(cfg, master_seed=args.seed)
        buf = io.StringIO()
        COMMANDS[args.command](cfg, args, buf)
        if args.out == "-":
            sys.stdout.write(buf.getvalue())
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
    except (ValueError, RuntimeError, OSError, ArithmeticError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
