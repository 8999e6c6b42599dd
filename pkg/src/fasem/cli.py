"""Command-line interface.

Subcommands
-----------
simulate      run one scheme on one scenario and print its record
sweep         run all configured schemes over the SNR grid and write CSVs
convergence   record the alternation's objective trace at each SNR
oracle-check  run the randomized solver checks and report pass/fail

Exit codes: 0 on success, 2 on config validation failure, 3 when a solver
hit an iteration cap without converging, 1 on other errors (I/O, failed
oracle checks).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .configio import load_config
from .errors import ConfigError
from .experiments import (
    SCHEMES,
    collect_convergence,
    emit_outputs,
    format_ports,
    run_baseline,
    summarize,
    sweep_snr,
    trial_seed_sequences,
    write_convergence_csv,
    _plot_convergence,
)
from .model import draw_scenario
from .oracles import run_all


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fasem",
        description="Fluid-antenna downlink optimization with semantic compression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", metavar="PATH", help="flat key=value config file")
        sp.add_argument("--seed", type=int, metavar="U64", help="override the master seed")

    sp = sub.add_parser("simulate", help="run one scheme on one scenario")
    add_common(sp)
    sp.add_argument("--scheme", choices=SCHEMES, default="proposed")
    sp.add_argument("--snr-db", type=float, help="transmit SNR; defaults to the config budget")
    sp.add_argument("--trial", type=int, default=0, help="trial index used for seeding")

    sp = sub.add_parser("sweep", help="run all schemes over the configured SNR grid")
    add_common(sp)
    sp.add_argument("--out", metavar="DIR", help="output directory (default from config)")
    sp.add_argument("--plots", action="store_true", help="also write SVG plots")

    sp = sub.add_parser("convergence", help="trace the alternation objective per SNR")
    add_common(sp)
    sp.add_argument("--out", metavar="DIR", help="output directory (default from config)")
    sp.add_argument("--plots", action="store_true", help="also write an SVG plot")

    sp = sub.add_parser("oracle-check", help="run randomized solver checks")
    add_common(sp)
    return parser


def _settings_from_args(args):
    settings = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        settings = dataclasses.replace(
            settings, system=dataclasses.replace(settings.system, rng_seed=args.seed)
        )
    return settings


def _cmd_simulate(args) -> int:
    settings = _settings_from_args(args)
    cfg = settings.system
    if args.snr_db is not None:
        cfg = cfg.with_snr_db(args.snr_db)
    if args.trial < 0:
        raise ConfigError("--trial must be non-negative")
    scen_ss, aux_ss = trial_seed_sequences(cfg.rng_seed, 0, args.trial)
    scenario = draw_scenario(cfg, np.random.default_rng(scen_ss))
    record = run_baseline(
        args.scheme, scenario, cfg, settings.load_model, rng=np.random.default_rng(aux_ss)
    )
    snr = args.snr_db if args.snr_db is not None else cfg.snr_db
    record = dataclasses.replace(record, snr_db=float(snr), trial=args.trial)
    print(f"scheme = {record.scheme}")
    print(f"snr_db = {record.snr_db:g}")
    print(f"trial = {record.trial}")
    print(f"rate = {record.rate:.6f} bits/s/Hz")
    print(f"rho = {record.rho:.6f}")
    print(f"trace_q = {record.trace_q:.6f} mW")
    print(f"ports = {format_ports(record.ports)}")
    print(f"outer_iterations = {record.outer_iterations}")
    print(f"converged = {record.converged}")
    return 0 if record.converged else 3


def _cmd_sweep(args) -> int:
    settings = _settings_from_args(args)
    out_dir = args.out if args.out is not None else settings.out_dir
    records = sweep_snr(
        settings.snr_db_list,
        settings.n_trials,
        settings.system,
        settings.load_model,
        schemes=settings.schemes,
    )
    if "proposed" in settings.schemes:
        _, traces = collect_convergence(
            settings.snr_db_list, settings.system, settings.load_model
        )
    else:
        traces = []
    paths = emit_outputs(records, traces, out_dir, plots=args.plots)
    for scheme, snr, mean, std, n in summarize(records):
        print(f"{scheme:>22s} @ {snr:5.1f} dB: {mean:8.4f} +/- {std:.4f} bits/s/Hz ({n} trials)")
    for path in paths:
        print(f"wrote {path}")
    if any(not rec.converged for rec in records):
        print("warning: at least one run hit an iteration cap", file=sys.stderr)
        return 3
    return 0


def _cmd_convergence(args) -> int:
    settings = _settings_from_args(args)
    out_dir = args.out if args.out is not None else settings.out_dir
    records, traces = collect_convergence(
        settings.snr_db_list, settings.system, settings.load_model
    )
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "convergence.csv"
    write_convergence_csv(traces, path)
    written = [path]
    if args.plots:
        fig_path = out / "convergence.svg"
        _plot_convergence(traces, fig_path)
        written.append(fig_path)
    for (snr, points), record in zip(traces, records):
        print(
            f"snr {snr:5.1f} dB: {len(points)} outer iterations, "
            f"final objective {points[-1].objective:.4f} bits/s/Hz"
        )
    for p in written:
        print(f"wrote {p}")
    if any(not rec.converged for rec in records):
        print("warning: at least one run hit an iteration cap", file=sys.stderr)
        return 3
    return 0


def _cmd_oracle_check(args) -> int:
    settings = _settings_from_args(args)  # validates config, seed unused by the checks
    del settings
    results = run_all()
    all_passed = True
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")
        all_passed = all_passed and res.passed
    return 0 if all_passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "convergence": _cmd_convergence,
        "oracle-check": _cmd_oracle_check,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
