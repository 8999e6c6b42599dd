"""Alternating optimization, baseline schemes, SNR sweeps and output emission.

The proposed scheme alternates the covariance/ratio solve (ports fixed) with
coordinate-ascent port selection (covariance fixed) until the bound objective
stalls.  Three baselines bracket it: random ports with the same
covariance/ratio solve, optimized ports without compression, and a static
two-antenna receiver at the aperture extremes.  A sweep runs every scheme on
common per-trial scenarios over a list of transmit SNRs and emits CSV files
(and optional SVG plots) whose bytes are reproducible for a fixed seed.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .fractional import solve_q_rho, transmit_gram_top
from .model import (
    PortSelection,
    ScenarioSample,
    SystemConfig,
    TransmitCovariance,
    draw_scenario,
    port_field_matrix,
    tx_field_matrix,
)
from .ports import optimize_ports, selection_gamma, selection_rate
from .semantic import LoadModel

SCHEMES = ("proposed", "random_fas_semantic", "fas_non_semantic", "conventional")
MAX_OUTER_ITERATIONS = 30

SWEEP_COLUMNS = ("scheme", "snr_db", "trial", "rate", "rho", "trace_q", "ports", "outer_iterations")
SUMMARY_COLUMNS = ("scheme", "snr_db", "mean_rate", "std_rate", "n_trials")
CONVERGENCE_COLUMNS = ("snr_db", "outer_iteration", "objective")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one scheme on one scenario.

    ``converged`` is diagnostic state, not an emitted column: False when any
    iteration cap was hit along the way.
    """

    scheme: str
    snr_db: float
    trial: int
    rate: float               # equivalent-rate bound [bits/s/Hz]
    rho: float                # compression ratio
    trace_q: float            # transmit power tr(Q) [mW]
    ports: tuple[int, ...]    # activated 1-based port indices
    outer_iterations: int
    converged: bool = True


@dataclass(frozen=True)
class ConvergencePoint:
    outer_iteration: int
    objective: float  # bound objective after the iteration [bits/s/Hz]


def spread_ports(cfg: SystemConfig) -> PortSelection:
    """Evenly spread initial selection across the aperture."""
    if cfg.m_active == 1:
        return PortSelection(((cfg.m_ports + 1) // 2,))
    raw = np.rint(np.linspace(1, cfg.m_ports, cfg.m_active)).astype(int)
    for i in range(1, cfg.m_active):          # repair rounding collisions
        raw[i] = max(raw[i], raw[i - 1] + 1)
    for i in range(cfg.m_active - 2, -1, -1):  # keep the tail on the grid
        raw[i] = min(raw[i], raw[i + 1] - 1)
    return PortSelection(tuple(int(p) for p in raw))


def alternate_optimize(
    scenario: ScenarioSample,
    cfg: SystemConfig,
    model: LoadModel,
    *,
    initial_ports: PortSelection | None = None,
) -> tuple[RunRecord, list[ConvergencePoint]]:
    """Alternate the covariance/ratio solve with port coordinate ascent.

    Records the bound objective after each outer iteration and stops when the
    change drops to ``cfg.eps2`` or after ``MAX_OUTER_ITERATIONS`` iterations.
    A re-solve can only fall short of the incumbent pair by the inner
    solver's tolerance; the incumbent is kept in that case, so the recorded
    trace is non-decreasing.
    """
    b_all = port_field_matrix(scenario, cfg)
    r = spread_ports(cfg) if initial_ports is None else initial_ports
    r.validate(cfg)
    sol = None
    points: list[ConvergencePoint] = []
    prev_value = None
    converged = False
    inner_ok = True
    for it in range(1, MAX_OUTER_ITERATIONS + 1):
        cand = solve_q_rho(r, scenario, cfg, model)
        inner_ok = inner_ok and cand.trace.converged
        if sol is None or prev_value is None or cand.upper_bound_rate >= prev_value:
            sol = cand
        gamma = selection_gamma(sol.q, scenario, cfg)
        r = optimize_ports(r, sol.q, sol.rho, scenario, cfg, b_all=b_all, gamma=gamma)
        value = selection_rate(gamma, b_all[:, r.as_index()], sol.rho)
        points.append(ConvergencePoint(it, value))
        if prev_value is not None and abs(value - prev_value) <= cfg.eps2:
            converged = True
            prev_value = value
            break
        prev_value = value
    record = RunRecord(
        scheme="proposed",
        snr_db=cfg.snr_db,
        trial=0,
        rate=float(prev_value),
        rho=sol.rho,
        trace_q=sol.trace_q,
        ports=r.ports,
        outer_iterations=len(points),
        converged=converged and inner_ok,
    )
    return record, points


def _full_power_rank_one(scenario: ScenarioSample, cfg: SystemConfig):
    a = tx_field_matrix(scenario, cfg)
    lam, v = transmit_gram_top(a)
    q = TransmitCovariance(cfg.p_max * np.outer(v, v.conj()))
    return q, cfg.gamma0 * cfg.p_max * lam


def _run_random_fas_semantic(scenario, cfg, model, rng) -> RunRecord:
    if rng is None:
        raise ValueError("the random-port scheme needs an rng")
    drawn = rng.choice(cfg.m_ports, size=cfg.m_active, replace=False)
    r = PortSelection(tuple(sorted(int(p) + 1 for p in drawn)))
    sol = solve_q_rho(r, scenario, cfg, model)
    return RunRecord(
        scheme="random_fas_semantic",
        snr_db=cfg.snr_db,
        trial=0,
        rate=sol.upper_bound_rate,
        rho=sol.rho,
        trace_q=sol.trace_q,
        ports=r.ports,
        outer_iterations=1,
        converged=sol.trace.converged,
    )


def _run_fas_non_semantic(scenario, cfg, model) -> RunRecord:
    # The full-power rank-one covariance is port-independent, so a single
    # covariance round followed by port ascent reaches the alternation fixed
    # point.
    b_all = port_field_matrix(scenario, cfg)
    q, gamma = _full_power_rank_one(scenario, cfg)
    r = optimize_ports(spread_ports(cfg), q, 1.0, scenario, cfg, b_all=b_all, gamma=gamma)
    rate = selection_rate(gamma, b_all[:, r.as_index()], 1.0)
    return RunRecord(
        scheme="fas_non_semantic",
        snr_db=cfg.snr_db,
        trial=0,
        rate=rate,
        rho=1.0,
        trace_q=cfg.p_max,
        ports=r.ports,
        outer_iterations=1,
        converged=True,
    )


def _run_conventional(scenario, cfg, model) -> RunRecord:
    if cfg.m_ports < 2:
        raise ConfigError("the conventional scheme needs at least 2 ports to hold 2 antennas")
    b_all = port_field_matrix(scenario, cfg)
    q, gamma = _full_power_rank_one(scenario, cfg)
    ports = (1, cfg.m_ports)  # static antennas at the aperture extremes
    rate = selection_rate(gamma, b_all[:, [0, cfg.m_ports - 1]], 1.0)
    return RunRecord(
        scheme="conventional",
        snr_db=cfg.snr_db,
        trial=0,
        rate=rate,
        rho=1.0,
        trace_q=cfg.p_max,
        ports=ports,
        outer_iterations=0,
        converged=True,
    )


def run_baseline(
    scheme: str,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    model: LoadModel,
    rng: np.random.Generator | None = None,
) -> RunRecord:
    """Run one scheme on a fixed scenario and return its record.

    ``rng`` is consumed only by the random-port scheme.
    """
    if scheme == "proposed":
        record, _ = alternate_optimize(scenario, cfg, model)
        return record
    if scheme == "random_fas_semantic":
        return _run_random_fas_semantic(scenario, cfg, model, rng)
    if scheme == "fas_non_semantic":
        return _run_fas_non_semantic(scenario, cfg, model)
    if scheme == "conventional":
        return _run_conventional(scenario, cfg, model)
    raise ConfigError(f"unknown scheme {scheme!r}; valid: {', '.join(SCHEMES)}")


def trial_seed_sequences(master_seed: int, snr_index: int, trial: int):
    """Deterministic per-trial seed sequences (scenario draw, auxiliary draws).

    Keyed by SNR index and trial so that adding SNR points or trials never
    perturbs existing scenarios.
    """
    root = np.random.SeedSequence((master_seed, snr_index, trial))
    return tuple(root.spawn(2))


def sweep_snr(
    snr_db_list: Sequence[float],
    n_trials: int,
    cfg: SystemConfig,
    model: LoadModel,
    schemes: Sequence[str] = SCHEMES,
) -> list[RunRecord]:
    """Run every scheme on common per-trial scenarios across transmit SNRs."""
    if n_trials < 1:
        raise ConfigError("n_trials must be at least 1")
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {scheme!r}; valid: {', '.join(SCHEMES)}")
    records = []
    for i, snr in enumerate(snr_db_list):
        cfg_s = cfg.with_snr_db(float(snr))
        for trial in range(n_trials):
            scen_ss, aux_ss = trial_seed_sequences(cfg.rng_seed, i, trial)
            scenario = draw_scenario(cfg_s, np.random.default_rng(scen_ss))
            for scheme in schemes:
                rec = run_baseline(
                    scheme, scenario, cfg_s, model, rng=np.random.default_rng(aux_ss)
                )
                records.append(dataclasses.replace(rec, snr_db=float(snr), trial=trial))
    return records


def collect_convergence(
    snr_db_list: Sequence[float],
    cfg: SystemConfig,
    model: LoadModel,
) -> tuple[list[RunRecord], list[tuple[float, list[ConvergencePoint]]]]:
    """Objective traces of the proposed scheme on each SNR's trial-0 scenario.

    Returns the per-SNR records alongside (snr_db, points) trace pairs; the
    scenarios match the corresponding trial-0 scenarios of :func:`sweep_snr`.
    """
    records = []
    traces = []
    for i, snr in enumerate(snr_db_list):
        cfg_s = cfg.with_snr_db(float(snr))
        scen_ss, _ = trial_seed_sequences(cfg.rng_seed, i, 0)
        scenario = draw_scenario(cfg_s, np.random.default_rng(scen_ss))
        record, points = alternate_optimize(scenario, cfg_s, model)
        records.append(dataclasses.replace(record, snr_db=float(snr), trial=0))
        traces.append((float(snr), points))
    return records, traces


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    # repr keeps full precision, so emitted values parse back exactly
    return repr(float(x))


def format_ports(ports: Iterable[int]) -> str:
    return ";".join(str(int(p)) for p in ports)


def parse_ports(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(";") if tok)


def _scheme_order(scheme: str) -> int:
    return SCHEMES.index(scheme) if scheme in SCHEMES else len(SCHEMES)


def _sorted_records(records: Sequence[RunRecord]) -> list[RunRecord]:
    return sorted(records, key=lambda r: (r.snr_db, _scheme_order(r.scheme), r.trial))


def write_sweep_csv(records: Sequence[RunRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for rec in _sorted_records(records):
            writer.writerow(
                [
                    rec.scheme,
                    _fmt(rec.snr_db),
                    rec.trial,
                    _fmt(rec.rate),
                    _fmt(rec.rho),
                    _fmt(rec.trace_q),
                    format_ports(rec.ports),
                    rec.outer_iterations,
                ]
            )


def summarize(records: Sequence[RunRecord]) -> list[tuple[str, float, float, float, int]]:
    """Per-(scheme, snr) mean/std of the rate, sorted like the CSV output."""
    groups: dict[tuple[int, float, str], list[float]] = {}
    for rec in records:
        groups.setdefault((_scheme_order(rec.scheme), rec.snr_db, rec.scheme), []).append(rec.rate)
    rows = []
    for order, snr, scheme in sorted(groups, key=lambda k: (k[1], k[0])):
        rates = groups[(order, snr, scheme)]
        mean = float(np.mean(rates))
        std = float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0
        rows.append((scheme, snr, mean, std, len(rates)))
    return rows


def write_summary_csv(records: Sequence[RunRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for scheme, snr, mean, std, n in summarize(records):
            writer.writerow([scheme, _fmt(snr), _fmt(mean), _fmt(std), n])


def write_convergence_csv(
    traces: Sequence[tuple[float, Sequence[ConvergencePoint]]], path: Path
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONVERGENCE_COLUMNS)
        for snr, points in sorted(traces, key=lambda t: t[0]):
            for pt in points:
                writer.writerow([_fmt(snr), pt.outer_iteration, _fmt(pt.objective)])


def _plot_convergence(traces, path: Path) -> None:
    from matplotlib.figure import Figure

    fig = Figure(figsize=(5.5, 3.8))
    ax = fig.add_subplot(111)
    for snr, points in sorted(traces, key=lambda t: t[0]):
        ax.plot(
            [pt.outer_iteration for pt in points],
            [pt.objective for pt in points],
            marker="o",
            label=f"{snr:g} dB",
        )
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("equivalent rate bound (bits/s/Hz)")
    ax.legend(title="transmit SNR")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, format="svg")


def _plot_sweep(records: Sequence[RunRecord], path: Path) -> None:
    from matplotlib.figure import Figure

    fig = Figure(figsize=(5.5, 3.8))
    ax = fig.add_subplot(111)
    rows = summarize(records)
    for scheme in dict.fromkeys(r[0] for r in rows):
        pts = [(snr, mean) for s, snr, mean, _, _ in rows if s == scheme]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=scheme)
    ax.set_xlabel("transmit SNR (dB)")
    ax.set_ylabel("mean equivalent rate (bits/s/Hz)")
    ax.legend()
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, format="svg")


def emit_outputs(
    records: Sequence[RunRecord],
    traces: Sequence[tuple[float, Sequence[ConvergencePoint]]],
    out_dir,
    plots: bool = False,
) -> list[Path]:
    """Write sweep.csv, summary.csv and convergence.csv (plus optional SVG plots).

    Returns the written paths.  Output is sorted before emission so repeated
    runs with the same inputs produce byte-identical files.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    try:
        sweep_path = out / "sweep.csv"
        write_sweep_csv(records, sweep_path)
        written.append(sweep_path)
        summary_path = out / "summary.csv"
        write_summary_csv(records, summary_path)
        written.append(summary_path)
        conv_path = out / "convergence.csv"
        write_convergence_csv(traces, conv_path)
        written.append(conv_path)
        if plots:
            conv_fig = out / "convergence.svg"
            _plot_convergence(traces, conv_fig)
            written.append(conv_fig)
            sweep_fig = out / "snr_sweep.svg"
            _plot_sweep(records, sweep_fig)
            written.append(sweep_fig)
    except OSError as exc:
        raise OSError(f"failed writing results under {out}: {exc}") from exc
    return written
