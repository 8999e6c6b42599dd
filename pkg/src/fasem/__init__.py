"""Fluid-antenna downlink optimization with semantic compression.

Joint optimization of the transmit covariance, the semantic compression
ratio and the activated receive ports of a fluid antenna, maximizing a
closed-form upper bound on the equivalent rate of a near-field multipath
downlink.  See the subpackages: :mod:`fasem.model` (geometry, channel,
rates), :mod:`fasem.semantic` (compression load), :mod:`fasem.fractional`
(covariance/ratio solver), :mod:`fasem.ports` (port selection),
:mod:`fasem.experiments` (alternation, baselines, sweeps) and
:mod:`fasem.cli`.
"""

from .errors import ConfigError, ConvergenceWarning, InfeasibleSegmentError
from .model import (
    PathResponse,
    PortSelection,
    RateEstimate,
    ScenarioSample,
    SystemConfig,
    TransmitCovariance,
    bs_antenna_y,
    channel,
    draw_scenario,
    mc_rate,
    path_diff_rx,
    path_diff_tx,
    port_field_matrix,
    port_y,
    rate_upper_bound,
    rx_field_matrix,
    sample_path_response,
    tx_field_matrix,
)
from .semantic import (
    LoadModel,
    compression_power,
    load,
    rho_from_power,
    segment_trace_bounds,
)
from .fractional import (
    DinkelbachTrace,
    InnerProblem,
    QRhoSolution,
    dinkelbach,
    inner_objective,
    reduce_inner,
    solve_inner,
    solve_q_rho,
)
from .ports import (
    PortScoreContext,
    coordinate_pass,
    exhaustive_best,
    optimize_ports,
    per_port_score,
    port_score_context,
)
from .experiments import (
    SCHEMES,
    ConvergencePoint,
    RunRecord,
    alternate_optimize,
    collect_convergence,
    emit_outputs,
    run_baseline,
    spread_ports,
    sweep_snr,
)
from .configio import ExperimentSettings, load_config, parse_config_text

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceWarning",
    "InfeasibleSegmentError",
    "SystemConfig",
    "ScenarioSample",
    "PortSelection",
    "PathResponse",
    "TransmitCovariance",
    "RateEstimate",
    "bs_antenna_y",
    "port_y",
    "path_diff_tx",
    "path_diff_rx",
    "tx_field_matrix",
    "rx_field_matrix",
    "port_field_matrix",
    "sample_path_response",
    "channel",
    "draw_scenario",
    "mc_rate",
    "rate_upper_bound",
    "LoadModel",
    "load",
    "compression_power",
    "rho_from_power",
    "segment_trace_bounds",
    "InnerProblem",
    "DinkelbachTrace",
    "QRhoSolution",
    "reduce_inner",
    "inner_objective",
    "solve_inner",
    "dinkelbach",
    "solve_q_rho",
    "PortScoreContext",
    "port_score_context",
    "per_port_score",
    "coordinate_pass",
    "optimize_ports",
    "exhaustive_best",
    "SCHEMES",
    "RunRecord",
    "ConvergencePoint",
    "spread_ports",
    "alternate_optimize",
    "run_baseline",
    "sweep_snr",
    "collect_convergence",
    "emit_outputs",
    "ExperimentSettings",
    "load_config",
    "parse_config_text",
    "__version__",
]
