"""Flat key=value experiment configuration files.

One ``key = value`` pair per line; blank lines and ``#`` comments are
ignored.  Keys cover every :class:`~fasem.model.SystemConfig` field plus the
experiment-level settings (load model, scheme list, SNR grid, trial count,
output directory).  Unknown keys and malformed values raise
:class:`~fasem.errors.ConfigError` naming the offending key.

Example::

    # 10 dB sweep, two schemes
    p_max = 19.95
    snr_db_list = 0, 5, 10
    n_trials = 20
    schemes = proposed, fas_non_semantic
    load_model = -0.5, 0.5, 0.7; -1.0, 0.85, 0.4; -2.0, 1.25, 0.2
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .experiments import SCHEMES
from .model import SystemConfig
from .semantic import LoadModel


@dataclass(frozen=True)
class ExperimentSettings:
    system: SystemConfig
    load_model: LoadModel
    schemes: tuple[str, ...] = SCHEMES
    snr_db_list: tuple[float, ...] = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0)
    n_trials: int = 50
    out_dir: str = "results"

    def __post_init__(self):
        for scheme in self.schemes:
            if scheme not in SCHEMES:
                raise ConfigError(
                    f"unknown scheme {scheme!r}; valid: {', '.join(SCHEMES)}"
                )
        if not self.schemes:
            raise ConfigError("schemes must not be empty")
        if not self.snr_db_list:
            raise ConfigError("snr_db_list must not be empty")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be at least 1")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_pair(text: str) -> tuple[float, float]:
    parts = [float(tok) for tok in text.split(",")]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return parts[0], parts[1]


def _parse_load_model(text: str) -> LoadModel:
    triples = []
    for chunk in text.split(";"):
        chunk = chunk.strip().strip("()")
        if not chunk:
            continue
        parts = [float(tok) for tok in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError(
                "each load segment needs three numbers: slope, intercept, lower_break"
            )
        triples.append(tuple(parts))
    if not triples:
        raise ValueError("load_model must define at least one segment")
    return LoadModel.from_triples(triples)


_SYSTEM_PARSERS = {
    "n_tx": int,
    "m_ports": int,
    "m_active": int,
    "wavelength": float,
    "d_bs": float,
    "d_u": float,
    "v_tx_paths": int,
    "v_rx_paths": int,
    "noise_power": float,
    "path_gain_var": float,
    "p_max": float,
    "p0": float,
    "eps1": float,
    "eps2": float,
    "mc_samples": int,
    "scatterer_dist_range": _parse_float_pair,
    "rng_seed": int,
    "complex_path_gains": _parse_bool,
}

_EXPERIMENT_PARSERS = {
    "load_model": _parse_load_model,
    "schemes": lambda text: tuple(tok.strip() for tok in text.split(",") if tok.strip()),
    "snr_db_list": lambda text: tuple(float(tok) for tok in text.split(",") if tok.strip()),
    "n_trials": int,
    "out_dir": str.strip,
}


def parse_config_text(text: str) -> ExperimentSettings:
    """Parse config file contents into validated settings."""
    system_kwargs = {}
    experiment_kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _SYSTEM_PARSERS:
            target, parser = system_kwargs, _SYSTEM_PARSERS[key]
        elif key in _EXPERIMENT_PARSERS:
            target, parser = experiment_kwargs, _EXPERIMENT_PARSERS[key]
        else:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in system_kwargs or key in experiment_kwargs:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        try:
            target[key] = parser(value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    system = SystemConfig(**system_kwargs)
    experiment_kwargs.setdefault("load_model", LoadModel.default())
    return ExperimentSettings(system=system, **experiment_kwargs)


def load_config(path: str | None) -> ExperimentSettings:
    """Load settings from ``path``, or defaults when no path is given."""
    if path is None:
        return ExperimentSettings(system=SystemConfig(), load_model=LoadModel.default())
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)
