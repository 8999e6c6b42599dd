"""Near-field downlink model with a fluid receive antenna.

A uniform linear array of ``n_tx`` elements serves a receiver whose antenna
can activate ``m_active`` of ``m_ports`` candidate positions on a shared
aperture.  Propagation goes through a small number of scatterers on each
side; element/port responses are unit-modulus phase factors driven by the
spherical-wavefront path-length differences, and the per-path coupling gains
are random.  This module owns the geometry, the random scenario and gain
draws, the end-to-end channel, a Monte-Carlo rate estimator, and the
closed-form upper bound on the equivalent rate used as the optimization
objective everywhere else.

Units: meters for geometry, radians for angles, linear milliwatts for all
powers, bits/s/Hz for rates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)

# Tolerances for covariance validation.
HERMITIAN_TOL = 1e-10
PSD_EIG_TOL = 1e-9
TRACE_TOL = 1e-9


@dataclass(frozen=True)
class SystemConfig:
    """Physical and algorithmic parameters of one downlink instance.

    Defaults describe a 28-ish GHz setup (4 mm carrier wavelength) with
    half-wavelength spacings, 3 dBm noise power and a budget equal to a
    15 dB transmit SNR.  Rayleigh distance for the default apertures is
    about 0.72 m, so scatterers drawn from ``scatterer_dist_range`` sit in
    the radiating near field.
    """

    n_tx: int = 20                  # transmit array elements
    m_ports: int = 35               # candidate receive ports
    m_active: int = 5               # simultaneously activated ports
    wavelength: float = 4e-3        # carrier wavelength [m]
    d_bs: float = 2e-3              # transmit element spacing [m]
    d_u: float = 2e-3               # receive port spacing [m]
    v_tx_paths: int = 3             # departure-side propagation paths
    v_rx_paths: int = 3             # arrival-side propagation paths
    noise_power: float = 10 ** 0.3  # sigma^2 [mW] (3 dBm)
    path_gain_var: float = 1.0 / 3.0  # variance of each coupling gain
    p_max: float = 10 ** 1.8        # total power budget [mW] (15 dB SNR)
    p0: float = 1.0                 # computation power coefficient [mW]
    eps1: float = 1e-5              # fractional-solver stopping threshold
    eps2: float = 1e-5              # alternation stopping threshold
    mc_samples: int = 1000          # default Monte-Carlo sample count
    scatterer_dist_range: tuple[float, float] = (0.1, 1.0)  # [m]
    rng_seed: int = 42
    complex_path_gains: bool = False  # circular complex gains instead of real

    def __post_init__(self):
        if self.n_tx < 1:
            raise ConfigError("n_tx must be a positive integer")
        if self.m_ports < 1:
            raise ConfigError("m_ports must be a positive integer")
        if not 1 <= self.m_active <= self.m_ports:
            raise ConfigError("m_active must satisfy 1 <= m_active <= m_ports")
        if self.wavelength <= 0 or self.d_bs <= 0 or self.d_u <= 0:
            raise ConfigError("wavelength and spacings must be positive")
        if self.v_tx_paths < 1 or self.v_rx_paths < 1:
            raise ConfigError("path counts must be positive integers")
        if self.noise_power <= 0:
            raise ConfigError("noise_power must be positive")
        if self.path_gain_var < 0:
            raise ConfigError("path_gain_var must be non-negative")
        if self.p_max <= 0:
            raise ConfigError("p_max must be positive")
        if self.p0 <= 0:
            raise ConfigError("p0 must be positive")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ConfigError("eps1 and eps2 must be positive")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be at least 1")
        lo, hi = self.scatterer_dist_range
        if not 0 < lo <= hi:
            raise ConfigError("scatterer_dist_range must satisfy 0 < lo <= hi")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")

    @property
    def gamma0(self) -> float:
        """Gain-to-noise ratio path_gain_var / noise_power."""
        return self.path_gain_var / self.noise_power

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.p_max / self.noise_power)

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with the power budget set to the given transmit SNR."""
        return dataclasses.replace(self, p_max=self.noise_power * 10 ** (snr_db / 10.0))


@dataclass(frozen=True)
class ScenarioSample:
    """One random draw of departure/arrival path geometry.

    Elevation angles drive the linear-array phase model; azimuth angles are
    carried for completeness but never consumed by it.  Distances measure
    scatterer range from the respective array center and must be positive.
    """

    theta_t: np.ndarray  # departure elevations [rad]
    phi_t: np.ndarray    # departure azimuths [rad]
    v_t: np.ndarray      # departure scatterer distances [m]
    theta_r: np.ndarray  # arrival elevations [rad]
    phi_r: np.ndarray    # arrival azimuths [rad]
    v_r: np.ndarray      # arrival scatterer distances [m]

    def __post_init__(self):
        for name in ("theta_t", "phi_t", "v_t", "theta_r", "phi_r", "v_r"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        if not (self.theta_t.shape == self.phi_t.shape == self.v_t.shape):
            raise ValueError("departure-side arrays must share one length")
        if not (self.theta_r.shape == self.phi_r.shape == self.v_r.shape):
            raise ValueError("arrival-side arrays must share one length")
        if np.any(self.v_t <= 0) or np.any(self.v_r <= 0):
            raise ValueError("scatterer distances must be positive")

    @property
    def n_tx_paths(self) -> int:
        return self.theta_t.size

    @property
    def n_rx_paths(self) -> int:
        return self.theta_r.size

    @property
    def tx_paths(self) -> list[tuple[float, float, float]]:
        """Departure paths as (theta, phi, distance) tuples."""
        return list(zip(self.theta_t.tolist(), self.phi_t.tolist(), self.v_t.tolist()))

    @property
    def rx_paths(self) -> list[tuple[float, float, float]]:
        return list(zip(self.theta_r.tolist(), self.phi_r.tolist(), self.v_r.tolist()))


@dataclass(frozen=True)
class PortSelection:
    """Activated port indices, 1-based and strictly increasing."""

    ports: tuple[int, ...]

    def __post_init__(self):
        ports = tuple(int(p) for p in self.ports)
        object.__setattr__(self, "ports", ports)
        if len(ports) == 0:
            raise ValueError("a port selection cannot be empty")
        if any(p < 1 for p in ports):
            raise ValueError("port indices are 1-based and must be >= 1")
        if any(b <= a for a, b in zip(ports, ports[1:])):
            raise ValueError("port indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.ports)

    def as_index(self) -> np.ndarray:
        """0-based index array into the port grid."""
        return np.asarray(self.ports, dtype=int) - 1

    def validate(self, cfg: SystemConfig, require_active_count: bool = True) -> None:
        if self.ports[-1] > cfg.m_ports:
            raise ValueError(
                f"port index {self.ports[-1]} exceeds the grid size {cfg.m_ports}"
            )
        if require_active_count and len(self.ports) != cfg.m_active:
            raise ValueError(
                f"selection has {len(self.ports)} ports, expected m_active={cfg.m_active}"
            )


@dataclass(frozen=True)
class PathResponse:
    """Random coupling gains between departure and arrival paths."""

    o: np.ndarray  # (v_rx_paths, v_tx_paths)

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.o))
        object.__setattr__(self, "o", arr)


@dataclass(frozen=True)
class TransmitCovariance:
    """Hermitian PSD transmit covariance with a trace power budget."""

    q: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.q, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("covariance must be a square matrix")
        object.__setattr__(self, "q", arr)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.q)))

    def validate(self, p_max: float | None = None) -> None:
        """Check Hermitian symmetry, positive semidefiniteness and, if given, the trace budget."""
        dev = float(np.max(np.abs(self.q - self.q.conj().T)))
        if dev > HERMITIAN_TOL:
            raise ValueError(f"covariance is not Hermitian (max deviation {dev:.3e})")
        w = np.linalg.eigvalsh(0.5 * (self.q + self.q.conj().T))
        if w[0] < -PSD_EIG_TOL:
            raise ValueError(f"covariance has negative eigenvalue {w[0]:.3e}")
        if p_max is not None and self.trace > p_max + TRACE_TOL:
            raise ValueError(
                f"covariance trace {self.trace:.6f} exceeds the budget {p_max:.6f}"
            )


class RateEstimate(NamedTuple):
    mean: float
    stderr: float


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def bs_antenna_y(n: int, cfg: SystemConfig) -> float:
    """Coordinate of transmit element ``n`` (1-based) on the array axis, in meters."""
    if not 1 <= n <= cfg.n_tx:
        raise IndexError(f"antenna index {n} outside 1..{cfg.n_tx}")
    return (2 * (n - 1) - cfg.n_tx + 1) / 2 * cfg.d_bs


def port_y(port: int, cfg: SystemConfig) -> float:
    """Coordinate of receive port ``port`` (1-based) on the fluid aperture, in meters."""
    if not 1 <= port <= cfg.m_ports:
        raise IndexError(f"port index {port} outside 1..{cfg.m_ports}")
    return (2 * (port - 1) - cfg.m_ports + 1) / 2 * cfg.d_u


def bs_antenna_positions(cfg: SystemConfig) -> np.ndarray:
    """All transmit element coordinates, centered on the array midpoint."""
    n = np.arange(1, cfg.n_tx + 1)
    return (2 * (n - 1) - cfg.n_tx + 1) / 2 * cfg.d_bs


def port_positions(cfg: SystemConfig) -> np.ndarray:
    """All candidate port coordinates, centered on the aperture midpoint."""
    m = np.arange(1, cfg.m_ports + 1)
    return (2 * (m - 1) - cfg.m_ports + 1) / 2 * cfg.d_u


def _path_diff(theta, v, y, mode: str):
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(v <= 0):
        raise ValueError("scatterer distance must be positive")
    s = np.sin(np.asarray(theta, dtype=float))
    if mode == "exact":
        return np.sqrt(v * v + y * y - 2.0 * v * y * s) - v
    if mode == "taylor":
        return -y * s - (y * y * s * s) / (2.0 * v)
    raise ValueError(f"unknown path-difference mode {mode!r}")


def path_diff_tx(theta_t, v_t, y, mode: str = "taylor"):
    """Departure-side path-length difference of a point at coordinate ``y``.

    ``exact`` evaluates the spherical-wavefront law
    sqrt(v^2 + y^2 - 2 v y sin(theta)) - v; ``taylor`` evaluates the quadratic
    small-aperture polynomial -y sin(theta) - y^2 sin^2(theta) / (2 v).  The
    two modes deliberately do not agree to second order in ``y``: ``taylor``
    is the model's defining convention and the default everywhere, ``exact``
    is the geometric reference kept for comparison.  Scalar or broadcastable
    array arguments are accepted.
    """
    return _path_diff(theta_t, v_t, y, mode)


def path_diff_rx(theta_r, v_r, y, mode: str = "taylor"):
    """Arrival-side path-length difference; same law as :func:`path_diff_tx`."""
    return _path_diff(theta_r, v_r, y, mode)


# ---------------------------------------------------------------------------
# Field matrices and channel
# ---------------------------------------------------------------------------

def _check_scenario(scenario: ScenarioSample, cfg: SystemConfig) -> None:
    if scenario.n_tx_paths != cfg.v_tx_paths or scenario.n_rx_paths != cfg.v_rx_paths:
        raise ValueError(
            f"scenario has {scenario.n_tx_paths}/{scenario.n_rx_paths} paths, "
            f"config expects {cfg.v_tx_paths}/{cfg.v_rx_paths}"
        )


def tx_field_matrix(scenario: ScenarioSample, cfg: SystemConfig) -> np.ndarray:
    """Unit-modulus transmit field response, one row per departure path.

    Entry (p, n) is exp(j 2 pi d_p(y_n) / wavelength) with d_p the taylor-mode
    path difference of element n on path p.  Shape (v_tx_paths, n_tx).
    """
    _check_scenario(scenario, cfg)
    y = bs_antenna_positions(cfg)[None, :]
    d = path_diff_tx(scenario.theta_t[:, None], scenario.v_t[:, None], y)
    return np.exp(1j * TWO_PI / cfg.wavelength * d)


def port_field_matrix(scenario: ScenarioSample, cfg: SystemConfig) -> np.ndarray:
    """Receive field response of every candidate port, shape (v_rx_paths, m_ports)."""
    _check_scenario(scenario, cfg)
    y = port_positions(cfg)[None, :]
    d = path_diff_rx(scenario.theta_r[:, None], scenario.v_r[:, None], y)
    return np.exp(1j * TWO_PI / cfg.wavelength * d)


def rx_field_matrix(r: PortSelection, scenario: ScenarioSample, cfg: SystemConfig) -> np.ndarray:
    """Receive field response restricted to the activated ports.

    Columns follow the selection order; shape (v_rx_paths, len(r)).
    """
    r.validate(cfg, require_active_count=False)
    return port_field_matrix(scenario, cfg)[:, r.as_index()]


def _sample_gain_batch(cfg: SystemConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n coupling matrices, shape (n, v_rx_paths, v_tx_paths)."""
    shape = (n, cfg.v_rx_paths, cfg.v_tx_paths)
    if cfg.complex_path_gains:
        scale = math.sqrt(cfg.path_gain_var / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return math.sqrt(cfg.path_gain_var) * rng.standard_normal(shape)


def sample_path_response(cfg: SystemConfig, rng: np.random.Generator) -> PathResponse:
    """Draw one random coupling matrix between departure and arrival paths.

    Entries are iid zero-mean with variance ``path_gain_var``; real Gaussian
    by default, circular complex when ``complex_path_gains`` is set.
    """
    return PathResponse(_sample_gain_batch(cfg, rng, 1)[0])


def channel(r: PortSelection, o, scenario: ScenarioSample, cfg: SystemConfig) -> np.ndarray:
    """End-to-end matrix coupling transmit elements to activated ports.

    Computes B^H O A with B the activated-port field response, O the path
    coupling gains and A the transmit field response.  Shape (len(r), n_tx).
    """
    om = o.o if isinstance(o, PathResponse) else np.atleast_2d(np.asarray(o))
    if om.shape != (cfg.v_rx_paths, cfg.v_tx_paths):
        raise ValueError(
            f"path response has shape {om.shape}, expected "
            f"({cfg.v_rx_paths}, {cfg.v_tx_paths})"
        )
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    return b.conj().T @ om @ a


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def _as_covariance_matrix(q) -> np.ndarray:
    return q.q if isinstance(q, TransmitCovariance) else np.asarray(q, dtype=complex)


def mc_rate(
    r: PortSelection,
    q,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    n_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> RateEstimate:
    """Monte-Carlo estimate of the achievable rate in bits/s/Hz.

    Averages log2 det(I + G Q G^H / noise_power) over random coupling-gain
    draws, where G is the end-to-end channel for the activated ports.
    Returns the sample mean and the standard error of that mean (zero when
    only one sample is requested).  Bitwise reproducible for a fixed rng
    seed.

    Parameters
    ----------
    q : TransmitCovariance or ndarray
        Transmit covariance; must be Hermitian PSD.
    n_samples : int, optional
        Number of gain draws; defaults to ``cfg.mc_samples``.
    rng : numpy Generator, optional
        Source of randomness; defaults to a fresh generator seeded with
        ``cfg.rng_seed``.
    """
    n = cfg.mc_samples if n_samples is None else int(n_samples)
    if n < 1:
        raise ValueError("n_samples must be at least 1")
    qm = _as_covariance_matrix(q)
    TransmitCovariance(qm).validate()
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    o = _sample_gain_batch(cfg, rng, n)
    g = np.einsum("mr,srt,tn->smn", b.conj().T, o, a)
    inner = np.einsum("smn,nk,slk->sml", g, qm, g.conj()) / cfg.noise_power
    m = np.eye(len(r))[None, :, :] + inner
    sign, logdet = np.linalg.slogdet(m)
    rates = logdet / LN2
    mean = float(np.mean(rates))
    stderr = float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RateEstimate(mean, stderr)


def rate_upper_bound(
    r: PortSelection,
    q,
    rho: float,
    scenario: ScenarioSample,
    cfg: SystemConfig,
) -> float:
    """Closed-form upper bound on the equivalent rate, in bits/s/Hz.

    Evaluates (1/rho) log2 det(I + gamma0 tr(A Q A^H) B^H B); by concavity
    of log det this dominates the Monte-Carlo mean of the equivalent rate
    for every covariance, selection and ratio.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    qm = _as_covariance_matrix(q)
    TransmitCovariance(qm).validate()
    a = tx_field_matrix(scenario, cfg)
    b = rx_field_matrix(r, scenario, cfg)
    t = float(np.real(np.einsum("pn,nk,pk->", a, qm, a.conj())))
    m = np.eye(len(r)) + cfg.gamma0 * t * (b.conj().T @ b)
    sign, logdet = np.linalg.slogdet(m)
    return logdet / LN2 / rho


# ---------------------------------------------------------------------------
# Scenario sampling
# ---------------------------------------------------------------------------

def draw_scenario(cfg: SystemConfig, rng: np.random.Generator) -> ScenarioSample:
    """Draw departure/arrival angles and scatterer distances for one trial.

    Elevations are uniform on [-pi/2, pi/2], azimuths uniform on [0, 2 pi),
    distances uniform on ``scatterer_dist_range``.  The draw order is fixed
    (departure theta/phi/v, then arrival theta/phi/v) so results are
    reproducible for a given generator state.
    """
    lo, hi = cfg.scatterer_dist_range
    theta_t = rng.uniform(-math.pi / 2, math.pi / 2, cfg.v_tx_paths)
    phi_t = rng.uniform(0.0, TWO_PI, cfg.v_tx_paths)
    v_t = rng.uniform(lo, hi, cfg.v_tx_paths)
    theta_r = rng.uniform(-math.pi / 2, math.pi / 2, cfg.v_rx_paths)
    phi_r = rng.uniform(0.0, TWO_PI, cfg.v_rx_paths)
    v_r = rng.uniform(lo, hi, cfg.v_rx_paths)
    return ScenarioSample(theta_t, phi_t, v_t, theta_r, phi_r, v_r)
