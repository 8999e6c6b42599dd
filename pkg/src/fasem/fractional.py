"""Fractional-programming solver for the covariance / compression-ratio step.

For a fixed port selection the bound objective depends on the covariance Q
only through t = tr(A Q A^H), and t <= tr(Q) * lambda_max(A^H A) with
equality for the rank-one covariance built from the dominant eigenvector of
A^H A.  The matrix subproblem therefore collapses, per load segment, to a
one-dimensional concave maximization over the transmit power p = tr(Q), with
the compression ratio recovered from the leftover budget p_max - p.  The
ratio of rate to compression ratio is maximized with Dinkelbach iterations:
each round maximizes f(p) - tau * g(p) by golden-section search and updates
tau to the achieved ratio, which never decreases.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceWarning, InfeasibleSegmentError
from .model import SystemConfig, ScenarioSample, PortSelection, TransmitCovariance
from .model import tx_field_matrix, rx_field_matrix
from .semantic import LoadModel, rho_from_power, segment_trace_bounds

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# Absolute argument tolerance of the line search, relative to the budget.
LINESEARCH_TOL = 1e-9
MAX_DINKELBACH_ITER = 100


def golden_section_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal scalar function on the closed interval [lo, hi].

    Plain golden-section search down to an argument width ``tol``, followed
    by a three-way comparison against both endpoints so that maximizers
    sitting exactly on the interval boundary are returned exactly.  Returns
    (argmax, value).
    """
    if hi < lo:
        raise ValueError("empty search interval")
    f_lo = f(lo)
    if hi == lo:
        return lo, f_lo
    f_hi = f(hi)
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
    x = 0.5 * (a + b)
    fx = f(x)
    # Endpoint snap: boundary maximizers (e.g. tau = 0, where the surrogate
    # is increasing) must come out exact, not tol-close.
    if f_hi > fx:
        x, fx = hi, f_hi
    if f_lo > fx:
        x, fx = lo, f_lo
    return x, fx


@dataclass(frozen=True)
class InnerProblem:
    """Scalar form of the covariance subproblem on one load segment."""

    gamma0: float                        # path_gain_var / noise_power
    b_gram_eigs: np.ndarray              # eigenvalues of B^H B
    a_gram_top: tuple[float, np.ndarray]  # (lambda_max, unit eigenvector) of A^H A
    segment: int                         # 1-based load segment
    trace_interval: tuple[float, float]  # admissible transmit power range [mW]
    tau: float                           # current Dinkelbach multiplier

    def __post_init__(self):
        eigs = np.atleast_1d(np.asarray(self.b_gram_eigs, dtype=float))
        object.__setattr__(self, "b_gram_eigs", eigs)
        lam, vec = self.a_gram_top
        object.__setattr__(self, "a_gram_top", (float(lam), np.asarray(vec, dtype=complex)))
        if np.any(eigs < -1e-9):
            raise ValueError("receive Gram eigenvalues must be non-negative")
        if self.a_gram_top[0] < 0:
            raise ValueError("transmit Gram top eigenvalue must be non-negative")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")


@dataclass
class DinkelbachTrace:
    """Per-iteration history: (tau, surrogate value at its maximizer, transmit power)."""

    iterations: list[tuple[float, float, float]] = field(default_factory=list)
    converged: bool = True

    @property
    def taus(self) -> list[float]:
        return [it[0] for it in self.iterations]


@dataclass(frozen=True)
class QRhoSolution:
    """Joint covariance / compression-ratio solution for one port selection."""

    q: TransmitCovariance
    rho: float
    segment: int | None        # active load segment; None when compression is off
    upper_bound_rate: float    # equivalent-rate bound achieved [bits/s/Hz]
    trace: DinkelbachTrace

    @property
    def trace_q(self) -> float:
        return self.q.trace


def transmit_gram_top(a_matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """Dominant eigenpair (lambda_max, unit vector) of A^H A.

    Works in whichever Gram dimension is smaller, so tall and wide field
    matrices are equally cheap.
    """
    a = np.asarray(a_matrix, dtype=complex)
    n_paths, n_tx = a.shape
    if n_paths >= n_tx:
        w, vecs = np.linalg.eigh(a.conj().T @ a)
        lam, v = w[-1], vecs[:, -1]
    else:
        w, u = np.linalg.eigh(a @ a.conj().T)
        lam = w[-1]
        v = a.conj().T @ u[:, -1]
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise ValueError("transmit field matrix is zero")
        v = v / nrm
    return max(float(lam), 0.0), v


def reduce_inner(
    b_matrix: np.ndarray,
    a_matrix: np.ndarray,
    cfg: SystemConfig,
    model: LoadModel,
    s: int,
    tau: float,
) -> InnerProblem:
    """Collapse the covariance subproblem on segment ``s`` to scalar form.

    Precomputes the receive Gram eigenvalues, the dominant transmit Gram
    eigenpair and the admissible transmit-power interval for the segment.
    Raises :class:`InfeasibleSegmentError` when that interval is empty.
    """
    b = np.asarray(b_matrix, dtype=complex)
    mu = np.linalg.eigvalsh(b.conj().T @ b)
    top = transmit_gram_top(a_matrix)
    lo, hi = segment_trace_bounds(s, model, cfg.p_max, cfg.p0)
    if hi < lo:
        raise InfeasibleSegmentError(
            f"segment {s} is unaffordable: its cheapest load costs more than "
            f"the budget {cfg.p_max:g} mW leaves"
        )
    return InnerProblem(cfg.gamma0, mu, top, s, (lo, hi), tau)


def _rate_part(p: float, ip: InnerProblem) -> float:
    lam = ip.a_gram_top[0]
    mu = np.clip(ip.b_gram_eigs, 0.0, None)
    return float(np.sum(np.log2(1.0 + ip.gamma0 * p * lam * mu)))


def _ratio_part(p: float, segment: int, model: LoadModel, p0: float, p_max: float) -> float:
    return ((p_max - p) / p0 - model.intercepts[segment - 1]) / model.slopes[segment - 1]


def inner_objective(p: float, ip: InnerProblem, model: LoadModel, p0: float, p_max: float) -> float:
    """Dinkelbach surrogate f(p) - tau * g(p) at transmit power ``p``.

    f sums log2(1 + gamma0 * p * lambda_max * mu_i) over the receive Gram
    eigenvalues mu_i; g is the compression ratio implied by the leftover
    power p_max - p on the problem's segment.
    """
    lo, hi = ip.trace_interval
    slack = 1e-9 * max(1.0, abs(hi))
    if not lo - slack <= p <= hi + slack:
        raise ValueError(
            f"power {p:g} outside the admissible range [{lo:g}, {hi:g}]"
        )
    return _rate_part(p, ip) - ip.tau * _ratio_part(p, ip.segment, model, p0, p_max)


def solve_inner(ip: InnerProblem, model: LoadModel, p0: float, p_max: float) -> tuple[float, float]:
    """Maximize the surrogate over the segment's power interval.

    Golden-section search at absolute argument tolerance 1e-9 * p_max;
    returns (power, value) with boundary maximizers exact.
    """
    lo, hi = ip.trace_interval
    if hi < lo:
        raise InfeasibleSegmentError(f"segment {ip.segment} has an empty power interval")
    return golden_section_max(
        lambda p: inner_objective(p, ip, model, p0, p_max),
        lo,
        hi,
        LINESEARCH_TOL * p_max,
    )


def _rank_one(p: float, v: np.ndarray) -> TransmitCovariance:
    return TransmitCovariance(p * np.outer(v, v.conj()))


def dinkelbach(
    segment: int,
    b_matrix: np.ndarray,
    a_matrix: np.ndarray,
    cfg: SystemConfig,
    model: LoadModel,
) -> QRhoSolution:
    """Maximize rate / ratio on one load segment by Dinkelbach iterations.

    Starts from the ratio achieved at the interval midpoint, then alternates
    scalar maximization of f - tau * g with tau <- f/g until the surrogate
    optimum drops below ``cfg.eps1`` in magnitude.  The tau sequence is
    non-decreasing; hitting the iteration cap is reported on the returned
    trace and as a :class:`ConvergenceWarning`.
    """
    ip = reduce_inner(b_matrix, a_matrix, cfg, model, segment, 0.0)
    lo, hi = ip.trace_interval
    p = 0.5 * (lo + hi)
    g = _ratio_part(p, segment, model, cfg.p0, cfg.p_max)
    if g <= 0.0:
        raise ValueError(
            f"segment {segment} yields non-positive compression ratio {g:g}; "
            "check the load model against the budget"
        )
    tau = _rate_part(p, ip) / g
    trace = DinkelbachTrace()
    for _ in range(MAX_DINKELBACH_ITER):
        ip = dataclasses.replace(ip, tau=tau)
        p, value = solve_inner(ip, model, cfg.p0, cfg.p_max)
        trace.iterations.append((tau, value, p))
        f_p = _rate_part(p, ip)
        g_p = _ratio_part(p, segment, model, cfg.p0, cfg.p_max)
        if g_p <= 0.0:
            raise ValueError(
                f"segment {segment} yields non-positive compression ratio {g_p:g}"
            )
        tau = f_p / g_p
        if abs(value) <= cfg.eps1:
            break
    else:
        trace.converged = False
        warnings.warn(
            f"Dinkelbach hit the {MAX_DINKELBACH_ITER}-iteration cap on segment "
            f"{segment} (last surrogate value {value:g})",
            ConvergenceWarning,
        )
    rho = rho_from_power(cfg.p_max - p, segment, model, cfg.p0)
    lam, v = ip.a_gram_top
    return QRhoSolution(_rank_one(p, v), rho, segment, tau, trace)


def _no_compression_solution(
    b_matrix: np.ndarray, a_matrix: np.ndarray, cfg: SystemConfig
) -> QRhoSolution:
    """Boundary branch: compression off, whole budget transmitted, ratio 1."""
    b = np.asarray(b_matrix, dtype=complex)
    mu = np.clip(np.linalg.eigvalsh(b.conj().T @ b), 0.0, None)
    lam, v = transmit_gram_top(a_matrix)
    rate = float(np.sum(np.log2(1.0 + cfg.gamma0 * cfg.p_max * lam * mu)))
    trace = DinkelbachTrace(iterations=[(rate, 0.0, cfg.p_max)])
    return QRhoSolution(_rank_one(cfg.p_max, v), 1.0, None, rate, trace)


def solve_q_rho(
    r: PortSelection,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    model: LoadModel,
) -> QRhoSolution:
    """Best covariance / ratio pair for fixed ports, over all load segments.

    Evaluates the no-compression boundary branch and one Dinkelbach solve per
    affordable segment, returning the largest equivalent-rate bound.  Ties
    prefer no compression, then the lower-indexed segment.
    """
    r.validate(cfg)
    a = tx_field_matrix(scenario, cfg)
    b = rx_field_matrix(r, scenario, cfg)
    best = _no_compression_solution(b, a, cfg)
    for s in range(1, model.n_segments + 1):
        try:
            sol = dinkelbach(s, b, a, cfg, model)
        except InfeasibleSegmentError:
            continue
        if sol.upper_bound_rate > best.upper_bound_rate:
            best = sol
    return best
