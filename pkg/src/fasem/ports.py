"""Coordinate-ascent port selection and its brute-force reference.

For a fixed covariance the bound objective is
(1/rho) log2 det(I + gamma * B B^H) with gamma = gamma0 * tr(A Q A^H) and B
the activated-port field columns.  Swapping one port changes the log-det by
log2(1 + gamma * b^H (I + gamma * Bbar Bbar^H)^{-1} b), where Bbar holds the
retained columns, so an exact single-coordinate update just scores that
quadratic form over all candidate ports.  A pass scores each coordinate in
turn; repeating passes to a fixed point is a monotone ascent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    LN2,
    PortSelection,
    ScenarioSample,
    SystemConfig,
    port_field_matrix,
    tx_field_matrix,
)

MAX_PASSES = 50
MAX_EXHAUSTIVE_SUBSETS = 10 ** 6


@dataclass(frozen=True)
class PortScoreContext:
    """Precomputed state for scoring candidate replacements of one coordinate."""

    gamma: float               # gamma0 * tr(A Q A^H), dimensionless
    b_bar: np.ndarray          # retained port columns, (v_rx_paths, k)
    inverse_core: np.ndarray   # (I + gamma * b_bar b_bar^H)^{-1}
    retained: tuple[int, ...]  # retained 1-based port indices

    def __post_init__(self):
        object.__setattr__(self, "b_bar", np.atleast_2d(np.asarray(self.b_bar, dtype=complex)))
        object.__setattr__(self, "inverse_core", np.asarray(self.inverse_core, dtype=complex))
        object.__setattr__(self, "retained", tuple(int(p) for p in self.retained))
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


def selection_gamma(q, scenario: ScenarioSample, cfg: SystemConfig) -> float:
    """Effective selection gain gamma0 * tr(A Q A^H) for a covariance."""
    qm = q.q if hasattr(q, "q") else np.asarray(q, dtype=complex)
    a = tx_field_matrix(scenario, cfg)
    t = float(np.real(np.einsum("pn,nk,pk->", a, qm, a.conj())))
    return cfg.gamma0 * t


def _inverse_core(b_bar: np.ndarray, gamma: float, n_paths: int) -> np.ndarray:
    core = np.eye(n_paths) + gamma * (b_bar @ b_bar.conj().T)
    inv = np.linalg.inv(core)
    # Symmetrize round-off so the context's Hermitian contract holds exactly.
    return 0.5 * (inv + inv.conj().T)


def port_score_context(
    r: PortSelection,
    coord: int,
    gamma: float,
    scenario: ScenarioSample,
    cfg: SystemConfig,
) -> PortScoreContext:
    """Context for rescoring coordinate ``coord`` (0-based) of selection ``r``."""
    if not 0 <= coord < len(r):
        raise IndexError(f"coordinate {coord} outside the selection of size {len(r)}")
    retained = tuple(p for i, p in enumerate(r.ports) if i != coord)
    b_all = port_field_matrix(scenario, cfg)
    b_bar = b_all[:, [p - 1 for p in retained]]
    return PortScoreContext(
        gamma, b_bar, _inverse_core(b_bar, gamma, cfg.v_rx_paths), retained
    )


def per_port_score(
    candidate: int,
    ctx: PortScoreContext,
    scenario: ScenarioSample,
    cfg: SystemConfig,
) -> float:
    """Replacement score b^H (I + gamma Bbar Bbar^H)^{-1} b of one candidate port.

    The log-det objective gains exactly log2(1 + gamma * score) when the
    scored coordinate is set to ``candidate``, so larger scores are better.
    Scoring a retained port is a collision and raises.
    """
    if candidate in ctx.retained:
        raise ValueError(f"candidate port {candidate} collides with a retained port")
    b = port_field_matrix(scenario, cfg)[:, candidate - 1]
    return float(np.real(b.conj() @ ctx.inverse_core @ b))


def selection_rate(gamma: float, b_cols: np.ndarray, rho: float = 1.0) -> float:
    """Equivalent-rate bound (1/rho) log2 det(I + gamma * B B^H) for given columns."""
    b = np.atleast_2d(np.asarray(b_cols, dtype=complex))
    m = np.eye(b.shape[0]) + gamma * (b @ b.conj().T)
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet) / LN2 / rho


def coordinate_pass(
    r: PortSelection,
    q,
    rho: float,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    *,
    b_all: np.ndarray | None = None,
    gamma: float | None = None,
) -> PortSelection:
    """One sweep of exact single-port replacements over all coordinates.

    Each coordinate is set to the candidate maximizing the replacement score,
    with ties keeping the incumbent and then preferring the smallest index;
    the objective never decreases.  Returns the (sorted) updated selection.
    ``b_all`` and ``gamma`` may be passed to reuse precomputed state.
    """
    r.validate(cfg, require_active_count=False)
    if b_all is None:
        b_all = port_field_matrix(scenario, cfg)
    if gamma is None:
        gamma = selection_gamma(q, scenario, cfg)
    current = list(r.ports)
    n_paths = cfg.v_rx_paths
    for m in range(len(current)):
        others = [p for i, p in enumerate(current) if i != m]
        b_bar = b_all[:, [p - 1 for p in others]]
        inv = _inverse_core(b_bar, gamma, n_paths)
        scores = np.real(np.einsum("pm,pq,qm->m", b_all.conj(), inv, b_all))
        for p in others:
            scores[p - 1] = -np.inf
        incumbent = current[m]
        best = int(np.argmax(scores)) + 1  # argmax takes the smallest index on ties
        if scores[best - 1] > scores[incumbent - 1]:
            current[m] = best
    return PortSelection(tuple(sorted(current)))


def _best_rigid_shift(
    r: PortSelection,
    value: float,
    gamma: float,
    b_all: np.ndarray,
    rho: float,
    cfg: SystemConfig,
) -> tuple[PortSelection, float] | None:
    """Best strictly-improving translation of the whole selection, if any.

    Scores every shift that keeps all ports inside ``1..m_ports``.  Returns
    ``None`` when no translation beats ``value``.
    """
    best = None
    best_value = value
    for shift in range(1 - r.ports[0], cfg.m_ports - r.ports[-1] + 1):
        if shift == 0:
            continue
        idx = [p - 1 + shift for p in r.ports]
        v = selection_rate(gamma, b_all[:, idx], rho)
        if v > best_value:
            best = PortSelection(tuple(p + shift for p in r.ports))
            best_value = v
    if best is None:
        return None
    return best, best_value


def optimize_ports(
    r: PortSelection,
    q,
    rho: float,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    *,
    b_all: np.ndarray | None = None,
    gamma: float | None = None,
) -> PortSelection:
    """Coordinate passes to a fixed point, with rigid-shift restarts.

    Passes repeat until the selection stops changing, a pass improves the
    bound objective by less than ``cfg.eps2``, or ``MAX_PASSES`` passes run.
    One-port swaps cannot slide a whole selection along the aperture, yet the
    phase profiles are close to linear in port position, so a fixed point
    often has a strictly better translate.  After each fixed point the best
    rigid shift of the full selection is taken (when one improves) and the
    passes restart from there.  Every restart strictly increases the
    objective, so the outer loop terminates.
    """
    if b_all is None:
        b_all = port_field_matrix(scenario, cfg)
    if gamma is None:
        gamma = selection_gamma(q, scenario, cfg)

    def ascend(sel: PortSelection, val: float) -> tuple[PortSelection, float]:
        for _ in range(MAX_PASSES):
            new = coordinate_pass(sel, q, rho, scenario, cfg, b_all=b_all, gamma=gamma)
            if new.ports == sel.ports:
                break
            new_val = selection_rate(gamma, b_all[:, new.as_index()], rho)
            gain = new_val - val
            sel, val = new, new_val
            if gain < cfg.eps2:
                break
        return sel, val

    value = selection_rate(gamma, b_all[:, r.as_index()], rho)
    r, value = ascend(r, value)
    for _ in range(MAX_PASSES):
        shifted = _best_rigid_shift(r, value, gamma, b_all, rho, cfg)
        if shifted is None:
            break
        r, value = ascend(*shifted)
    return r


def exhaustive_best(
    q,
    rho: float,
    scenario: ScenarioSample,
    cfg: SystemConfig,
    *,
    max_subsets: int = MAX_EXHAUSTIVE_SUBSETS,
) -> tuple[PortSelection, float]:
    """Brute-force best selection of ``m_active`` ports and its bound objective.

    Enumerates every subset in lexicographic order (ties keep the first, i.e.
    lexicographically smallest, maximizer).  Refuses instances with more than
    ``max_subsets`` subsets.
    """
    n_subsets = math.comb(cfg.m_ports, cfg.m_active)
    if n_subsets > max_subsets:
        raise ValueError(
            f"enumeration would visit {n_subsets} subsets, above the cap {max_subsets}"
        )
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    b_all = port_field_matrix(scenario, cfg)
    gamma = selection_gamma(q, scenario, cfg)
    best_combo = None
    best_value = -np.inf
    for combo in itertools.combinations(range(1, cfg.m_ports + 1), cfg.m_active):
        value = selection_rate(gamma, b_all[:, [p - 1 for p in combo]], rho)
        if value > best_value:
            best_combo, best_value = combo, value
    return PortSelection(best_combo), float(best_value)
