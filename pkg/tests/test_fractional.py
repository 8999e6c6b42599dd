"""Scalar line search, ratio iterations and the covariance/ratio solver."""

import math
import warnings

import numpy as np
import pytest

from fasem.errors import ConvergenceWarning, InfeasibleSegmentError
from fasem.fractional import (
    InnerProblem,
    dinkelbach,
    golden_section_max,
    inner_objective,
    reduce_inner,
    solve_inner,
    solve_q_rho,
    transmit_gram_top,
)
from fasem.model import (
    PortSelection,
    SystemConfig,
    draw_scenario,
    rx_field_matrix,
    tx_field_matrix,
)
from fasem.semantic import LoadModel, compression_power

TAU_SLACK = 1e-9


def scalar_cfg(**overrides):
    """Single antenna/port/path setup where every matrix is a unit scalar."""
    base = dict(
        n_tx=1, m_ports=2, m_active=1, v_tx_paths=1, v_rx_paths=1,
        path_gain_var=1.0, noise_power=1.0,
    )
    base.update(overrides)
    return SystemConfig(**base)


# ---------------------------------------------------------------------------
# golden-section search
# ---------------------------------------------------------------------------

def test_golden_section_finds_interior_peak():
    x, val = golden_section_max(lambda x: -(x - 2.0) ** 2, 0.0, 5.0, 1e-9)
    assert x == pytest.approx(2.0, abs=1e-6)
    assert val == pytest.approx(0.0, abs=1e-12)


def test_golden_section_snaps_to_endpoints():
    x, val = golden_section_max(lambda x: x, 0.0, 1.0, 1e-9)
    assert (x, val) == (1.0, 1.0)
    x, val = golden_section_max(lambda x: -x, 0.0, 1.0, 1e-9)
    assert (x, val) == (0.0, 0.0)


def test_golden_section_degenerate_interval():
    x, val = golden_section_max(lambda x: x * x, 3.0, 3.0, 1e-9)
    assert (x, val) == (3.0, 9.0)


def test_golden_section_tolerance_controls_argument():
    x_coarse, _ = golden_section_max(lambda x: -(x - 1.0) ** 2, 0.0, 4.0, 1e-2)
    x_fine, _ = golden_section_max(lambda x: -(x - 1.0) ** 2, 0.0, 4.0, 1e-10)
    assert abs(x_fine - 1.0) <= abs(x_coarse - 1.0) + 1e-12
    assert abs(x_fine - 1.0) < 1e-8


# ---------------------------------------------------------------------------
# problem reduction
# ---------------------------------------------------------------------------

def test_transmit_gram_top_matches_dense_eigensolver():
    rng = np.random.default_rng(21)
    a = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    lam, v = transmit_gram_top(a)
    gram = a.conj().T @ a
    assert lam == pytest.approx(np.linalg.eigvalsh(gram)[-1], rel=1e-10)
    np.testing.assert_allclose(gram @ v, lam * v, atol=1e-8)
    assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)


def test_all_ones_steering_gram(model):
    # Zero elevations make every field response 1, so the Gram is rank one
    # with eigenvalue v_tx_paths * n_tx and a uniform eigenvector.
    cfg = SystemConfig(n_tx=6, v_tx_paths=3)
    a = np.ones((3, 6), dtype=complex)
    lam, v = transmit_gram_top(a)
    assert lam == pytest.approx(18.0, rel=1e-12)
    np.testing.assert_allclose(np.abs(v), 1.0 / math.sqrt(6.0), atol=1e-10)
    ip = reduce_inner(np.ones((3, 1)), a, cfg, model, 1, 0.0)
    assert ip.b_gram_eigs[-1] == pytest.approx(3.0)  # single port -> mu = v_rx_paths


def test_reduce_inner_interval_and_infeasibility(cfg, scenario, model):
    r = PortSelection((1, 9, 17, 26, 34))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    ip = reduce_inner(b, a, cfg, model, 1, 0.7)
    lo, hi = ip.trace_interval
    assert hi == pytest.approx(cfg.p_max)
    assert lo == pytest.approx(cfg.p_max - 0.15)
    assert ip.tau == 0.7
    assert len(ip.b_gram_eigs) == cfg.m_active
    # A model whose no-compression load already exceeds the budget leaves no
    # affordable power on the segment.
    costly = LoadModel((-0.5,), (0.6,), (0.5,))
    tiny = SystemConfig(p_max=0.05)
    with pytest.raises(InfeasibleSegmentError):
        reduce_inner(b, a, tiny, costly, 1, 0.0)


def test_inner_objective_zero_power_case(model):
    ip = InnerProblem(1.0, np.array([2.0]), (3.0, np.array([1.0])), 1, (0.0, 1.0), 1.7)
    got = inner_objective(0.0, ip, model, 1.0, 0.65)
    want = -1.7 * ((0.65 - 0.0) / 1.0 - 0.5) / -0.5
    assert got == pytest.approx(want, rel=1e-12)


def test_inner_objective_matches_term_recomputation(cfg, scenario, model):
    r = PortSelection((2, 8, 14, 25, 33))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    ip = reduce_inner(b, a, cfg, model, 2, 1.3)
    lo, hi = ip.trace_interval
    p = 0.5 * (lo + hi)
    lam = ip.a_gram_top[0]
    f = sum(math.log2(1 + cfg.gamma0 * p * lam * mu) for mu in ip.b_gram_eigs if mu > 0)
    g = ((cfg.p_max - p) / cfg.p0 - model.intercepts[1]) / model.slopes[1]
    assert inner_objective(p, ip, model, cfg.p0, cfg.p_max) == pytest.approx(f - 1.3 * g, rel=1e-12)
    with pytest.raises(ValueError):
        inner_objective(hi + 1.0, ip, model, cfg.p0, cfg.p_max)


def test_solve_inner_zero_tau_takes_right_endpoint(cfg, scenario, model):
    r = PortSelection((1, 9, 17, 26, 34))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    ip = reduce_inner(b, a, cfg, model, 1, 0.0)
    p, value = solve_inner(ip, model, cfg.p0, cfg.p_max)
    assert p == ip.trace_interval[1]  # f alone is increasing in power
    assert value == pytest.approx(inner_objective(p, ip, model, cfg.p0, cfg.p_max))


def test_solve_inner_beats_power_grid(cfg, scenario, model):
    r = PortSelection((2, 8, 14, 25, 33))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    for s, tau in ((1, 0.0), (2, 5.0), (3, 60.0)):
        ip = reduce_inner(b, a, cfg, model, s, tau)
        lo, hi = ip.trace_interval
        _, value = solve_inner(ip, model, cfg.p0, cfg.p_max)
        grid = np.linspace(lo, hi, 4000)
        grid_best = max(inner_objective(float(p), ip, model, cfg.p0, cfg.p_max) for p in grid)
        assert value >= grid_best - 1e-9
        assert value <= grid_best + 1e-4


# ---------------------------------------------------------------------------
# ratio iterations
# ---------------------------------------------------------------------------

def test_dinkelbach_trace_properties(cfg, scenario, model):
    r = PortSelection((2, 8, 14, 25, 33))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    sol = dinkelbach(3, b, a, cfg, model)
    taus = sol.trace.taus
    assert sol.trace.converged
    assert len(taus) <= 100
    assert all(t2 >= t1 - TAU_SLACK for t1, t2 in zip(taus, taus[1:]))
    assert abs(sol.trace.iterations[-1][1]) <= cfg.eps1
    assert sol.segment == 3
    assert 0.2 <= sol.rho <= 0.4
    # rank-one covariance with the entire affordable power on it
    eigs = np.linalg.eigvalsh(sol.q.q)
    assert eigs[-1] == pytest.approx(sol.trace_q, rel=1e-9)
    assert abs(eigs[-2]) < 1e-9
    balance = sol.trace_q + compression_power(sol.rho, model, cfg.p0)
    assert balance == pytest.approx(cfg.p_max, abs=1e-6)


def test_dinkelbach_degenerate_ratio_one_segment():
    # A single segment pinned to ratio 1 makes the denominator constant, so
    # the solver must put the whole budget into transmission.
    cfg = scalar_cfg(p_max=3.0)
    pinned = LoadModel((-0.5,), (0.5,), (1.0,))
    scenario = draw_scenario(cfg, np.random.default_rng(0))
    b = rx_field_matrix(PortSelection((1,)), scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    sol = dinkelbach(1, b, a, cfg, pinned)
    assert sol.rho == pytest.approx(1.0)
    assert sol.trace_q == pytest.approx(3.0)
    assert sol.upper_bound_rate == pytest.approx(math.log2(1.0 + 3.0), rel=1e-9)


def test_dinkelbach_matches_ratio_grid():
    # Unit scalars collapse the rate to log2(1 + p), so the best ratio
    # f/g over segment 2 can be brute-forced on a fine power grid.
    cfg = scalar_cfg(p_max=1.0)
    model = LoadModel.default()
    scenario = draw_scenario(cfg, np.random.default_rng(1))
    b = rx_field_matrix(PortSelection((1,)), scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    sol = dinkelbach(2, b, a, cfg, model)
    p = np.linspace(0.55, 0.85, 100_000)
    tau_grid = np.max(np.log2(1.0 + p) / (p - 0.15))
    assert sol.upper_bound_rate == pytest.approx(float(tau_grid), abs=1e-5)


def test_dinkelbach_warns_at_iteration_cap(cfg, scenario, model, monkeypatch):
    import fasem.fractional as frac

    monkeypatch.setattr(frac, "MAX_DINKELBACH_ITER", 1)
    r = PortSelection((2, 8, 14, 25, 33))
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    with pytest.warns(ConvergenceWarning):
        sol = dinkelbach(3, b, a, cfg, model)
    assert not sol.trace.converged


# ---------------------------------------------------------------------------
# full covariance/ratio solve
# ---------------------------------------------------------------------------

def test_solve_q_rho_default_instance(cfg, scenario, model):
    r = PortSelection((2, 8, 14, 25, 33))
    with warnings.catch_warnings():
        warnings.simplefilter("error")  # any cap hit would be a regression
        sol = solve_q_rho(r, scenario, cfg, model)
    assert 0 < sol.rho <= 1.0
    sol.q.validate(p_max=cfg.p_max)
    balance = sol.trace_q + compression_power(sol.rho, model, cfg.p0)
    assert balance == pytest.approx(cfg.p_max, abs=1e-6)
    # compressing is an enlargement of the feasible set, never a loss
    boundary = solve_q_rho(r, scenario, cfg, LoadModel((-0.5,), (0.5,), (1.0,)))
    assert sol.upper_bound_rate >= boundary.upper_bound_rate - 1e-9


def test_solve_q_rho_falls_back_to_no_compression():
    # Every segment of this model costs more than the budget, leaving the
    # zero-compression boundary as the only feasible branch.
    cfg = scalar_cfg(p_max=0.05)
    costly = LoadModel((-0.5,), (0.6,), (0.5,))
    scenario = draw_scenario(cfg, np.random.default_rng(2))
    sol = solve_q_rho(PortSelection((1,)), scenario, cfg, costly)
    assert sol.rho == 1.0
    assert sol.segment is None
    assert sol.trace_q == pytest.approx(cfg.p_max)
    assert sol.upper_bound_rate == pytest.approx(math.log2(1.0 + 0.05), rel=1e-9)


def test_solve_q_rho_single_segment_picks_better_branch():
    cfg = scalar_cfg(p_max=4.0)
    one = LoadModel((-1.0,), (1.0,), (0.5,))
    scenario = draw_scenario(cfg, np.random.default_rng(3))
    r = PortSelection((1,))
    sol = solve_q_rho(r, scenario, cfg, one)
    seg = dinkelbach(1, rx_field_matrix(r, scenario, cfg), tx_field_matrix(scenario, cfg), cfg, one)
    boundary_rate = math.log2(1.0 + 4.0)
    assert sol.upper_bound_rate == pytest.approx(
        max(seg.upper_bound_rate, boundary_rate), rel=1e-9
    )


def test_solve_q_rho_validates_selection(cfg, scenario, model):
    with pytest.raises(ValueError):
        solve_q_rho(PortSelection((1, 2, 3)), scenario, cfg, model)


def test_rank_one_never_beaten_by_random_covariances(cfg, scenario, model):
    # The bound depends on Q only through tr(A Q A^H); the aligned rank-one
    # construction maximizes it among all PSD matrices of equal trace.
    r = PortSelection((1, 9, 17, 26, 34))
    a = tx_field_matrix(scenario, cfg)
    lam, v = transmit_gram_top(a)
    p = 0.4 * cfg.p_max
    best = p * lam
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = rng.standard_normal((cfg.n_tx, cfg.n_tx)) + 1j * rng.standard_normal(
            (cfg.n_tx, cfg.n_tx)
        )
        q = x @ x.conj().T
        q *= p / np.real(np.trace(q))
        t = float(np.real(np.einsum("pn,nk,pk->", a, q, a.conj())))
        assert t <= best + 1e-9
