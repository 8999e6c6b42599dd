"""Geometry, field responses, channel sampling and rate estimators."""

import math

import numpy as np
import pytest

from fasem.errors import ConfigError
from fasem.model import (
    PortSelection,
    ScenarioSample,
    SystemConfig,
    TransmitCovariance,
    bs_antenna_positions,
    bs_antenna_y,
    channel,
    draw_scenario,
    mc_rate,
    path_diff_rx,
    path_diff_tx,
    port_field_matrix,
    port_positions,
    port_y,
    rate_upper_bound,
    rx_field_matrix,
    sample_path_response,
    tx_field_matrix,
)


# ---------------------------------------------------------------------------
# array geometry
# ---------------------------------------------------------------------------

def test_antenna_grid_symmetric_and_uniform(cfg):
    ys = bs_antenna_positions(cfg)
    assert ys.shape == (cfg.n_tx,)
    assert ys[0] == pytest.approx(-0.019)
    assert ys[-1] == pytest.approx(0.019)
    np.testing.assert_allclose(np.diff(ys), cfg.d_bs)
    np.testing.assert_allclose(ys, -ys[::-1])


def test_port_grid_centered(cfg):
    ys = port_positions(cfg)
    assert ys.shape == (cfg.m_ports,)
    assert ys[0] == pytest.approx(-0.034)
    assert ys[-1] == pytest.approx(0.034)
    assert port_y(18, cfg) == pytest.approx(0.0)  # odd count -> exact center port
    assert bs_antenna_y(1, cfg) == pytest.approx(ys[0] + cfg.d_u * 7.5)  # shared center


def test_position_indices_are_one_based(cfg):
    with pytest.raises(IndexError):
        bs_antenna_y(0, cfg)
    with pytest.raises(IndexError):
        bs_antenna_y(cfg.n_tx + 1, cfg)
    with pytest.raises(IndexError):
        port_y(0, cfg)
    with pytest.raises(IndexError):
        port_y(cfg.m_ports + 1, cfg)


# ---------------------------------------------------------------------------
# path difference
# ---------------------------------------------------------------------------

def test_path_diff_taylor_matches_hand_formula():
    theta, v, y = 0.3, 0.4, 0.01
    want = -y * math.sin(theta) - y ** 2 * math.sin(theta) ** 2 / (2 * v)
    assert path_diff_tx(theta, v, y, mode="taylor") == pytest.approx(want, abs=1e-15)
    assert path_diff_rx(theta, v, y, mode="taylor") == pytest.approx(want, abs=1e-15)


def test_path_diff_exact_is_spherical_law():
    theta, v, y = -0.8, 0.25, 0.015
    want = math.sqrt(v * v - 2 * v * y * math.sin(theta) + y * y) - v
    assert path_diff_rx(theta, v, y, mode="exact") == pytest.approx(want, abs=1e-15)


def test_path_diff_modes_agree_far_away():
    # The modes share the linear term; their quadratic terms differ, so the
    # gap decays like y^2 / v and needs a large distance to vanish.
    def gap(v):
        return path_diff_rx(0.7, v, 0.034, mode="taylor") - path_diff_rx(
            0.7, v, 0.034, mode="exact"
        )

    assert abs(gap(1e6)) < 1e-9
    assert gap(100.0) / gap(1000.0) == pytest.approx(10.0, rel=0.02)


def test_path_diff_taylor_exact_gap_frozen():
    # Largest-aperture antenna at a half-meter scatterer, 45 degrees.
    gap = path_diff_rx(math.pi / 4, 0.5, 0.019, mode="taylor") - path_diff_rx(
        math.pi / 4, 0.5, 0.019, mode="exact"
    )
    assert gap == pytest.approx(-0.00036594862403321014, abs=1e-18)


def test_path_diff_zero_at_array_center():
    assert path_diff_tx(1.1, 0.3, 0.0) == 0.0
    assert path_diff_tx(1.1, 0.3, 0.0, mode="exact") == pytest.approx(0.0, abs=1e-15)


def test_path_diff_rejects_unknown_mode():
    with pytest.raises(ValueError):
        path_diff_tx(0.1, 0.5, 0.01, mode="cubic")


# ---------------------------------------------------------------------------
# field response matrices
# ---------------------------------------------------------------------------

def test_field_matrices_unit_modulus(cfg, scenario):
    a = tx_field_matrix(scenario, cfg)
    b = port_field_matrix(scenario, cfg)
    assert a.shape == (cfg.v_tx_paths, cfg.n_tx)
    assert b.shape == (cfg.v_rx_paths, cfg.m_ports)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(b), 1.0, atol=1e-12)


def test_field_matrix_entries_from_path_diff(cfg, scenario):
    a = tx_field_matrix(scenario, cfg)
    k, n = 1, 7
    d = path_diff_tx(scenario.theta_t[k], scenario.v_t[k], bs_antenna_y(n + 1, cfg))
    assert a[k, n] == pytest.approx(np.exp(2j * np.pi * d / cfg.wavelength), abs=1e-12)


def test_rx_field_matrix_selects_port_columns(cfg, scenario):
    r = PortSelection((3, 9, 20, 21, 35))
    full = port_field_matrix(scenario, cfg)
    np.testing.assert_array_equal(rx_field_matrix(r, scenario, cfg), full[:, r.as_index()])


def test_field_matrix_rejects_mismatched_scenario(cfg):
    other = draw_scenario(SystemConfig(v_tx_paths=2, v_rx_paths=2), np.random.default_rng(0))
    with pytest.raises(ValueError):
        tx_field_matrix(other, cfg)


# ---------------------------------------------------------------------------
# gain sampling
# ---------------------------------------------------------------------------

def test_real_gain_statistics(cfg):
    rng = np.random.default_rng(99)
    draws = np.stack([sample_path_response(cfg, rng).o for _ in range(20000)])
    assert np.all(np.isreal(draws))
    assert np.var(draws) == pytest.approx(cfg.path_gain_var, rel=0.05)
    assert abs(np.mean(draws)) < 0.01


def test_complex_gain_statistics():
    cfg = SystemConfig(complex_path_gains=True)
    rng = np.random.default_rng(99)
    draws = np.stack([sample_path_response(cfg, rng).o for _ in range(20000)])
    assert np.iscomplexobj(draws)
    # Circularly symmetric: variance split evenly between parts.
    assert np.var(draws.real) == pytest.approx(cfg.path_gain_var / 2, rel=0.05)
    assert np.var(draws.imag) == pytest.approx(cfg.path_gain_var / 2, rel=0.05)


# ---------------------------------------------------------------------------
# channel and rates
# ---------------------------------------------------------------------------

def test_channel_matches_explicit_loops(cfg, scenario):
    r = PortSelection((1, 5, 12, 22, 30))
    rng = np.random.default_rng(3)
    o = sample_path_response(cfg, rng).o
    g = channel(r, o, scenario, cfg)
    b = rx_field_matrix(r, scenario, cfg)
    a = tx_field_matrix(scenario, cfg)
    want = np.zeros((len(r), cfg.n_tx), dtype=complex)
    for m in range(len(r)):
        for n in range(cfg.n_tx):
            for i in range(cfg.v_rx_paths):
                for j in range(cfg.v_tx_paths):
                    want[m, n] += np.conj(b[i, m]) * o[i, j] * a[j, n]
    np.testing.assert_allclose(g, want, atol=1e-12)


def test_mc_rate_zero_covariance_is_zero(cfg, scenario):
    r = PortSelection((1, 2, 3, 4, 5))
    est = mc_rate(r, np.zeros((cfg.n_tx, cfg.n_tx)), scenario, cfg, n_samples=16)
    assert est.mean == 0.0
    assert est.stderr == 0.0


def test_mc_rate_reproducible_and_positive(cfg, scenario):
    r = PortSelection((2, 8, 14, 25, 33))
    q = np.eye(cfg.n_tx) * (cfg.p_max / cfg.n_tx)
    one = mc_rate(r, q, scenario, cfg, n_samples=64)
    two = mc_rate(r, q, scenario, cfg, n_samples=64)
    assert one == two  # default rng reseeds from cfg.rng_seed
    assert one.mean > 0.0
    assert one.stderr > 0.0


def test_mc_rate_single_sample_has_no_stderr(cfg, scenario):
    r = PortSelection((1, 9, 17, 26, 34))
    q = np.eye(cfg.n_tx) * (cfg.p_max / cfg.n_tx)
    est = mc_rate(r, q, scenario, cfg, n_samples=1)
    assert est.stderr == 0.0
    with pytest.raises(ValueError):
        mc_rate(r, q, scenario, cfg, n_samples=0)


def test_mc_rate_vanishes_under_huge_noise(scenario, cfg):
    noisy = SystemConfig(noise_power=1e12)
    r = PortSelection((1, 9, 17, 26, 34))
    q = np.eye(noisy.n_tx) * (noisy.p_max / noisy.n_tx)
    est = mc_rate(r, q, scenario, noisy, n_samples=32)
    assert est.mean < 1e-6


def test_mc_rate_matches_quadrature_in_scalar_case():
    # One antenna, one port, one path on each side: the per-sample rate is
    # log2(1 + p * o^2 / noise) with o ~ N(0, path_gain_var), so the mean has
    # a one-dimensional integral form to check against.
    from scipy import integrate

    cfg = SystemConfig(n_tx=1, m_ports=1, m_active=1, v_tx_paths=1, v_rx_paths=1)
    scenario = draw_scenario(cfg, np.random.default_rng(17))
    r = PortSelection((1,))
    q = np.array([[cfg.p_max]])
    est = mc_rate(r, q, scenario, cfg, n_samples=200_000, rng=np.random.default_rng(1))

    sig = math.sqrt(cfg.path_gain_var)
    c = cfg.p_max / cfg.noise_power

    def integrand(x):
        return np.log2(1 + c * x * x) * np.exp(-x * x / (2 * sig * sig)) / (
            sig * math.sqrt(2 * math.pi)
        )

    want, err = integrate.quad(integrand, -np.inf, np.inf)
    assert err < 1e-8
    assert est.mean == pytest.approx(want, abs=4 * est.stderr)


def test_rate_upper_bound_scalar_formula():
    cfg = SystemConfig(n_tx=1, m_ports=3, m_active=1, v_tx_paths=1, v_rx_paths=1)
    scenario = draw_scenario(cfg, np.random.default_rng(4))
    r = PortSelection((2,))
    p = 0.6 * cfg.p_max
    q = np.array([[p]])
    # Unit-modulus scalars collapse tr(A Q A^H) to p and B^H B to 1.
    want = math.log2(1 + cfg.gamma0 * p)
    assert rate_upper_bound(r, q, 1.0, scenario, cfg) == pytest.approx(want, rel=1e-12)
    assert rate_upper_bound(r, q, 0.5, scenario, cfg) == pytest.approx(2 * want, rel=1e-12)


def test_rate_upper_bound_rejects_bad_ratio(cfg, scenario):
    r = PortSelection((1, 2, 3, 4, 5))
    q = np.eye(cfg.n_tx)
    for rho in (0.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            rate_upper_bound(r, q, rho, scenario, cfg)


def test_rate_upper_bound_dominates_monte_carlo(cfg, scenario):
    r = PortSelection((2, 8, 14, 25, 33))
    q = np.eye(cfg.n_tx) * (cfg.p_max / cfg.n_tx)
    bound = rate_upper_bound(r, q, 1.0, scenario, cfg)
    est = mc_rate(r, q, scenario, cfg, n_samples=2000, rng=np.random.default_rng(8))
    assert est.mean <= bound + 3 * est.stderr


# ---------------------------------------------------------------------------
# value-object validation
# ---------------------------------------------------------------------------

def test_port_selection_validation(cfg):
    with pytest.raises(ValueError):
        PortSelection(())
    with pytest.raises(ValueError):
        PortSelection((0, 3))
    with pytest.raises(ValueError):
        PortSelection((4, 4))
    with pytest.raises(ValueError):
        PortSelection((5, 3))
    r = PortSelection((1, 2, 3, 4, 36))
    with pytest.raises(ValueError):
        r.validate(cfg)
    with pytest.raises(ValueError):
        PortSelection((1, 2, 3)).validate(cfg)
    PortSelection((1, 2, 3)).validate(cfg, require_active_count=False)
    np.testing.assert_array_equal(PortSelection((3, 7)).as_index(), [2, 6])


def test_scenario_sample_validation():
    with pytest.raises(ValueError):
        ScenarioSample([0.1, 0.2], [0.0, 0.0], [0.5], [0.1], [0.0], [0.5])
    with pytest.raises(ValueError):
        ScenarioSample([0.1], [0.0], [0.0], [0.1], [0.0], [0.5])
    s = ScenarioSample(0.1, 0.2, 0.5, -0.3, 1.0, 0.7)  # scalars become arrays
    assert s.n_tx_paths == 1 and s.n_rx_paths == 1
    assert s.rx_paths == [(-0.3, 1.0, 0.7)]


def test_transmit_covariance_validation(cfg):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    good = TransmitCovariance(x @ x.conj().T)
    good.validate()
    good.validate(p_max=good.trace + 1.0)
    with pytest.raises(ValueError):
        good.validate(p_max=good.trace / 2)
    with pytest.raises(ValueError):
        TransmitCovariance(x).validate()  # not Hermitian
    neg = np.diag([1.0, -0.5, 2.0, 0.1]).astype(complex)
    with pytest.raises(ValueError):
        TransmitCovariance(neg).validate()


def test_system_config_validation():
    assert SystemConfig().snr_db == pytest.approx(15.0)
    boosted = SystemConfig().with_snr_db(9.0)
    assert boosted.snr_db == pytest.approx(9.0)
    for bad in (
        dict(n_tx=0),
        dict(m_ports=0),
        dict(m_active=0),
        dict(m_active=36),
        dict(wavelength=0.0),
        dict(v_rx_paths=0),
        dict(noise_power=0.0),
        dict(p_max=-1.0),
        dict(p0=0.0),
        dict(eps1=0.0),
        dict(mc_samples=0),
        dict(rng_seed=-1),
        dict(scatterer_dist_range=(1.0, 0.1)),
    ):
        with pytest.raises(ConfigError):
            SystemConfig(**bad)


def test_draw_scenario_reproducible(cfg):
    one = draw_scenario(cfg, np.random.default_rng(7))
    two = draw_scenario(cfg, np.random.default_rng(7))
    np.testing.assert_array_equal(one.theta_t, two.theta_t)
    np.testing.assert_array_equal(one.v_r, two.v_r)
    lo, hi = cfg.scatterer_dist_range
    assert np.all((one.v_t >= lo) & (one.v_t <= hi))
    assert np.all(np.abs(one.theta_r) <= np.pi / 2)
