from __future__ import annotations

import json
import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from hapsits.fso import (DEFAULT_ANCHORS, LIGHT_SPEED, PLANCK, AtmosphereModel, CalibrationError,
                         FsoTerminalParams, LinkFamily, RateAnchor, achievable_rate,
                         atmospheric_loss, calibrate, config_from_dict, config_to_dict,
                         geometric_loss, link_budget, link_rate, load_fso_config, rate_sweep,
                         received_power, save_fso_config, sweep_csv, sweep_distances)
from hapsits.geo import DomainError, slant_range

CLEAR = AtmosphereModel(0.43, 6.0)
VACUUM = AtmosphereModel(0.0, 6.0)


def terminal(**kw) -> FsoTerminalParams:
    base = dict(transmit_power_dbm=20.0, divergence_half_angle_rad=20e-6, tx_aperture_m=0.0,
                rx_aperture_m=0.2, tx_efficiency=1.0, rx_efficiency=1.0, wavelength_nm=1550.0,
                sensitivity_photons_per_bit=1000.0)
    base.update(kw)
    return FsoTerminalParams(**base)


def rate_oracle(p_w: float, wavelength_nm: float, nb: float) -> float:
    return p_w * wavelength_nm * 1e-9 / (6.62607015e-34 * 2.99792458e8 * nb)


# ------------------------------------------------------------ geometric

def test_geometric_full_capture_boundary():
    # D_rx = D_tx + 2 theta L at L = 10 km
    p = terminal(tx_aperture_m=0.1, rx_aperture_m=0.1 + 2 * 20e-6 * 10e3)
    assert geometric_loss(p, 10.0) == pytest.approx(0.0, abs=1e-12)
    assert geometric_loss(p, 1.0) == 0.0  # capture capped at 1


def test_geometric_closed_form():
    assert geometric_loss(terminal(), 100.0) == pytest.approx(-10 * math.log10((0.2 / 4.0) ** 2), rel=1e-12)
    assert geometric_loss(terminal(), 100.0) == pytest.approx(26.02, abs=0.005)


def test_geometric_inverse_square():
    p = terminal(tx_aperture_m=1e-6)
    assert geometric_loss(p, 400.0) - geometric_loss(p, 200.0) == pytest.approx(20 * math.log10(2), abs=1e-4)


def test_geometric_needs_positive_range():
    with pytest.raises(DomainError):
        geometric_loss(terminal(), 0.0)


# ---------------------------------------------------------- atmosphere

def test_horizontal_path_closed_form():
    loss = atmospheric_loss(CLEAR, slant_range(80, 0), 20.0)
    assert loss == pytest.approx(0.43 * math.exp(-20 / 6) * 80, rel=1e-12)
    assert loss == pytest.approx(1.23, abs=0.005)


def test_vertical_path_to_infinity():
    g = slant_range(0.0, math.inf)
    assert atmospheric_loss(CLEAR, g, 0.0) == 0.43 * 6.0


def test_zero_attenuation():
    assert atmospheric_loss(VACUUM, slant_range(30, 20)) == 0.0


def test_slant_formula_closed_form():
    g = slant_range(40, 20)
    want = 0.43 * 6 * (1 - math.exp(-20 / 6)) / math.sin(math.atan2(20, 40))
    assert atmospheric_loss(CLEAR, g) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("h0", [0.0, 5.0, 20.0])
def test_slant_converges_to_horizontal(h0):
    L = 80.0
    eps = 1e-4
    g = slant_range(L * math.cos(eps), L * math.sin(eps))
    horizontal = 0.43 * math.exp(-h0 / 6) * L
    assert atmospheric_loss(CLEAR, g, h0) == pytest.approx(horizontal, rel=1e-3)


def test_negative_base_altitude():
    with pytest.raises(DomainError):
        atmospheric_loss(CLEAR, slant_range(1, 1), -1.0)


# ------------------------------------------------------ received power

def test_lossless_received_equals_transmit():
    p = terminal(rx_aperture_m=10.0)
    assert received_power(p, slant_range(1.0, 0.0), VACUUM) == pytest.approx(20.0, abs=1e-12)


def test_received_power_arithmetic():
    p = terminal(rx_aperture_m=0.2)
    g = slant_range(100.0, 0.0)
    total = geometric_loss(p, 100.0) + atmospheric_loss(CLEAR, g, 5.0)
    assert received_power(p, g, CLEAR, 5.0) == pytest.approx(20.0 - total, abs=1e-12)
    q = terminal(tx_efficiency=0.5, rx_efficiency=0.8)
    expect = 20 + 10 * math.log10(0.5) + 10 * math.log10(0.8) - total
    assert received_power(q, g, CLEAR, 5.0) == pytest.approx(expect, abs=1e-12)


def test_plus_3db_shift():
    g = slant_range(50, 20)
    a = received_power(terminal(), g, CLEAR)
    b = received_power(terminal(transmit_power_dbm=23.0), g, CLEAR)
    assert b - a == pytest.approx(3.0, abs=1e-12)


# ------------------------------------------------------------- rate law

def test_rate_closed_form():
    r = achievable_rate(-30.0, 1550.0, 1000.0)  # 1 uW
    assert r == pytest.approx(rate_oracle(1e-6, 1550.0, 1000.0), rel=1e-12)
    assert r == pytest.approx(7.80e9, rel=1e-3)
    assert PLANCK == 6.62607015e-34 and LIGHT_SPEED == 2.99792458e8


def test_rate_zero_power():
    assert achievable_rate(-math.inf, 1550.0, 1000.0) == 0.0


def test_rate_doubles_with_power():
    a = achievable_rate(-20.0, 1550.0, 500.0)
    b = achievable_rate(-20.0 + 10 * math.log10(2), 1550.0, 500.0)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_rate_rejects_bad_sensitivity():
    with pytest.raises(DomainError):
        achievable_rate(0.0, 1550.0, 0.0)


def test_link_budget_fields():
    res = link_budget(terminal(), slant_range(40, 20), CLEAR)
    assert res.achievable_rate_bps == pytest.approx(
        rate_oracle(10 ** (res.received_power_dbm / 10) * 1e-3, 1550.0, 1000.0), rel=1e-12)
    assert res.received_power_dbm == pytest.approx(20 - res.geometric_loss_db - res.atmospheric_loss_db)


params_st = st.builds(
    terminal,
    transmit_power_dbm=st.floats(-10, 40),
    divergence_half_angle_rad=st.floats(1e-6, 1e-3),
    tx_aperture_m=st.floats(0, 0.3),
    rx_aperture_m=st.floats(0.01, 0.5),
    tx_efficiency=st.floats(0.1, 1),
    rx_efficiency=st.floats(0.1, 1),
    sensitivity_photons_per_bit=st.floats(1, 1e5),
)


@given(params_st, st.floats(0.01, 10))
def test_plus_10db_is_times_ten(p, watts_scale):
    fam = LinkFamily("h2g")
    a = link_rate(p, CLEAR, fam, 60.0)
    b = link_rate(p.with_power(p.transmit_power_dbm + 10.0), CLEAR, fam, 60.0)
    assert b == pytest.approx(10 * a, rel=1e-9)
    # linear in watts
    c = link_rate(p.with_power(p.transmit_power_dbm + 10 * math.log10(watts_scale)), CLEAR, fam, 60.0)
    assert c == pytest.approx(watts_scale * a, rel=1e-9)


# -------------------------------------------------------------- families

def test_h2g_slant_and_ground_modes_agree():
    g_slant, base = LinkFamily("h2g", 20.0, "slant").geometry(121.0)
    g_ground, _ = LinkFamily("h2g", 20.0, "ground").geometry(math.sqrt(121 ** 2 - 400))
    assert base == 0.0
    assert g_slant.slant_range == pytest.approx(121.0)
    assert g_ground.slant_range == pytest.approx(121.0)


def test_h2h_is_horizontal_at_altitude():
    g, base = LinkFamily("h2h", 20.0).geometry(80.0)
    assert base == 20.0 and g.altitude_difference == 0.0 and g.slant_range == 80.0


def test_h2g_slant_below_altitude_is_domain_error():
    with pytest.raises(DomainError):
        LinkFamily("h2g", 20.0).geometry(10.0)


def test_sweep_rows_and_order():
    rows = rate_sweep(terminal(), CLEAR, LinkFamily("h2g"), 20.0, 300.0, 7.0)
    assert len(rows) == math.floor((300 - 20) / 7) + 1
    rates = [r for _, r in rows]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert len(sweep_distances(1.0, 2.0, 0.1)) == 11
    assert sweep_distances(5.0, 5.0, 1.0) == [5.0]
    with pytest.raises(DomainError):
        sweep_distances(0.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        sweep_distances(2.0, 1.0, 0.1)


def test_sweep_csv():
    text = sweep_csv([(1.0, 2.5e9), (2.0, 1.0e9)])
    assert text == "distance_km,rate_bps\n1.0,2500000000.0\n2.0,1000000000.0\n"


# ---------------------------------------------------------------- config

def test_default_config_hits_anchors():
    cfg = load_fso_config()
    assert cfg.calibrated
    assert cfg.rate("h2g", "h2g", 121.0, 20.0) == pytest.approx(3.5e9, rel=1e-5)
    assert cfg.rate("h2h", "h2h", 80.0, 20.0) == pytest.approx(7.44e9, rel=1e-5)


def test_config_round_trip(tmp_path):
    cfg = load_fso_config()
    save_fso_config(cfg, tmp_path / "c.json")
    back = load_fso_config(tmp_path / "c.json")
    assert back == cfg
    assert config_to_dict(config_from_dict(config_to_dict(cfg))) == config_to_dict(cfg)


def test_unknown_profile_message():
    with pytest.raises(KeyError, match="no FSO terminal profile named 'x'"):
        load_fso_config().profile("x")


def test_param_validation():
    with pytest.raises(ValueError):
        terminal(rx_aperture_m=0.0)
    with pytest.raises(ValueError):
        terminal(tx_efficiency=1.5)
    with pytest.raises(ValueError):
        AtmosphereModel(-1.0, 6.0)


# ----------------------------------------------------------- calibration

def test_calibration_reproduces_golden(fixtures):
    raw = load_fso_config(fixtures / "fso_uncalibrated.json")
    assert not raw.calibrated
    fitted = calibrate(raw)
    golden = load_fso_config()
    for name in ("h2g", "h2h"):
        got = fitted.profile(name).sensitivity_photons_per_bit
        want = golden.profile(name).sensitivity_photons_per_bit
        assert got == pytest.approx(want, rel=1e-6)
        assert "fitted" in fitted.provenance[name]
    assert fitted.calibrated


def test_calibration_matches_closed_form(fixtures):
    # rate is proportional to 1/N_b, so the exact fit is N_b0 * R(N_b0) / target
    raw = load_fso_config(fixtures / "fso_uncalibrated.json")
    fitted = calibrate(raw)
    for a in DEFAULT_ANCHORS:
        nb0 = raw.profile(a.profile).sensitivity_photons_per_bit
        r0 = raw.rate(a.profile, a.kind, a.distance_km, a.power_dbm)
        exact = nb0 * r0 / a.rate_bps
        assert fitted.profile(a.profile).sensitivity_photons_per_bit == pytest.approx(exact, rel=1e-6)


def test_anchor_at_current_rate_is_fixed_point():
    cfg = load_fso_config()
    r = cfg.rate("h2g", "h2g", 60.0, 10.0)
    out = calibrate(cfg, [RateAnchor("h2g", "h2g", 60.0, 10.0, r)])
    assert out.profile("h2g").sensitivity_photons_per_bit == cfg.profile("h2g").sensitivity_photons_per_bit


def test_half_rate_doubles_sensitivity():
    cfg = load_fso_config()
    r = cfg.rate("h2g", "h2g", 60.0, 10.0)
    out = calibrate(cfg, [RateAnchor("h2g", "h2g", 60.0, 10.0, r / 2)])
    nb0 = cfg.profile("h2g").sensitivity_photons_per_bit
    assert out.profile("h2g").sensitivity_photons_per_bit == pytest.approx(2 * nb0, rel=1e-6)


def test_idempotent():
    once = calibrate(load_fso_config())
    twice = calibrate(once)
    for name in once.profiles:
        a = once.profile(name).sensitivity_photons_per_bit
        b = twice.profile(name).sensitivity_photons_per_bit
        assert abs(a / b - 1) <= 1e-6


def test_unreachable_anchor_names_parameter_and_bracket():
    cfg = load_fso_config()
    with pytest.raises(CalibrationError, match=r"h2g\.sensitivity_photons_per_bit.*\[1e-06, 1e\+12\]"):
        calibrate(cfg, [RateAnchor("h2g", "h2g", 121.0, 20.0, 1e40)])


def test_calibrate_leaves_input_untouched(fixtures):
    raw = load_fso_config(fixtures / "fso_uncalibrated.json")
    before = json.dumps(config_to_dict(raw), sort_keys=True)
    calibrate(raw)
    assert json.dumps(config_to_dict(raw), sort_keys=True) == before
    assert replace(raw.profile("h2g")).sensitivity_photons_per_bit == 1000.0
