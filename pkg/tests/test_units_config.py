from __future__ import annotations

import math
import pickle

import pytest
from hypothesis import given, strategies as st

from emo_nmr.config import (ConfigError, ExperimentConfig, canonical_config, canonical_text, load_config,
                            parse_quantity, prospective_config, read_config)
from emo_nmr.units import (HBAR, K_B, TAU, AngularFrequency, PowerLevel, dbm_to_watts, hz, kelvin_to_quanta,
                           photon_flux, quanta_to_kelvin, to_hz, watts_to_dbm, zero_point_fluctuation)


# ---------------------------------------------------------------- units

@given(st.floats(min_value=1e-6, max_value=1e15, allow_nan=False))
def test_hz_round_trip_is_exact(f):
    assert AngularFrequency.from_hz(f).hz == f


@given(st.floats(min_value=-150, max_value=60))
def test_dbm_round_trip(p):
    assert watts_to_dbm(dbm_to_watts(p)) == pytest.approx(p, abs=1e-12)


def test_dbm_reference_points():
    assert dbm_to_watts(0) == pytest.approx(1e-3)
    assert dbm_to_watts(15) == pytest.approx(31.6227766e-3)
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert PowerLevel.from_dbm(15).dbm == pytest.approx(15.0)


def test_invalid_quantities_rejected():
    with pytest.raises(ValueError):
        AngularFrequency(-1.0)
    with pytest.raises(ValueError):
        PowerLevel(0.0)
    with pytest.raises(ValueError):
        watts_to_dbm(-1e-3)
    with pytest.raises(ValueError):
        dbm_to_watts(float("nan"))


def test_angular_frequency_behaves_like_float():
    w = AngularFrequency.from_hz(180e3)
    assert float(w) == pytest.approx(TAU * 180e3)
    assert w / TAU == pytest.approx(180e3)
    assert pickle.loads(pickle.dumps(w)).hz == 180e3
    assert to_hz(hz(1234.5)) == pytest.approx(1234.5)


def test_quanta_kelvin_conversion():
    w = TAU * 38e6
    assert quanta_to_kelvin(1.0, w) == pytest.approx(HBAR * w / K_B)
    assert kelvin_to_quanta(quanta_to_kelvin(3.3e5, w), w) == pytest.approx(3.3e5)


def test_photon_flux_and_zpf():
    w = TAU * 38e6
    assert photon_flux(1.0, w) == pytest.approx(1.0 / (HBAR * w))
    m, w0 = 8.6e-11, TAU * 180e3
    assert zero_point_fluctuation(m, w0) == pytest.approx(math.sqrt(HBAR / (2 * m * w0)))


# ---------------------------------------------------------------- quantities

@pytest.mark.parametrize("text,kind,expected", [
    ("180 kHz", "frequency", TAU * 180e3),
    ("1.4 um", "length", 1.4e-6),
    ("15 dBm", "power", dbm_to_watts(15)),
    ("1.2 mW", "power", 1.2e-3),
    ("98 pF", "capacitance", 98e-12),
    ("0.52e-3", "dimensionless", 0.52e-3),
    ("320 us", "time", 320e-6),
    (" 300K ", "temperature", 300.0),
])
def test_parse_quantity(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected)


@pytest.mark.parametrize("text,kind,needle", [
    ("180 parsec", "frequency", "unknown unit"),
    ("1.4 um", "frequency", "not a frequency unit"),
    ("abc kHz", "frequency", "cannot parse"),
])
def test_parse_quantity_errors(text, kind, needle):
    with pytest.raises(ValueError, match=needle):
        parse_quantity(text, kind)


# ---------------------------------------------------------------- config

def test_canonical_config_values(cfg):
    assert cfg.omega_m.hz == 180e3
    assert cfg.kappa_iT / TAU == pytest.approx(1.6e6)
    assert cfg.kappa_oT / TAU == pytest.approx(1.1e9)
    assert cfg.Delta_i == 0.0 and cfg.Delta_o == pytest.approx(cfg.kappa_oT / 2)
    assert cfg.omega_D == pytest.approx(cfg.omega_LC + cfg.omega_m)
    assert cfg.Omega_c == pytest.approx(TAU * 299792458.0 / 780e-9)
    assert cfg.P_drive == pytest.approx(dbm_to_watts(15))
    assert cfg.T_eff == 205.0


def test_overrides_apply_before_validation():
    c = canonical_config(["d0 = 100 nm", "P_drive=30 dBm"])
    assert c.d0 == pytest.approx(100e-9)
    assert c.P_drive == pytest.approx(1.0)


def test_missing_t_eff_defaults(tmp_path):
    text = canonical_text().replace("T_eff = 205 K", "")
    assert load_config(text).T_eff == 205.0


@pytest.mark.parametrize("mutate,needle", [
    (lambda t: t.replace("d0 = 1.4 um", "d0 = -1.4 um"), r"capacitor\.d0: must be > 0"),
    (lambda t: t.replace("d0 = 1.4 um", "d0 = 1.4 kHz"), r"d0: unit 'kHz' is not a length unit"),
    (lambda t: t.replace("eta_cap = 0.52e-3", "eta_cap = 1.5"), r"eta_cap: must lie in \(0, 1\)"),
    (lambda t: t.replace("m_eff = 8.6e-11 kg\n", ""), r"missing required field\(s\): m_eff"),
    (lambda t: t + "\nd0 = 2 um\n", r"d0: duplicate key \(first set on line \d+\)"),
    (lambda t: t + "\nbogus = 1\n", r"bogus: unknown field"),
    (lambda t: t + "\nnot a pair\n", r"expected 'key = value'"),
])
def test_config_errors_name_the_field(mutate, needle):
    with pytest.raises(ConfigError, match=needle):
        load_config(mutate(canonical_text()), source="test.cfg")


def test_config_error_carries_line_number():
    text = canonical_text().replace("d0 = 1.4 um", "d0 = 0 um")
    lineno = next(i for i, l in enumerate(text.splitlines(), 1) if l.startswith("d0"))
    with pytest.raises(ConfigError, match=rf"test.cfg:{lineno}: capacitor.d0"):
        load_config(text, source="test.cfg")


def test_bad_override_reported():
    with pytest.raises(ConfigError, match="override: capacitor.d0"):
        canonical_config(["d0 = nope"])
    with pytest.raises(ConfigError, match="expected key=value"):
        canonical_config(["d0"])


def test_read_config_file(tmp_path):
    p = tmp_path / "x.cfg"
    p.write_text(canonical_text())
    assert read_config(p) == canonical_config()


def test_document_round_trip(cfg):
    text = "\n".join(f"{k} = {v}" for k, v in cfg.to_document().items())
    again = load_config(text)
    for f in ("omega_m", "d0", "P_drive", "C_om", "T2_star", "Omega_D"):
        assert getattr(again, f) == pytest.approx(getattr(cfg, f), rel=1e-14)


def test_config_is_immutable(cfg):
    with pytest.raises(Exception):
        cfg.d0 = 1.0
    with pytest.raises(ConfigError):
        cfg.replace(gamma_m=0.0)


def test_prospective_config(cfg):
    p = prospective_config(cfg)
    assert p.d0 == pytest.approx(100e-9)
    assert p.P_drive == pytest.approx(1.0)
    assert p.T_eff == cfg.T_bath and p.eta_p == 0.0
    assert p.eta_cap > cfg.eta_cap
    s = prospective_config(cfg, eta_mode="scaled")
    assert s.eta_cap == pytest.approx(cfg.eta_cap * 14)
    assert isinstance(cfg, ExperimentConfig)
