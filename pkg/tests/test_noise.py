from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from emo_nmr.cavity import OptomechCoupling
from emo_nmr.config import ConfigError, canonical_config, prospective_config
from emo_nmr.dynamics import InputAmplitudes, frequency_grid, output_quadratures
from emo_nmr.electromech import ElectromechCoupling, electromech_cooperativity
from emo_nmr.io import parse_csv
from emo_nmr.noise import (CONVENTIONAL_AMPLIFIER_T_N, NoiseInputs, PowerSpectrum, average_shots,
                           echo_bandwidth_factor, eta_p, mechanical_weight, noise_budget, phase_noise_lorentzian,
                           sideband_spectrum, snr, thermal_occupation)
from emo_nmr.units import HBAR, K_B, TAU, photon_flux


def oracle_spectrum(w, cfg, noise):
    """Single-sided density ``2 kappa_o N_D sum_k (|X_k|^2 + |Y_k|^2) S_k`` from the response solver."""
    pre = cfg.kappa_o * OptomechCoupling.from_config(cfg).N_D
    p_D = photon_flux(cfg.P_drive, cfg.omega_D)
    dens = {"f_in": noise.S_FF, "q_in": noise.S_qq, "Q_in": noise.S_qq, "X_in": noise.S_XX, "Y_in": noise.S_YY}
    out = {}
    for ch, S in dens.items():
        X, Y = output_quadratures(w, InputAmplitudes.unit(ch), cfg, back_action=False)
        out[ch] = 2 * pre * (np.abs(X) ** 2 + np.abs(Y) ** 2) * S
    X, Y = output_quadratures(w, InputAmplitudes.unit("Q_in"), cfg, back_action=False)
    out["phase"] = 2 * pre * (np.abs(X) ** 2 + np.abs(Y) ** 2) * noise.L_at(w) * p_D
    return out


@pytest.fixture(scope="module")
def grid():
    cfg = canonical_config()
    return frequency_grid(cfg.omega_m, cfg.gamma_m, 2001)


def test_spectrum_matches_response_oracle(cfg, grid):
    noise = NoiseInputs.from_config(cfg)
    spec = sideband_spectrum(grid, cfg, noise=noise, shift=False)
    ref = oracle_spectrum(grid, cfg, noise)
    c = spec.components
    assert np.allclose(c["brownian"], ref["f_in"], rtol=1e-10, atol=0)
    assert np.allclose(c["johnson"], ref["q_in"] + ref["Q_in"], rtol=1e-10, atol=0)
    assert np.allclose(c["shot"], ref["X_in"] + ref["Y_in"], rtol=1e-10, atol=0)
    assert np.allclose(c["phase"], ref["phase"], rtol=1e-10, atol=0)
    assert not c["lines"].any()


def test_back_action_is_negligible(cfg, grid):
    noise = NoiseInputs.from_config(cfg)
    pre = cfg.kappa_o * OptomechCoupling.from_config(cfg).N_D
    total = 0.0
    for ch, S in (("X_in", noise.S_XX), ("Y_in", noise.S_YY)):
        X, Y = output_quadratures(grid, InputAmplitudes.unit(ch), cfg)
        total = total + 2 * pre * (np.abs(X) ** 2 + np.abs(Y) ** 2) * S
    shot = sideband_spectrum(grid, cfg, noise=noise, shift=False).components["shot"]
    assert np.allclose(total, shot, rtol=1e-4)


def test_signal_line_area(cfg, grid):
    """A line of strength S^2 integrates to twice the detected signal power, as does the noise density."""
    S = 2.0
    spec = sideband_spectrum(grid, cfg, noise=NoiseInputs.zero(), S=S, shift=False)
    X, Y = output_quadratures(cfg.omega_m, InputAmplitudes(S=S), cfg, back_action=False)
    N_D = OptomechCoupling.from_config(cfg).N_D
    O2 = cfg.kappa_o * N_D * (abs(X) ** 2 + abs(Y) ** 2)
    assert spec.area(names=["lines"]) == pytest.approx(2 * O2, rel=1e-12)
    assert spec.peak_frequency() == pytest.approx(cfg.omega_m, abs=grid[1] - grid[0])


def test_brownian_area_analytic(cfg, grid):
    noise = NoiseInputs.from_config(cfg)
    spec = sideband_spectrum(grid, cfg, noise=noise, shift=False)
    chain = cfg.kappa_o * OptomechCoupling.from_config(cfg).N_D * cfg.C_om * cfg.kappa_o / cfg.kappa_oT
    half = grid[-1] - cfg.omega_m
    lorentz = (2 / math.pi) * math.atan(2 * half / cfg.gamma_m)
    expected = 8 * chain * noise.S_FF * cfg.gamma_m / 4 * lorentz
    assert spec.area(names=["brownian"]) == pytest.approx(expected, rel=2e-3)


def test_spectrum_referred_to_input_matches_budget(cfg, grid):
    """On resonance, density divided by signal gain per quantum gives the budget entries."""
    noise = NoiseInputs.from_config(cfg)
    spec = sideband_spectrum(grid, cfg, noise=noise, shift=False)
    k = int(np.argmin(np.abs(grid - cfg.omega_m)))
    chain = cfg.kappa_o * OptomechCoupling.from_config(cfg).N_D * cfg.C_om * cfg.kappa_o / cfg.kappa_oT
    em = ElectromechCoupling.from_config(cfg)
    C = electromech_cooperativity(em.G_em, cfg.gamma_m, cfg.kappa_iT, grid[k])
    gain = 4 * chain * C * mechanical_weight(grid[k], cfg.omega_m, cfg.gamma_m) * cfg.kappa_i / cfg.kappa_iT
    b = noise_budget(cfg, C_em=C)
    r_o = cfg.kappa_o / cfg.kappa_oT
    assert spec.components["brownian"][k] / gain == pytest.approx(b.brownian, rel=1e-6)
    assert spec.components["johnson"][k] / gain == pytest.approx(b.johnson, rel=1e-12)
    assert spec.components["shot"][k] / gain == pytest.approx(b.shot * (r_o**2 + (1 - r_o) ** 2), rel=1e-6)


def test_tone_line_position_and_shift(cfg, grid):
    tone = {"P_T": 3e-10, "Delta_T": TAU * 500.0}
    spec = sideband_spectrum(grid, cfg, noise=NoiseInputs.zero(), tone=tone)
    assert spec.center < cfg.omega_m
    k = int(np.argmax(spec.components["lines"]))
    assert grid[k] == pytest.approx(spec.center + tone["Delta_T"], abs=grid[1] - grid[0])


def test_spectrum_grid_validation(cfg):
    w = frequency_grid(cfg.omega_m, cfg.gamma_m, 64)
    with pytest.raises(ValueError, match="uniform"):
        sideband_spectrum(np.concatenate([w[:10], w[11:]]), cfg)
    with pytest.raises(ValueError, match="inside"):
        sideband_spectrum(np.array([-1.0, 1.0]), cfg)


def test_power_spectrum_csv(cfg):
    w = frequency_grid(cfg.omega_m, cfg.gamma_m, 32)
    spec = sideband_spectrum(w, cfg)
    rows, _ = parse_csv(spec.to_csv(), "spectrum")
    arr = np.array(rows)
    assert np.allclose(arr[:, 1], spec.total, rtol=1e-15)
    assert not arr[:, 2].any()
    assert isinstance(spec, PowerSpectrum)


# ---------------------------------------------------------------- lineshapes

def test_phase_noise_lorentzian_area():
    for d in (1.0, 31.0, TAU * 31.0):
        area, _ = integrate.quad(lambda x: phase_noise_lorentzian(x, d), -np.inf, np.inf, epsrel=1e-10)
        assert area / TAU == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(ValueError):
        phase_noise_lorentzian(0.0, 0.0)


def test_eta_p_constant_limit_and_bound(cfg):
    g, wm = cfg.gamma_m, cfg.omega_m
    L0 = 1.0

    def flat(x):
        return np.full_like(np.asarray(x, dtype=float), L0)

    wide = eta_p(1.0, wm, g, 1.99 * wm, lineshape=flat)
    assert wide == pytest.approx(L0 * g / 4, rel=1e-3)
    for n in (10, 50, 200):
        part = eta_p(1.0, wm, g, n * g, lineshape=flat)
        # Lorentzian truncated to +-n/2 linewidths
        expected = L0 * g / 4 * (2 / math.pi) * math.atan(n)
        assert part == pytest.approx(expected, rel=1e-4)
    with pytest.raises(ValueError):
        eta_p(1.0, wm, g, 3 * wm)


def test_eta_p_from_config_linewidth(cfg):
    val = eta_p(cfg.delta_P, cfg.omega_m, cfg.gamma_m, 200 * cfg.gamma_m)
    approx = phase_noise_lorentzian(cfg.omega_m, cfg.delta_P) * cfg.gamma_m / 4
    assert val == pytest.approx(approx, rel=0.02)


@given(st.floats(min_value=1e3, max_value=1e8), st.floats(min_value=1, max_value=1e3))
def test_thermal_occupation(w, T):
    assert thermal_occupation(w, T) == pytest.approx(K_B * T / (HBAR * w))


# ---------------------------------------------------------------- budget

def test_budget_formulas(cfg):
    b = noise_budget(cfg)
    em = ElectromechCoupling.from_config(cfg)
    inv_r = cfg.kappa_iT / cfg.kappa_i
    r_o = cfg.kappa_o / cfg.kappa_oT
    n_m = K_B * cfg.T_eff / (HBAR * cfg.omega_m)
    n_lc = K_B * cfg.T_bath / (HBAR * cfg.omega_LC)
    assert b.shot == pytest.approx(inv_r / (2 * cfg.C_om * r_o * em.C_em_resonant))
    assert b.brownian == pytest.approx(2 * inv_r * n_m / em.C_em_resonant)
    assert b.johnson == pytest.approx(inv_r * n_lc)
    assert b.phase == pytest.approx(cfg.eta_p * cfg.P_drive / (HBAR * cfg.omega_D * cfg.gamma_m))
    assert b.total == pytest.approx(b.shot + b.brownian + b.johnson + b.phase)
    assert b.kelvin()["johnson"] == pytest.approx(cfg.T_bath * inv_r)


def test_budget_table_and_dict(cfg):
    b = noise_budget(cfg, label="current")
    text = b.table()
    assert text.startswith("current\n")
    assert "Shot noise" in text and "Effective temperature [K]" in text
    d = b.to_dict()
    assert set(d["quanta"]) == {"shot", "brownian", "johnson", "phase", "total"}


def test_overcoupling_lowers_noise(cfg):
    a, b = noise_budget(cfg), noise_budget(cfg, overcoupled=True)
    assert b.johnson == pytest.approx(a.johnson * cfg.kappa_i / cfg.kappa_iT)
    assert b.total < a.total


def test_prospective_beats_conventional_amplifier_only_at_room_temperature(cfg):
    p = noise_budget(prospective_config(cfg), overcoupled=True)
    assert p.kelvin()["total"] > CONVENTIONAL_AMPLIFIER_T_N


# ---------------------------------------------------------------- SNR

def test_echo_snr(cfg):
    r = snr(cfg, "echo")
    assert r.snr_single_shot == pytest.approx(math.sqrt(3.6e8 / noise_budget(cfg).total))
    assert r.snr_averaged(5000) == pytest.approx(r.snr_single_shot * math.sqrt(5000))
    assert echo_bandwidth_factor(cfg) == pytest.approx((160e-6) * (cfg.gamma_m * 160e-6))


def test_snr_variants_ordering(cfg):
    vals = {v: snr(cfg, v).snr_single_shot for v in ("narrowband", "with_phase_noise", "overcoupled")}
    assert vals["with_phase_noise"] < vals["narrowband"] < vals["overcoupled"]
    b = noise_budget(cfg)
    flux = 3.6e8 / echo_bandwidth_factor(cfg)
    assert vals["narrowband"] == pytest.approx(math.sqrt(flux / cfg.gamma_m / (b.shot + b.brownian + b.johnson)))


def test_snr_bandwidth_and_flux(cfg):
    a = snr(cfg, "narrowband", signal_flux=1e12)
    b = snr(cfg, "narrowband", signal_flux=1e12, bandwidth=4 * cfg.gamma_m)
    assert b.snr_single_shot == pytest.approx(a.snr_single_shot / 2)


def test_snr_errors(cfg):
    with pytest.raises(ValueError, match="unknown SNR variant"):
        snr(cfg, "loud")
    with pytest.raises(ConfigError, match="T2_star"):
        snr(cfg.replace(T2_star=None), "echo")
    with pytest.raises(ValueError):
        average_shots(1.0, 0)


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=1, max_value=10**6))
def test_averaging_is_sqrt_n(N):
    assert average_shots(0.5, N) == pytest.approx(0.5 * math.sqrt(N))
