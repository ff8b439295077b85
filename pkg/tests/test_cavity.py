from __future__ import annotations

import math

import pytest
from hypothesis import assume, given, strategies as st

from emo_nmr.cavity import (FLAT, GaussianBeam, NoStableSolution, OptomechCoupling, beam_radius,
                            coupling_from_cooperativity, g_om_from_coupling, intracavity_photon_number,
                            optomech_cooperativity, optomech_coupling, rayleigh_range, solve_hemispherical_cavity,
                            waist_diameter_for_length, waist_radius, wavefront_radius)
from emo_nmr.units import HBAR, TAU

LAM, R = 780e-9, 75e-3


def test_flat_wavefront_at_waist():
    assert wavefront_radius(0.0, 1e-3) is FLAT
    assert not FLAT
    z0 = 1e-2
    assert wavefront_radius(z0, z0) == pytest.approx(2 * z0)


def test_beam_basics():
    w0 = 90e-6
    z0 = rayleigh_range(w0, LAM)
    assert waist_radius(z0, LAM) == pytest.approx(w0)
    assert beam_radius(z0, z0, LAM) == pytest.approx(w0 * math.sqrt(2))
    b = GaussianBeam(z=0.0, z0=z0, lam=LAM)
    assert b.q == pytest.approx(1j * z0)
    assert b.curvature_radius is FLAT
    assert (1 / b.q) == pytest.approx(b.inverse_q())


@given(st.floats(min_value=-0.2, max_value=0.2), st.floats(min_value=1e-3, max_value=0.1))
def test_inverse_q_matches_q(z, z0):
    assume(abs(z) > 1e-9)
    b = GaussianBeam(z=z, z0=z0, lam=LAM)
    assert (1 / b.q) == pytest.approx(b.inverse_q(), rel=1e-9)


def test_hemispherical_roots_and_vieta():
    lo, hi = solve_hemispherical_cavity(R, LAM, 180e-6)
    z0 = rayleigh_range(90e-6, LAM)
    assert lo < hi
    assert lo + hi == pytest.approx(R, rel=1e-12)
    assert lo * hi == pytest.approx(z0**2, rel=1e-12)
    # the wavefront at either length matches the mirror
    assert wavefront_radius(lo, z0) == pytest.approx(R, rel=1e-12)
    assert wavefront_radius(hi, z0) == pytest.approx(R, rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=74e-3))
def test_forward_and_inverse_design_agree(z):
    d = waist_diameter_for_length(z, R, LAM)
    roots = solve_hemispherical_cavity(R, LAM, d)
    assert min(abs(r - z) for r in roots) <= 1e-9 * R


def test_stability_errors():
    with pytest.raises(NoStableSolution, match="Rayleigh range"):
        solve_hemispherical_cavity(R, LAM, 5e-3)
    with pytest.raises(NoStableSolution):
        waist_diameter_for_length(80e-3, R, LAM)
    with pytest.raises(ValueError):
        solve_hemispherical_cavity(-R, LAM, 180e-6)


def test_photon_number_and_couplings(cfg):
    N = intracavity_photon_number(cfg.P_optical, cfg.Omega_D, cfg.kappa_o, cfg.kappa_oT)
    assert N == pytest.approx(cfg.P_optical / (HBAR * cfg.Omega_D) * 2 * cfg.kappa_o / cfg.kappa_oT**2)
    assert N == pytest.approx(5.3e4, rel=0.01)
    G = coupling_from_cooperativity(cfg.C_om, cfg.gamma_m, cfg.kappa_oT)
    assert optomech_cooperativity(G, cfg.gamma_m, cfg.kappa_oT) == pytest.approx(cfg.C_om)
    g = g_om_from_coupling(G, N)
    assert optomech_coupling(g, N) == pytest.approx(G)
    om = OptomechCoupling.from_config(cfg)
    assert om.G_om / TAU == pytest.approx(5.93e3, rel=0.01)
    assert om.C_om == cfg.C_om


def test_radiation_pressure_bound_scales_with_length(cfg):
    a = OptomechCoupling.radiation_pressure_bound(cfg)
    b = OptomechCoupling.radiation_pressure_bound(cfg, l=2 * cfg.cavity_length)
    assert b.g_om == pytest.approx(a.g_om / 2)
    # the measured coupling exceeds the radiation-pressure estimate
    assert OptomechCoupling.from_config(cfg).g_om > a.g_om
