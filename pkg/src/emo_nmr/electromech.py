"""Membrane-capacitor electromechanics.

The membrane electrode faces two fixed pads, so the mechanical capacitance is
two parallel-plate capacitors in series.  Everything here is a pure function of
its arguments; the dataclasses only bundle results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .units import EPSILON_0, HBAR, zero_point_fluctuation

# closest allowed electrode approach before we call it a collision
MIN_GAP = 10e-9


class ElectrodeCollision(ValueError):
    """Displacement brings the membrane within ``MIN_GAP`` of the electrodes."""


def membrane_capacitance(A: float, d: float, Z: float = 0.0) -> float:
    """Series capacitance ``eps0 A / (2 (d + Z))`` of the split-electrode gap."""
    gap = d + Z
    if gap <= MIN_GAP:
        raise ElectrodeCollision(f"gap d + Z = {gap:.3e} m is below {MIN_GAP:.0e} m")
    return EPSILON_0 * A / (2.0 * gap)


def total_capacitance(A, d0, C_t, C_p) -> float:
    return C_t + C_p + membrane_capacitance(A, d0)


def eta_from_geometry(A, d0, C_t, C_p) -> float:
    """Capacitance ratio ``C_m / (C_t + C_p + C_m)`` at the equilibrium gap."""
    c_m = membrane_capacitance(A, d0)
    return c_m / (C_t + C_p + c_m)


def rescale_eta(eta, d_old, d_new, A, C_t, C_p, mode: str = "geometry") -> float:
    """Carry a (possibly measured) capacitance ratio over to a new gap.

    ``"geometry"`` scales the measured value by how the parallel-plate model
    changes, so the shift in ``C_0`` from the bigger ``C_m`` is included.
    ``"scaled"`` keeps ``C_0`` fixed, giving ``eta * d_old / d_new`` and hence
    a cooperativity that scales exactly as ``1/d0**4``.
    """
    if mode == "scaled":
        return eta * d_old / d_new
    if mode == "geometry":
        return eta * eta_from_geometry(A, d_new, C_t, C_p) / eta_from_geometry(A, d_old, C_t, C_p)
    raise ValueError(f"unknown eta rescaling mode {mode!r}")


def drive_frequency_shift(P_D, R, m, omega0, A, d0) -> float:
    """Electrostatic spring softening ``-(R P_D / 4 m omega0) eps0 A / d0**3`` (rad/s)."""
    return -(R * P_D / (4.0 * m * omega0)) * EPSILON_0 * A / d0**3


def g_em_single_photon(omega_LC, z_zpf, d0, eta_cap) -> float:
    return omega_LC * z_zpf / (2.0 * d0) * eta_cap


def lc_photon_number(P_D, omega_LC, kappa_iT) -> float:
    """Intra-resonator photon number for a resonant drive of power ``P_D``."""
    return P_D / (HBAR * omega_LC * kappa_iT)


def electromech_coupling(g_em, P_D, omega_LC, kappa_iT) -> float:
    """Drive-enhanced coupling ``G_em = g_em sqrt(n_LC) / 2``."""
    return 0.5 * g_em * math.sqrt(lc_photon_number(P_D, omega_LC, kappa_iT))


def electromech_cooperativity(G_em, gamma_m, kappa_iT, omega):
    """Frequency-dependent cooperativity; Lorentzian in ``omega`` of full width ``kappa_iT``.

    Works elementwise on numpy arrays of ``omega``.
    """
    peak = 4.0 * G_em**2 / (gamma_m * kappa_iT)
    return peak * kappa_iT**2 / (4.0 * omega**2 + kappa_iT**2)


def scale_cooperativity(C_em, d_old, d_new, P_old, P_new) -> float:
    """Carry a cooperativity to a new gap and drive power: ``C * (d_old/d_new)**4 * P_new/P_old``."""
    return C_em * (d_old / d_new) ** 4 * (P_new / P_old)


@dataclass(frozen=True)
class MembraneCapacitor:
    area: float
    gap_nominal: float
    gap_equilibrium: float
    eta_cap: float
    C_total: float

    def __post_init__(self):
        if self.gap_nominal <= 0 or self.gap_equilibrium <= 0:
            raise ValueError("gaps must be positive")

    @classmethod
    def from_geometry(cls, A, d0, C_t, C_p) -> "MembraneCapacitor":
        return cls(A, d0, d0, eta_from_geometry(A, d0, C_t, C_p), total_capacitance(A, d0, C_t, C_p))

    def capacitance(self, Z: float = 0.0) -> float:
        return membrane_capacitance(self.area, self.gap_nominal, Z)


@dataclass(frozen=True)
class ElectromechCoupling:
    g_em: float
    G_em: float
    C_em_resonant: float
    n_LC: float

    @classmethod
    def from_config(cls, cfg, P_D: float | None = None, eta_cap: float | None = None) -> "ElectromechCoupling":
        P_D = cfg.P_drive if P_D is None else P_D
        eta = cfg.eta_cap if eta_cap is None else eta_cap
        z_zpf = zero_point_fluctuation(cfg.m_eff, cfg.omega_0)
        g = g_em_single_photon(cfg.omega_LC, z_zpf, cfg.d0, eta)
        G = electromech_coupling(g, P_D, cfg.omega_LC, cfg.kappa_iT)
        C = electromech_cooperativity(G, cfg.gamma_m, cfg.kappa_iT, cfg.omega_m)
        return cls(g, G, float(C), lc_photon_number(P_D, cfg.omega_LC, cfg.kappa_iT))
