"""Gaussian-beam optics for the hemispherical cavity and opto-mechanical coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .units import HBAR, zero_point_fluctuation


class NoStableSolution(ValueError):
    """The requested waist needs a Rayleigh range longer than half the mirror radius."""


class _FlatWavefront:
    """Marker for the infinite radius of curvature at the beam waist."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FLAT"

    def __bool__(self):
        return False


FLAT = _FlatWavefront()


def wavefront_radius(z: float, z0: float):
    """Radius of curvature ``z (1 + (z0/z)**2)``; ``FLAT`` at the waist."""
    if z == 0:
        return FLAT
    return z * (1.0 + (z0 / z) ** 2)


def waist_radius(z0: float, lam: float) -> float:
    return math.sqrt(lam * z0 / math.pi)


def rayleigh_range(w0: float, lam: float) -> float:
    return math.pi * w0**2 / lam


def beam_radius(z: float, z0: float, lam: float) -> float:
    return waist_radius(z0, lam) * math.sqrt(1.0 + (z / z0) ** 2)


@dataclass(frozen=True)
class GaussianBeam:
    """Beam at signed distance ``z`` from its waist, Rayleigh range ``z0``."""

    z: float
    z0: float
    lam: float

    def __post_init__(self):
        if not self.z0 > 0 or not self.lam > 0:
            raise ValueError("z0 and wavelength must be positive")

    @property
    def q(self) -> complex:
        return complex(self.z, self.z0)

    @property
    def waist(self) -> float:
        return waist_radius(self.z0, self.lam)

    @property
    def width(self) -> float:
        return beam_radius(self.z, self.z0, self.lam)

    @property
    def curvature_radius(self):
        return wavefront_radius(self.z, self.z0)

    def inverse_q(self) -> complex:
        """``1/R - i lam / (pi W**2)`` assembled from the real-space quantities."""
        R = self.curvature_radius
        inv_r = 0.0 if R is FLAT else 1.0 / R
        return complex(inv_r, -self.lam / (math.pi * self.width**2))


def solve_hemispherical_cavity(R_mirror: float, lam: float, target_waist_diameter: float) -> list[float]:
    """Cavity lengths putting a waist of the given diameter on the flat mirror.

    Solves ``z**2 - R z + z0**2 = 0``; returns the positive roots ascending.
    """
    if not R_mirror > 0:
        raise ValueError("mirror radius must be positive")
    z0 = rayleigh_range(target_waist_diameter / 2.0, lam)
    disc = R_mirror**2 - 4.0 * z0**2
    if disc < 0:
        raise NoStableSolution(f"Rayleigh range {z0:.4g} m exceeds R/2 = {R_mirror / 2:.4g} m")
    if disc == 0:
        return [R_mirror / 2.0]
    root = math.sqrt(disc)
    # stable form: avoid cancellation in the smaller root
    z_hi = 0.5 * (R_mirror + root)
    z_lo = z0**2 / z_hi
    return [z_lo, z_hi]


def waist_diameter_for_length(z: float, R_mirror: float, lam: float) -> float:
    """Inverse design: the waist diameter on the flat mirror for cavity length ``z``."""
    if not 0 < z < R_mirror:
        raise NoStableSolution(f"length {z} m outside the stable range (0, {R_mirror})")
    z0 = math.sqrt(z * (R_mirror - z))
    return 2.0 * waist_radius(z0, lam)


def intracavity_photon_number(P_opt, Omega_D, kappa_o, kappa_oT) -> float:
    """Photons stored for input power ``P_opt`` at detuning ``kappa_oT/2``."""
    return P_opt / (HBAR * Omega_D) * (2.0 * kappa_o / kappa_oT**2)


def g_om_radiation_pressure(Omega_c, z_zpf, l) -> float:
    return Omega_c * z_zpf / l


def optomech_coupling(g_om, N_D) -> float:
    return 0.5 * g_om * math.sqrt(N_D)


def g_om_from_coupling(G_om, N_D) -> float:
    return 2.0 * G_om / math.sqrt(N_D)


def optomech_cooperativity(G_om, gamma_m, kappa_oT) -> float:
    return G_om**2 / (gamma_m * kappa_oT)


def coupling_from_cooperativity(C_om, gamma_m, kappa_oT) -> float:
    return math.sqrt(C_om * gamma_m * kappa_oT)


@dataclass(frozen=True)
class OptomechCoupling:
    g_om: float
    G_om: float
    C_om: float
    N_D: float

    @classmethod
    def from_config(cls, cfg) -> "OptomechCoupling":
        """Coupling implied by the configured (measured) cooperativity."""
        N_D = intracavity_photon_number(cfg.P_optical, cfg.Omega_D, cfg.kappa_o, cfg.kappa_oT)
        G = coupling_from_cooperativity(cfg.C_om, cfg.gamma_m, cfg.kappa_oT)
        return cls(g_om_from_coupling(G, N_D), G, cfg.C_om, N_D)

    @classmethod
    def radiation_pressure_bound(cls, cfg, l: float | None = None) -> "OptomechCoupling":
        l = cfg.cavity_length if l is None else l
        N_D = intracavity_photon_number(cfg.P_optical, cfg.Omega_D, cfg.kappa_o, cfg.kappa_oT)
        g = g_om_radiation_pressure(cfg.Omega_c, zero_point_fluctuation(cfg.m_eff, cfg.omega_0), l)
        G = optomech_coupling(g, N_D)
        return cls(g, G, optomech_cooperativity(G, cfg.gamma_m, cfg.kappa_oT), N_D)
