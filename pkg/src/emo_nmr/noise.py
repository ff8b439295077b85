"""Noise spectral densities, phase noise, sideband spectra, noise budgets and SNR.

Noise is counted in quanta (photons or phonons per unit bandwidth) and
converted to an effective temperature at the LC frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .cavity import OptomechCoupling
from .config import ConfigError
from .dynamics import chi_m
from .electromech import ElectromechCoupling, drive_frequency_shift, electromech_cooperativity
from .io import RunManifest, format_csv
from .units import HBAR, K_B, TAU, photon_flux, quanta_to_kelvin

# equivalent noise temperature of the conventional receiver, for comparison only
CONVENTIONAL_AMPLIFIER_T_N = 84.0

BUDGET_KEYS = ("shot", "brownian", "johnson", "phase", "total")
SNR_VARIANTS = ("narrowband", "with_phase_noise", "echo", "overcoupled")


def thermal_occupation(omega, T):
    """High-temperature occupation ``k_B T / (hbar omega)``."""
    return K_B * T / (HBAR * omega)


def phase_noise_lorentzian(omega, delta_P):
    """Drive phase-noise lineshape at offset ``omega``; unit area under ``d omega / 2 pi``."""
    if not delta_P > 0:
        raise ValueError("phase-noise linewidth must be positive")
    return delta_P / (np.asarray(omega) ** 2 + delta_P**2 / 4.0)


def mechanical_weight(omega, omega_m, gamma_m):
    """``gamma_m^2 |chi_m|^2``: unity on resonance, Lorentzian of FWHM ``gamma_m`` nearby."""
    return gamma_m**2 * np.abs(chi_m(omega, omega_m, gamma_m)) ** 2


def eta_p(delta_P, omega_m, gamma_m, Delta, lineshape=None) -> float:
    """Phase noise picked up by the mechanical response within ``omega_m +- Delta/2``.

    ``lineshape`` replaces the drive Lorentzian (a callable of offset
    frequency); by default it is :func:`phase_noise_lorentzian`.
    """
    if not 0 < Delta < 2.0 * omega_m:
        raise ValueError("integration window must satisfy 0 < Delta < 2 omega_m")
    if lineshape is None:
        def lineshape(w):
            return phase_noise_lorentzian(w, delta_P)

    def integrand(w):
        return mechanical_weight(w, omega_m, gamma_m) * lineshape(w) / TAU

    lo, hi = omega_m - Delta / 2.0, omega_m + Delta / 2.0
    breaks = [omega_m + k * gamma_m for k in (-10, -1, 0, 1, 10) if lo < omega_m + k * gamma_m < hi]
    val, _ = integrate.quad(integrand, lo, hi, points=breaks, limit=500, epsabs=0.0, epsrel=1e-11)
    return float(val)


@dataclass(frozen=True)
class NoiseInputs:
    """Input noise densities in quanta; ``S_XX = S_YY = 1/2`` is shot-noise limited."""

    S_FF: float
    S_qq: float
    S_XX: float = 0.5
    S_YY: float = 0.5
    eta_p: float = 0.0
    delta_P: float | None = None

    def __post_init__(self):
        for name in ("S_FF", "S_qq", "S_XX", "S_YY", "eta_p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def L_at(self, omega):
        if self.delta_P is None:
            return np.zeros_like(np.asarray(omega, dtype=float))
        return phase_noise_lorentzian(omega, self.delta_P)

    @classmethod
    def from_config(cls, cfg, phase_noise: bool = True) -> "NoiseInputs":
        return cls(
            S_FF=thermal_occupation(cfg.omega_m, cfg.T_eff),
            S_qq=thermal_occupation(cfg.omega_LC, cfg.T_bath),
            eta_p=cfg.eta_p,
            delta_P=cfg.delta_P if phase_noise else None,
        )

    @classmethod
    def zero(cls) -> "NoiseInputs":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PowerSpectrum:
    """Single-sided optical sideband density, split into named contributions."""

    frequencies: np.ndarray
    components: dict = field(default_factory=dict)
    center: float = 0.0

    @property
    def total(self) -> np.ndarray:
        out = np.zeros_like(self.frequencies)
        for v in self.components.values():
            out = out + v
        return out

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def area(self, lo=None, hi=None, names=None) -> float:
        """Integral of the density over ``[lo, hi]`` with measure ``d omega / 2 pi`` (rectangle rule)."""
        w = self.frequencies
        mask = np.ones_like(w, dtype=bool)
        if lo is not None:
            mask &= w >= lo
        if hi is not None:
            mask &= w <= hi
        names = self.components.keys() if names is None else names
        dens = sum(self.components[n][mask] for n in names)
        return float(np.sum(dens) * self.bin_width / TAU)

    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.total))])

    def to_csv(self, manifest: RunManifest | None = None) -> str:
        """Same columns as complex spectra; the density is real with zero phase."""
        psd = self.total
        rows = ((w / TAU, v, 0.0, abs(v), 0.0) for w, v in zip(self.frequencies, psd))
        return format_csv("spectrum", rows, manifest)


def _deposit(density, grid, where, area):
    """Add a line of integrated strength ``area`` (under d omega/2pi) to the nearest bin."""
    if area == 0:
        return
    k = int(np.argmin(np.abs(grid - where)))
    dw = grid[1] - grid[0]
    density[k] += area * TAU / dw


def sideband_spectrum(omega, cfg, noise: NoiseInputs | None = None, S: float = 0.0,
                      tone: dict | None = None, shift: bool = True, P_D: float | None = None) -> PowerSpectrum:
    """Photodetected sideband density around the mechanical frequency.

    ``S`` is the rf signal amplitude (``S**2`` in quanta/s) placed on the
    mechanical resonance.  ``tone`` is ``{"P_T": W, "Delta_T": rad/s}``; the
    tone line sits ``Delta_T`` away from the resonance.  With ``shift`` the
    resonance is pulled by the drive-induced spring softening.  The grid must
    be uniform; line contributions go into the single nearest bin.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.size < 2 or np.any(omega <= 0) or np.any(omega >= 2 * cfg.omega_m):
        raise ValueError("grid must have >= 2 points inside (0, 2 omega_m)")
    if not np.allclose(np.diff(omega), omega[1] - omega[0], rtol=1e-6, atol=0):
        raise ValueError("grid must be uniform")
    noise = NoiseInputs.from_config(cfg) if noise is None else noise
    P_D = cfg.P_drive if P_D is None else P_D

    om = OptomechCoupling.from_config(cfg)
    em = ElectromechCoupling.from_config(cfg, P_D=P_D)
    center = cfg.omega_m
    if shift:
        center = cfg.omega_m + drive_frequency_shift(P_D, cfg.R_circuit, cfg.m_eff, cfg.omega_0, cfg.A_cap, cfg.d0)

    r_o = cfg.kappa_o / cfg.kappa_oT
    r_i = cfg.kappa_i / cfg.kappa_iT
    pre = cfg.kappa_o * om.N_D
    weight = mechanical_weight(omega, center, cfg.gamma_m)
    C_em = electromech_cooperativity(em.G_em, cfg.gamma_m, cfg.kappa_iT, omega)
    p_D = photon_flux(P_D, cfg.omega_D)
    chain = pre * cfg.C_om * r_o

    comps = {
        "shot": np.full_like(omega, pre * (r_o**2 + (1 - r_o) ** 2) * (2 * noise.S_XX + 2 * noise.S_YY)),
        "brownian": chain * 2.0 * weight * 4.0 * noise.S_FF,
        "johnson": chain * C_em * weight * 4.0 * noise.S_qq,
        "phase": chain * C_em * weight * 4.0 * r_i * noise.L_at(omega) * p_D,
    }
    lines = np.zeros_like(omega)

    def line_gain(w):
        c = electromech_cooperativity(em.G_em, cfg.gamma_m, cfg.kappa_iT, w)
        return chain * c * mechanical_weight(w, center, cfg.gamma_m) * 4.0 * r_i

    if S:
        _deposit(lines, omega, center, line_gain(center) * abs(S) ** 2)
    if tone:
        w_T = center + tone["Delta_T"]
        omega_T = cfg.omega_D + w_T
        _deposit(lines, omega, w_T, line_gain(w_T) * photon_flux(tone["P_T"], omega_T))
    comps["lines"] = lines
    return PowerSpectrum(omega, comps, center)


@dataclass(frozen=True)
class NoiseBudget:
    shot: float
    brownian: float
    johnson: float
    phase: float
    omega_ref: float
    label: str = ""

    @property
    def total(self) -> float:
        return self.shot + self.brownian + self.johnson + self.phase

    def quanta(self) -> dict:
        return {k: getattr(self, k) for k in BUDGET_KEYS}

    def kelvin(self) -> dict:
        return {k: quanta_to_kelvin(v, self.omega_ref) for k, v in self.quanta().items()}

    def to_dict(self) -> dict:
        return {"label": self.label, "quanta": self.quanta(), "kelvin": self.kelvin(),
                "reference_frequency_Hz": self.omega_ref / TAU}

    def table(self) -> str:
        head = ["", "Shot noise", "Brownian noise", "Johnson noise", "Phase noise", "Total noise"]
        q = self.quanta()
        k = self.kelvin()
        rows = [head,
                ["Number of quanta"] + [f"{q[key]:.3g}" for key in BUDGET_KEYS],
                ["Effective temperature [K]"] + [f"{k[key]:.3g}" for key in BUDGET_KEYS]]
        widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
        lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths)))
                 for r in rows]
        if self.label:
            lines.insert(0, self.label)
        return "\n".join(lines) + "\n"


def noise_budget(cfg, overcoupled: bool = False, C_em: float | None = None, C_om: float | None = None,
                 noise: NoiseInputs | None = None, label: str = "") -> NoiseBudget:
    """Added-noise budget referred to the LC input, in quanta.

    ``overcoupled`` sets both coupling efficiencies to one.  ``C_em`` and
    ``C_om`` override the values implied by the configuration.
    """
    noise = NoiseInputs.from_config(cfg) if noise is None else noise
    if C_em is None:
        C_em = ElectromechCoupling.from_config(cfg).C_em_resonant
    C_om = cfg.C_om if C_om is None else C_om
    inv_ri = 1.0 if overcoupled else cfg.kappa_iT / cfg.kappa_i
    r_o = 1.0 if overcoupled else cfg.kappa_o / cfg.kappa_oT
    shot = inv_ri * (noise.S_XX + noise.S_YY) / (2.0 * C_om * r_o * C_em)
    brownian = 2.0 * inv_ri * noise.S_FF / C_em
    johnson = inv_ri * noise.S_qq
    phase = noise.eta_p * photon_flux(cfg.P_drive, cfg.omega_D) / cfg.gamma_m
    return NoiseBudget(shot, brownian, johnson, phase, cfg.omega_LC, label)


@dataclass(frozen=True)
class SnrReport:
    variant: str
    signal_quanta: float
    noise_quanta: float
    n_avg: int = 1

    @property
    def snr_single_shot(self) -> float:
        return float(np.sqrt(self.signal_quanta / self.noise_quanta))

    def snr_averaged(self, N: int | None = None) -> float:
        N = self.n_avg if N is None else N
        return average_shots(self.snr_single_shot, N)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "signal_quanta": self.signal_quanta,
                "noise_quanta": self.noise_quanta, "snr_single_shot": self.snr_single_shot,
                "n_avg": self.n_avg, "snr_averaged": self.snr_averaged()}


def average_shots(single_shot_snr, N: int) -> float:
    if N < 1:
        raise ValueError("number of averages must be >= 1")
    return float(single_shot_snr * np.sqrt(N))


def echo_bandwidth_factor(cfg) -> float:
    """``(T2*/2)(gamma_m T2*/2)``: converts signal flux to echo quanta."""
    if cfg.T2_star is None:
        raise ConfigError("T2_star: required for the echo SNR")
    return (cfg.T2_star / 2.0) * (cfg.gamma_m * cfg.T2_star / 2.0)


def _signal_flux(cfg, signal_flux):
    if signal_flux is not None:
        return signal_flux
    if cfg.S_signal_quanta is None:
        raise ConfigError("S_signal_quanta: required when no signal flux is given")
    return cfg.S_signal_quanta / echo_bandwidth_factor(cfg)


def snr(cfg, variant: str = "echo", n_avg: int = 1, signal_flux: float | None = None,
        bandwidth: float | None = None, C_em: float | None = None) -> SnrReport:
    """Signal-to-noise ratio for one of the four detection scenarios.

    ``signal_flux`` is ``S**2`` in quanta/s; when omitted it is inferred from
    the configured echo signal quanta.  ``bandwidth`` (rad/s) defaults to the
    mechanical linewidth.
    """
    if variant not in SNR_VARIANTS:
        raise ValueError(f"unknown SNR variant {variant!r}; expected one of {SNR_VARIANTS}")
    if variant == "echo":
        factor = echo_bandwidth_factor(cfg)
        if signal_flux is None and cfg.S_signal_quanta is None:
            raise ConfigError("S_signal_quanta: required for the echo SNR")
        signal = cfg.S_signal_quanta if signal_flux is None else signal_flux * factor
        budget = noise_budget(cfg, C_em=C_em)
        return SnrReport(variant, signal, budget.total, n_avg)

    Delta = cfg.gamma_m if bandwidth is None else bandwidth
    flux = _signal_flux(cfg, signal_flux)
    budget = noise_budget(cfg, overcoupled=(variant == "overcoupled"), C_em=C_em)
    noise = budget.shot + budget.brownian + budget.johnson
    if variant == "with_phase_noise":
        noise += phase_noise_lorentzian(cfg.omega_m, cfg.delta_P) * photon_flux(cfg.P_drive, cfg.omega_D)
    return SnrReport(variant, flux / Delta, noise, n_avg)
