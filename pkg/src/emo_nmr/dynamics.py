"""Frequency-domain solution of the linearised LC / membrane / cavity chain.

The operating point is fixed: resonant electrical drive (zero LC detuning),
optical cavity detuned by half its linewidth, and the cavity response taken in
its quasi-static limit since the mechanical frequency is far below the cavity
linewidth.  All amplitudes are in square-root-of-quanta units.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .cavity import OptomechCoupling
from .electromech import ElectromechCoupling
from .io import RunManifest, format_csv
from .units import TAU

DEFAULT_GRID_POINTS = 4096
DEFAULT_GRID_HALFWIDTH = 20.0  # in units of gamma_m


@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex response sampled on a strictly increasing angular-frequency grid."""

    frequencies: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if w.ndim != 1 or v.shape != w.shape:
            raise ValueError("frequencies and values must be 1-D and equally long")
        if w.size > 1 and not np.all(np.diff(w) > 0):
            raise ValueError("frequency grid must be strictly increasing")
        if np.isnan(v).any():
            raise ValueError("spectrum contains NaN")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "values", v)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)

    def rows(self):
        for w, v in zip(self.frequencies, self.values):
            yield (w / TAU, v.real, v.imag, abs(v), float(np.angle(v)))

    def to_csv(self, manifest: RunManifest | None = None) -> str:
        return format_csv("spectrum", self.rows(), manifest)


@dataclass(frozen=True)
class InputAmplitudes:
    """Fourier amplitudes of every input channel at the evaluation frequency."""

    S: complex = 0.0
    Q_in: complex = 0.0
    Phi_in: complex = 0.0
    q_in: complex = 0.0
    phi_in: complex = 0.0
    f_in: complex = 0.0
    X_in: complex = 0.0
    Y_in: complex = 0.0

    def __add__(self, other: "InputAmplitudes") -> "InputAmplitudes":
        return InputAmplitudes(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def scaled(self, k) -> "InputAmplitudes":
        return InputAmplitudes(**{f.name: k * getattr(self, f.name) for f in fields(self)})

    @classmethod
    def unit(cls, name: str) -> "InputAmplitudes":
        return cls(**{name: 1.0})


CHANNELS = tuple(f.name for f in fields(InputAmplitudes))


def frequency_grid(omega_m, gamma_m, n: int = DEFAULT_GRID_POINTS, halfwidth: float = DEFAULT_GRID_HALFWIDTH):
    """``n`` evenly spaced points over ``omega_m +- halfwidth * gamma_m`` (rad/s)."""
    return np.linspace(omega_m - halfwidth * gamma_m, omega_m + halfwidth * gamma_m, n)


def chi_m(omega, omega_m, gamma_m):
    """Mechanical susceptibility; equals ``i/gamma_m`` on resonance."""
    omega = np.asarray(omega, dtype=complex) if np.iscomplexobj(omega) else np.asarray(omega, dtype=float)
    return 1.0 / (-(omega**2) / omega_m - 1j * omega * gamma_m / omega_m + omega_m)


def chi_lc(omega, kappa_iT, Delta_i=0.0):
    return 1.0 / ((-1j * np.asarray(omega) + kappa_iT / 2.0) ** 2 + Delta_i**2)


def chi_c(omega, kappa_oT, Delta_o):
    return chi_lc(omega, kappa_oT, Delta_o)


@dataclass(frozen=True)
class ChainRates:
    """The handful of rates the response formulas need, resolved from a config."""

    omega_m: float
    gamma_m: float
    kappa_i: float
    gamma_i: float
    kappa_o: float
    gamma_o: float
    G_em: float
    G_om: float
    N_D: float

    @property
    def kappa_iT(self):
        return self.kappa_i + self.gamma_i

    @property
    def kappa_oT(self):
        return self.kappa_o + self.gamma_o

    @classmethod
    def from_config(cls, cfg, G_em: float | None = None, G_om: float | None = None,
                    omega_m: float | None = None) -> "ChainRates":
        em = ElectromechCoupling.from_config(cfg)
        om = OptomechCoupling.from_config(cfg)
        return cls(
            omega_m=cfg.omega_m if omega_m is None else omega_m,
            gamma_m=cfg.gamma_m,
            kappa_i=cfg.kappa_i, gamma_i=cfg.gamma_i,
            kappa_o=cfg.kappa_o, gamma_o=cfg.gamma_o,
            G_em=em.G_em if G_em is None else G_em,
            G_om=om.G_om if G_om is None else G_om,
            N_D=om.N_D,
        )


def _rates(cfg_or_rates, **kw) -> ChainRates:
    if isinstance(cfg_or_rates, ChainRates):
        return cfg_or_rates if not kw else ChainRates(**{**cfg_or_rates.__dict__, **{k: v for k, v in kw.items() if v is not None}})
    return ChainRates.from_config(cfg_or_rates, **kw)


def displacement_response(omega, inputs: InputAmplitudes, cfg, G_em=None, G_om=None, back_action: bool = True):
    """Membrane displacement driven by thermal force, LC charge, and optical back-action."""
    r = _rates(cfg, G_em=G_em, G_om=G_om)
    omega = np.asarray(omega, dtype=float)
    brownian = -np.sqrt(2.0 * r.gamma_m) * inputs.f_in
    electrical = -r.G_em / (1j * omega - r.kappa_iT / 2.0) * (
        np.sqrt(r.gamma_i) * inputs.q_in + np.sqrt(r.kappa_i) * (inputs.Q_in + inputs.S))
    force = brownian + electrical
    if back_action:
        force = force - r.G_om * np.sqrt(r.kappa_o) / r.kappa_oT * (inputs.Y_in - inputs.X_in)
    return chi_m(omega, r.omega_m, r.gamma_m) * force


def output_quadratures(omega, inputs: InputAmplitudes, cfg, G_em=None, G_om=None, back_action: bool = True):
    """Amplitude and phase quadratures leaving the cavity.

    Returns ``(X_out, Y_out)``; the membrane enters both with equal weight and
    opposite sign.
    """
    r = _rates(cfg, G_em=G_em, G_om=G_om)
    ratio = r.kappa_o / r.kappa_oT
    z = displacement_response(omega, inputs, r, back_action=back_action)
    gain = r.G_om * np.sqrt(r.kappa_o) / r.kappa_oT
    X_out = (1.0 - ratio) * inputs.X_in + ratio * inputs.Y_in + gain * z
    Y_out = -ratio * inputs.X_in + (1.0 - ratio) * inputs.Y_in - gain * z
    return X_out, Y_out


def optical_signal(X_out, Y_out, N_D, kappa_o):
    """Demodulated photodetector amplitude ``sqrt(kappa_o N_D (|X|^2 + |Y|^2))``."""
    if np.any(np.asarray(N_D) < 0):
        raise ValueError("photon number must be non-negative")
    return np.sqrt(kappa_o * N_D) * np.sqrt(np.abs(X_out) ** 2 + np.abs(Y_out) ** 2)


def signal_transfer_rate(C_om, kappa_o, kappa_oT, C_em, kappa_i, kappa_iT) -> float:
    return C_om * (kappa_o / kappa_oT) * C_em * (kappa_i / kappa_iT)


def transfer_spectrum(omega, cfg, channel: str = "S", quadrature: str = "X", **kw) -> ComplexSpectrum:
    """Response of one output quadrature to a unit input on ``channel``."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown input channel {channel!r}; expected one of {CHANNELS}")
    omega = np.asarray(omega, dtype=float)
    X, Y = output_quadratures(omega, InputAmplitudes.unit(channel), cfg, **kw)
    vals = X if quadrature == "X" else Y
    return ComplexSpectrum(omega, np.broadcast_to(vals, omega.shape).astype(complex))


def susceptibility_spectrum(omega, cfg) -> ComplexSpectrum:
    omega = np.asarray(omega, dtype=float)
    return ComplexSpectrum(omega, chi_m(omega, cfg.omega_m, cfg.gamma_m))
