"""Spin-echo waveforms through the membrane: synthesis, demodulation, convolution.

Waveforms are complex baseband envelopes unless stated otherwise.  The
membrane acts on the envelope as a causal exponential of time constant
``2/gamma_m``, i.e. a Lorentzian filter of full width ``gamma_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .io import RunManifest, format_csv, parse_csv
from .noise import average_shots

__all__ = [
    "Waveform", "EchoParams", "impulse_response", "convolve_response", "convolve_direct",
    "synth_echo", "gate", "upconvert", "quadrature_demodulate", "decimate", "pipeline",
    "off_resonance_suppression_db", "average_shots", "average_noisy_shots",
]


@dataclass(frozen=True)
class Waveform:
    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("sample interval must be positive")
        s = np.asarray(self.samples)
        if s.ndim != 1:
            raise ValueError("samples must be 1-D")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.samples)

    def peak_time(self) -> float:
        return float(self.t[int(np.argmax(np.abs(self.samples)))])

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def to_csv(self, manifest: RunManifest | None = None) -> str:
        s = self.samples.astype(complex)
        return format_csv("waveform", zip(self.t, s.real, s.imag), manifest)

    @classmethod
    def from_csv(cls, text: str) -> "Waveform":
        rows, _ = parse_csv(text, "waveform")
        if len(rows) < 2:
            raise ValueError("waveform needs at least two samples")
        arr = np.array(rows, dtype=float)
        dts = np.diff(arr[:, 0])
        dt = float(np.mean(dts))
        if not np.allclose(dts, dt, rtol=1e-6, atol=0):
            raise ValueError("waveform is not uniformly sampled")
        return cls(float(arr[0, 0]), dt, arr[:, 1] + 1j * arr[:, 2])


@dataclass(frozen=True)
class EchoParams:
    T2_star: float
    t_echo: float
    amplitude: float = 1.0
    carrier_offset: float = 0.0

    def __post_init__(self):
        if not self.T2_star > 0:
            raise ValueError("T2_star must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


def impulse_response(gamma_m: float, duration: float, dt: float) -> Waveform:
    """Membrane envelope response ``exp(-gamma_m t / 2)`` sampled from ``t = 0``."""
    if duration < 10.0 / gamma_m * (1 - 1e-12):
        raise ValueError(f"duration {duration:.3e} s is shorter than 10/gamma_m = {10 / gamma_m:.3e} s")
    n = int(round(duration / dt)) + 1
    t = dt * np.arange(n)
    return Waveform(0.0, dt, np.exp(-gamma_m * t / 2.0))


def convolve_response(a: Waveform, h: Waveform, full: bool = False) -> Waveform:
    """Causal convolution ``b(t) = integral h(t - tau) a(tau) d tau``.

    The result is truncated to the span of ``a`` unless ``full``.
    """
    if not np.isclose(a.dt, h.dt, rtol=1e-12, atol=0):
        raise ValueError(f"sample intervals differ: {a.dt} vs {h.dt}")
    b = a.dt * np.convolve(a.samples, h.samples)
    if not full:
        b = b[: len(a)]
    return Waveform(a.t0 + h.t0, a.dt, b)


def convolve_direct(a: Waveform, h: Waveform) -> Waveform:
    """Reference O(N^2) sum of the same convolution (truncated to ``a``'s span)."""
    x, k = a.samples, h.samples
    out = np.zeros(len(x), dtype=np.result_type(x, k, float))
    for n in range(len(x)):
        m = min(n + 1, len(k))
        out[n] = np.sum(k[:m] * x[n - np.arange(m)])
    return Waveform(a.t0 + h.t0, a.dt, a.dt * out)


def synth_echo(params: EchoParams, span: float, dt: float, t0: float = 0.0) -> Waveform:
    """Two-sided exponential echo envelope on a complex carrier at ``carrier_offset``."""
    if params.t_echo - 5 * params.T2_star < t0 or params.t_echo + 5 * params.T2_star > t0 + span:
        raise ValueError("span must cover t_echo +- 5 T2*")
    n = int(round(span / dt)) + 1
    t = t0 + dt * np.arange(n)
    env = params.amplitude * np.exp(-np.abs(t - params.t_echo) / params.T2_star)
    return Waveform(t0, dt, env * np.exp(1j * params.carrier_offset * (t - params.t_echo)))


def gate(wave: Waveform, windows) -> Waveform:
    """Blank the waveform inside each ``(start, stop)`` window (e.g. during rf pulses)."""
    s = wave.samples.copy()
    t = wave.t
    for lo, hi in windows:
        s[(t >= lo) & (t < hi)] = 0
    return Waveform(wave.t0, wave.dt, s)


def upconvert(wave: Waveform, f_ref: float) -> Waveform:
    """Real passband ``Re(a(t) exp(i f_ref t))`` of a complex envelope."""
    if f_ref * wave.dt > 2 * np.pi / 10.0 * (1 + 1e-9):
        raise ValueError("sample interval does not resolve the carrier (need dt <= 1/(10 f))")
    return Waveform(wave.t0, wave.dt, np.real(wave.samples * np.exp(1j * f_ref * wave.t)))


def quadrature_demodulate(wave: Waveform, f_ref: float, lowpass_cutoff: float | None = None,
                          gamma_m: float | None = None, order: int = 4) -> Waveform:
    """Mix down by ``exp(-i f_ref t)`` and low-pass with a causal Butterworth filter.

    The cutoff (rad/s) defaults to ``5 * gamma_m``.  A pure ``cos(f_ref t)``
    comes out as the constant ``1/2`` once the filter has settled.
    """
    if lowpass_cutoff is None:
        if gamma_m is None:
            raise ValueError("give lowpass_cutoff or gamma_m")
        lowpass_cutoff = 5.0 * gamma_m
    if lowpass_cutoff >= f_ref:
        raise ValueError("low-pass cutoff must lie below the reference frequency")
    nyquist = np.pi / wave.dt
    if lowpass_cutoff >= nyquist:
        raise ValueError("low-pass cutoff above the Nyquist frequency")
    mixed = wave.samples * np.exp(-1j * f_ref * wave.t)
    sos = signal.butter(order, lowpass_cutoff / nyquist, btype="low", output="sos")
    return Waveform(wave.t0, wave.dt, signal.sosfilt(sos, mixed))


def decimate(wave: Waveform, factor: int) -> Waveform:
    """Keep every ``factor``-th sample; the caller must have band-limited first."""
    if factor < 1:
        raise ValueError("decimation factor must be >= 1")
    return Waveform(wave.t0, wave.dt * factor, wave.samples[::factor])


def pipeline(params: EchoParams, gamma_m: float, f_ref: float, dt: float = 0.5e-6,
             decimation: int = 20, lowpass_cutoff: float | None = None, blank=()) -> dict:
    """Echo -> passband at ``f_ref`` -> demodulate -> decimate -> membrane convolution.

    Returns the intermediate waveforms keyed ``input``, ``demodulated`` and
    ``membrane``.
    """
    span = params.t_echo + 5 * params.T2_star + 10.0 / gamma_m
    a = synth_echo(params, span, dt)
    if blank:
        a = gate(a, blank)
    base = quadrature_demodulate(upconvert(a, f_ref), f_ref, lowpass_cutoff, gamma_m=gamma_m)
    base = decimate(base, decimation)
    h = impulse_response(gamma_m, 10.0 / gamma_m, base.dt)
    return {"input": a, "demodulated": base, "membrane": convolve_response(base, h)}


def off_resonance_suppression_db(gamma_m: float, f_ref: float, T2_star: float, t_echo: float,
                                 offset: float, **kw) -> float:
    """Peak membrane response of an off-resonant echo relative to the on-resonant one, in dB."""
    on = pipeline(EchoParams(T2_star, t_echo, 1.0, 0.0), gamma_m, f_ref, **kw)["membrane"]
    off = pipeline(EchoParams(T2_star, t_echo, 1.0, offset), gamma_m, f_ref, **kw)["membrane"]
    return float(20.0 * np.log10(np.max(off.magnitude) / np.max(on.magnitude)))


def average_noisy_shots(wave: Waveform, noise_sigma: float, N: int, seed: int = 0) -> Waveform:
    """Mean of ``N`` copies of ``wave`` with independent complex Gaussian noise."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng(seed)
    acc = np.zeros(len(wave), dtype=complex)
    for _ in range(N):
        acc += rng.normal(0, noise_sigma, len(wave)) + 1j * rng.normal(0, noise_sigma, len(wave))
    return Waveform(wave.t0, wave.dt, wave.samples + acc / N)
