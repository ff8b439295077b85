"""Physical constants, frequency and power conversions.

All internal arithmetic is done in SI units with angular frequencies in rad/s.
Human-facing quantities (config files, CSV columns) use ordinary Hz and dBm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import scipy.constants as _sc

TAU = 2.0 * math.pi


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    k_B: float = _sc.k
    epsilon_0: float = _sc.epsilon_0
    c: float = _sc.c


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
EPSILON_0 = CONSTANTS.epsilon_0
C_LIGHT = CONSTANTS.c


class AngularFrequency(float):
    """A non-negative angular frequency in rad/s.

    Built with :meth:`from_hz`, the instance remembers the ordinary frequency
    it came from so ``AngularFrequency.from_hz(f).hz == f`` holds bit for bit.
    Arithmetic on instances returns plain floats.
    """

    def __new__(cls, value: float, _hz: float | None = None):
        value = float(value)
        if not value >= 0.0:
            raise ValueError(f"angular frequency must be non-negative, got {value!r}")
        obj = super().__new__(cls, value)
        obj._hz = _hz
        return obj

    @classmethod
    def from_hz(cls, f: float) -> "AngularFrequency":
        f = float(f)
        return cls(TAU * f, _hz=f)

    @property
    def hz(self) -> float:
        if self._hz is not None:
            return self._hz
        return float(self) / TAU

    def __repr__(self) -> str:
        return f"AngularFrequency({float(self)!r} rad/s = {self.hz!r} Hz)"

    def __reduce__(self):
        return (AngularFrequency, (float(self), self._hz))


class PowerLevel(float):
    """A strictly positive power in watts, convertible to and from dBm."""

    def __new__(cls, watts: float):
        watts = float(watts)
        if not watts > 0.0:
            raise ValueError(f"power must be > 0 W, got {watts!r}")
        return super().__new__(cls, watts)

    @classmethod
    def from_dbm(cls, p: float) -> "PowerLevel":
        return cls(dbm_to_watts(p))

    @property
    def watts(self) -> float:
        return float(self)

    @property
    def dbm(self) -> float:
        return watts_to_dbm(float(self))

    def __repr__(self) -> str:
        return f"PowerLevel({float(self)!r} W = {self.dbm:.6g} dBm)"


def hz(f):
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return TAU * f


def to_hz(omega):
    return omega / TAU


def dbm_to_watts(p):
    """Convert dBm to watts: ``1e-3 * 10**(p/10)``."""
    p = float(p)
    if not math.isfinite(p):
        raise ValueError(f"dBm value must be finite, got {p!r}")
    return 1e-3 * 10.0 ** (p / 10.0)


def watts_to_dbm(w):
    w = float(w)
    if not w > 0.0:
        raise ValueError(f"power must be > 0 W to express in dBm, got {w!r}")
    return 10.0 * math.log10(w / 1e-3)


def photon_flux(power, omega):
    """Quanta per second carried by ``power`` at angular frequency ``omega``."""
    return power / (HBAR * omega)


def quanta_to_kelvin(quanta, omega):
    return quanta * HBAR * omega / K_B


def kelvin_to_quanta(temperature, omega):
    return temperature * K_B / (HBAR * omega)


def zero_point_fluctuation(m, omega0):
    """Ground-state position spread ``sqrt(hbar / (2 m omega0))`` in metres."""
    if m <= 0 or omega0 <= 0:
        raise ValueError("mass and frequency must be positive")
    return math.sqrt(HBAR / (2.0 * m * omega0))
