"""Experiment configuration: file format, validation, presets.

The file format is a flat list of ``key = number unit`` pairs grouped in
``[section]`` headers, with ``#`` comments.  Sections are organisational only;
each key may appear once in the whole document.  Frequencies and rates are
written in ordinary frequency units (Hz, kHz, MHz, GHz) and stored in rad/s.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from . import electromech
from .units import C_LIGHT, TAU, AngularFrequency, PowerLevel, dbm_to_watts


class ConfigError(ValueError):
    """Invalid or incomplete configuration; message carries the field path."""


# unit suffix -> (kind, scale to SI)
_UNITS = {
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "THz": ("frequency", 1e12),
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "dBm": ("power", None),
    "K": ("temperature", 1.0),
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "m2": ("area", 1.0),
    "mm2": ("area", 1e-6),
    "um2": ("area", 1e-12),
    "kg": ("mass", 1.0),
    "g": ("mass", 1e-3),
    "F": ("capacitance", 1.0),
    "nF": ("capacitance", 1e-9),
    "pF": ("capacitance", 1e-12),
    "fF": ("capacitance", 1e-15),
    "ohm": ("resistance", 1.0),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    "": ("dimensionless", 1.0),
}

# field -> (kind, required, constraint)
#   constraint: "pos" > 0, "nonneg" >= 0, "unit" in (0, 1)
_FIELDS = {
    "omega_m": ("frequency", True, "pos"),
    "omega_0": ("frequency", True, "pos"),
    "omega_LC": ("frequency", True, "pos"),
    "omega_s": ("frequency", True, "pos"),
    "omega_D": ("frequency", False, "pos"),
    "Omega_c": ("frequency", False, "pos"),
    "Omega_D": ("frequency", False, "pos"),
    "gamma_m": ("frequency", True, "pos"),
    "gamma_i": ("frequency", True, "pos"),
    "kappa_i": ("frequency", True, "pos"),
    "gamma_o": ("frequency", True, "pos"),
    "kappa_o": ("frequency", True, "pos"),
    "m_eff": ("mass", True, "pos"),
    "A_cap": ("area", True, "pos"),
    "d0": ("length", True, "pos"),
    "eta_cap": ("dimensionless", True, "unit"),
    "C_t": ("capacitance", True, "nonneg"),
    "C_p": ("capacitance", True, "nonneg"),
    "R_circuit": ("resistance", True, "pos"),
    "T_bath": ("temperature", True, "pos"),
    "T_eff": ("temperature", False, "pos"),
    "P_drive": ("power", True, "pos"),
    "P_optical": ("power", True, "pos"),
    "lambda_opt": ("length", True, "pos"),
    "R_mirror": ("length", True, "pos"),
    "cavity_length": ("length", True, "pos"),
    "C_om": ("dimensionless", True, "pos"),
    "eta_p": ("dimensionless", True, "nonneg"),
    "delta_P": ("frequency", True, "pos"),
    "T2_star": ("time", False, "pos"),
    "S_signal_quanta": ("dimensionless", False, "nonneg"),
}

DEFAULT_T_EFF = 205.0

_LINE = re.compile(r"^(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.+?)\s*$")
_VALUE = re.compile(r"^(?P<num>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)\s*(?P<unit>[A-Za-z0-9]*)$")


@dataclass(frozen=True)
class ExperimentConfig:
    """Immutable description of one EMO setup (SI units, rates in rad/s).

    The total loss rates ``kappa_iT`` and ``kappa_oT`` are derived properties.
    """

    omega_m: float
    omega_0: float
    omega_LC: float
    omega_s: float
    omega_D: float
    Omega_c: float
    Omega_D: float
    gamma_m: float
    gamma_i: float
    kappa_i: float
    gamma_o: float
    kappa_o: float
    m_eff: float
    A_cap: float
    d0: float
    eta_cap: float
    C_t: float
    C_p: float
    R_circuit: float
    T_bath: float
    T_eff: float
    P_drive: float
    P_optical: float
    lambda_opt: float
    R_mirror: float
    cavity_length: float
    C_om: float
    eta_p: float
    delta_P: float
    T2_star: float | None = None
    S_signal_quanta: float | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                if _FIELDS[f.name][1]:
                    raise ConfigError(f"{f.name}: required field is missing")
                continue
            err = _violation(f.name, value)
            if err:
                raise ConfigError(f"{f.name}: {err}")

    @property
    def kappa_iT(self) -> float:
        return self.kappa_i + self.gamma_i

    @property
    def kappa_oT(self) -> float:
        return self.kappa_o + self.gamma_o

    @property
    def Delta_i(self) -> float:
        return 0.0

    @property
    def Delta_o(self) -> float:
        return self.kappa_oT / 2.0

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_document(self) -> dict[str, str]:
        """Human-facing ``key -> "value unit"`` mapping (Hz for rates)."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            kind = _FIELDS[f.name][0]
            if kind == "frequency":
                out[f.name] = f"{_as_hz(value)!r} Hz"
            else:
                unit = {"power": "W", "temperature": "K", "length": "m", "area": "m2",
                        "mass": "kg", "capacitance": "F", "resistance": "ohm",
                        "time": "s", "dimensionless": ""}[kind]
                out[f.name] = f"{float(value)!r} {unit}".rstrip()
        return out


def _as_hz(value):
    return value.hz if isinstance(value, AngularFrequency) else float(value) / TAU


def _violation(name, value):
    constraint = _FIELDS[name][2]
    value = float(value)
    if not math.isfinite(value):
        return f"must be finite, got {value!r}"
    if constraint == "pos" and not value > 0:
        return f"must be > 0, got {value!r}"
    if constraint == "nonneg" and not value >= 0:
        return f"must be >= 0, got {value!r}"
    if constraint == "unit" and not 0 < value < 1:
        return f"must lie in (0, 1), got {value!r}"
    return None


def parse_quantity(text: str, kind: str):
    """Parse ``"<number> <unit>"`` into SI (rad/s for frequencies).

    Raises ``ValueError`` with a short reason on malformed input.
    """
    m = _VALUE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse quantity {text!r}")
    number = float(m.group("num"))
    unit = m.group("unit")
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    unit_kind, scale = _UNITS[unit]
    if unit_kind != kind:
        expected = [u or "(none)" for u, (k, _) in _UNITS.items() if k == kind]
        raise ValueError(f"unit {unit or '(none)'!r} is not a {kind} unit; use one of {expected}")
    if kind == "power":
        return PowerLevel(dbm_to_watts(number) if scale is None else number * scale)
    if kind == "frequency":
        return AngularFrequency.from_hz(number * scale)
    return number * scale


def _parse_document(text: str, source: str):
    """Return ``{key: (raw_value, lineno, section)}``."""
    entries = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key = m.group("key")
        if key in entries:
            first = entries[key][1]
            raise ConfigError(f"{source}:{lineno}: {section}.{key}: duplicate key (first set on line {first})")
        entries[key] = (m.group("value"), lineno, section)
    return entries


def _apply_overrides(entries, overrides: Iterable[str]):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        section = entries[key][2] if key in entries else "override"
        entries[key] = (value, 0, section)
    return entries


def load_config(text: str, source: str = "<string>", overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Parse and validate a configuration document.

    ``overrides`` are ``key=value`` strings applied before validation (as from
    ``--set``).  Derived defaults (``omega_D``, ``Omega_c``, ``Omega_D``,
    ``T_eff``) are resolved after overrides.
    """
    entries = _apply_overrides(_parse_document(text, source), overrides)

    def where(key):
        value, lineno, section = entries[key]
        loc = f"{source}:{lineno}" if lineno else "override"
        return f"{loc}: {section}.{key}" if section else f"{loc}: {key}"

    values = {}
    for key, (raw, _, _) in entries.items():
        if key not in _FIELDS:
            raise ConfigError(f"{where(key)}: unknown field")
        kind = _FIELDS[key][0]
        try:
            value = parse_quantity(raw, kind)
        except ValueError as exc:
            raise ConfigError(f"{where(key)}: {exc}") from None
        err = _violation(key, value)
        if err:
            raise ConfigError(f"{where(key)}: {err}")
        values[key] = value

    missing = [k for k, (_, required, _) in _FIELDS.items() if required and k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required field(s): {', '.join(missing)}")

    values.setdefault("T_eff", DEFAULT_T_EFF)
    values.setdefault("omega_D", AngularFrequency(values["omega_LC"] + values["omega_m"]))
    values.setdefault("Omega_c", AngularFrequency(TAU * C_LIGHT / values["lambda_opt"]))
    kappa_oT = values["kappa_o"] + values["gamma_o"]
    values.setdefault("Omega_D", AngularFrequency(values["Omega_c"] + kappa_oT / 2.0))
    return ExperimentConfig(**values)


def read_config(path, overrides: Iterable[str] = ()) -> ExperimentConfig:
    path = Path(path)
    return load_config(path.read_text(encoding="utf-8"), source=str(path), overrides=overrides)


def canonical_text() -> str:
    return resources.files("emo_nmr").joinpath("data/canonical.cfg").read_text(encoding="utf-8")


def canonical_config(overrides: Iterable[str] = ()) -> ExperimentConfig:
    """The setup as published: 180 kHz membrane, 38 MHz LC, 780 nm cavity."""
    return load_config(canonical_text(), source="<canonical>", overrides=overrides)


def prospective_config(cfg: ExperimentConfig, d0: float = 100e-9, drive_dbm: float = 30.0,
                       eta_mode: str = "geometry") -> ExperimentConfig:
    """Improved setup: smaller gap, stronger drive, room-temperature membrane bath,
    phase noise filtered out.

    ``eta_mode`` selects how the capacitance ratio follows the new gap (see
    :func:`emo_nmr.electromech.rescale_eta`).  Couplings are taken as
    overcoupled by the budget/SNR callers, not here.
    """
    eta = electromech.rescale_eta(cfg.eta_cap, cfg.d0, d0, cfg.A_cap, cfg.C_t, cfg.C_p, mode=eta_mode)
    return cfg.replace(d0=d0, eta_cap=eta, P_drive=PowerLevel.from_dbm(drive_dbm),
                       T_eff=cfg.T_bath, eta_p=0.0)
