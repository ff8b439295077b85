"""Simulation and analysis of electro-mechano-optical NMR signal transduction."""

from .config import ConfigError, ExperimentConfig, canonical_config, load_config, prospective_config, read_config
from .units import AngularFrequency, PowerLevel, dbm_to_watts, zero_point_fluctuation

__version__ = "0.1.0"

__all__ = [
    "AngularFrequency",
    "ConfigError",
    "ExperimentConfig",
    "PowerLevel",
    "canonical_config",
    "dbm_to_watts",
    "load_config",
    "prospective_config",
    "read_config",
    "zero_point_fluctuation",
]
