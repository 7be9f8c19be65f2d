"""Gaussian-state fidelity of mechanical quantum memories under colored laser phase noise.

The common entry points are re-exported here; see the submodules for the rest.
"""
from .config import build_scenario, load_config, preset_config
from .kernels import BACKEND
from .model import (
    ConfigurationError,
    NoiseMode,
    NoiseSpec,
    PhysicalParams,
    UnstableConfigurationError,
)
from .protocol import InputState, ProtocolSpec, fidelity, storage_fidelity

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "InputState",
    "NoiseMode",
    "NoiseSpec",
    "PhysicalParams",
    "ProtocolSpec",
    "UnstableConfigurationError",
    "build_scenario",
    "fidelity",
    "load_config",
    "preset_config",
    "storage_fidelity",
]
