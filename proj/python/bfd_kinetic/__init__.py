"""Homogeneous Boltzmann-Fermi-Dirac solver."""

import json

from ._core import (
    BfdError,
    DistributionField,
    FermiDiracParams,
    KernelSpec,
    VelocityGrid,
    build_grid,
    constant_kernel,
    entropy_production,
    fd_entropy,
    fermi_integral,
    fit_fermi_dirac,
    inverse_power_kernel,
    moments,
    normalize_config,
    pressure_ratio,
    q_eps,
    relative_entropy,
    sample_fermi_dirac,
    saturation_info,
)
from . import _core


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def simulate(config):
    """Runs a configuration (dict or JSON text) and returns the recorded series."""
    return _core.simulate(_text(config))


def verify(config):
    """Runs the trajectory checks; returns one dict per verdict."""
    return _core.verify(_text(config))


__all__ = [
    "BfdError",
    "DistributionField",
    "FermiDiracParams",
    "KernelSpec",
    "VelocityGrid",
    "build_grid",
    "constant_kernel",
    "entropy_production",
    "fd_entropy",
    "fermi_integral",
    "fit_fermi_dirac",
    "inverse_power_kernel",
    "moments",
    "normalize_config",
    "pressure_ratio",
    "q_eps",
    "relative_entropy",
    "sample_fermi_dirac",
    "saturation_info",
    "simulate",
    "verify",
]
