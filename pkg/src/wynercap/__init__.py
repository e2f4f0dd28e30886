"""Capacity of banded-interference cellular uplink channels.

The per-cell sum-rate capacity of a Wyner-like channel, where each user is
heard by ``d + 1`` consecutive base stations, is computed as a Lyapunov
exponent of transfer matrices, bracketed by Monte Carlo bounds, and
approximated at high SNR by its slope and power offset.
"""

__version__ = "0.1.0"

from .capacity import (
    CapacityReport,
    artificial_fading_offset,
    bound_information,
    bound_one_step_closed,
    bound_p_step,
    bound_truncation,
    capacity_high_snr,
    capacity_limit,
    capacity_nonfading,
    domain_probe,
    high_snr,
    nonfading_closed_form,
    spectral_capacity,
)
from .channel import ChannelParams, capacity_finite
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    ModelError,
    SingularBlockError,
    WynerCapError,
)
from .fading import FadingModel, FadingStream

__all__ = [
    "__version__", "ChannelParams", "FadingModel", "FadingStream", "CapacityReport",
    "capacity_limit", "capacity_finite", "capacity_nonfading", "capacity_high_snr",
    "high_snr", "domain_probe", "artificial_fading_offset", "nonfading_closed_form",
    "spectral_capacity", "bound_information", "bound_one_step_closed", "bound_p_step",
    "bound_truncation", "WynerCapError", "DimensionError", "SingularBlockError",
    "ModelError", "ContractError", "ConfigError",
]
