"""Key-rate engine for memory-assisted phase-matching QKD repeater chains."""

from .core import (
    BellMix,
    ConfigurationError,
    PauliChannelProbs,
    ProtocolParams,
    binary_entropy,
    derived_transmissions,
    secret_key_fraction,
)
from .optics import ConditionalState, IntegrationError
from .rates import RatePoint, skr_per_channel_use, skr_per_second
from .waiting import UnsupportedConfiguration, WaitingStats

__all__ = [
    "BellMix",
    "ConditionalState",
    "ConfigurationError",
    "IntegrationError",
    "PauliChannelProbs",
    "ProtocolParams",
    "RatePoint",
    "UnsupportedConfiguration",
    "WaitingStats",
    "binary_entropy",
    "derived_transmissions",
    "secret_key_fraction",
    "skr_per_channel_use",
    "skr_per_second",
]

__version__ = "0.1.0"
