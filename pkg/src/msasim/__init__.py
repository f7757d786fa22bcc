"""Baseband-equivalent simulator for a metasurface superheterodyne
backscatter transmitter: QAM modem with DUC/DDC, magnitude-phase-decoupled
surface model, link-level simulation, 1-bit beamforming codebook search,
and micro-Doppler spectrogram spoofing."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ConfigError,
    FramingError,
    MsaError,
    ParameterError,
    SyncError,
)
from .sigcore import ComplexEnvelope, FilterTaps, RealWaveform

__all__ = [
    "CapacityError",
    "ComplexEnvelope",
    "ConfigError",
    "FilterTaps",
    "FramingError",
    "MsaError",
    "ParameterError",
    "RealWaveform",
    "SyncError",
    "__version__",
]
