"""Built-in configuration presets.

``paper``: the prototype parameters (5.8 GHz carrier, 18 mm pitch, 16x10
units, 5 MHz IF, 20 MS/s DAC, 2.5 MSym/s, 0.63-0.79 V bias range), with
the codebook optimized toward 45 degrees and receivers at the main lobe
and a sidelobe.
"""

from __future__ import annotations

import copy

from .errors import ParameterError

_PAPER = {
    "geometry": {"nx": 16, "ny": 10, "pitch_m": 0.018, "f_rf_hz": 5.8e9},
    "unit_model": {"preset": "fig3e"},
    "codebook": {"optimize_toward_deg": 45.0, "restarts": 8},
    "modem": {
        "qam_order": 256,
        "symbol_rate": 2.5e6,
        "sample_rate": 20e6,
        "f_if": 5e6,
        "rrc_beta": 0.35,
        "rrc_span": 12,
    },
    "dac": {"v_min": 0.63, "v_max": 0.79, "resolution_bits": 14},
    "incident": {"azimuth_deg": 0.0},
    "receivers": [
        {"azimuth_deg": 45.0, "distance_m": 10.0, "snr_db": None},
        {"azimuth_deg": 25.0, "distance_m": 10.0, "snr_db": None},
    ],
    "path_loss": False,
    "seed": 1,
    "payload_symbols": 256,
    "orders": [4, 16, 64, 256],
    "pattern": {
        "bias_volts": [0.63, 0.71, 0.79],
        "angle_start_deg": -90.0,
        "angle_stop_deg": 90.0,
        "angle_step_deg": 0.5,
    },
    "beamform": {"target_deg": 45.0, "restarts": 8, "method": "greedy"},
    "spoof": {
        "blade_count": 2,
        "rotor_hz": 800.0,
        "tip_doppler_hz": 300e3,
        "duration_s": 0.01,
        "rotors": 2,
        "window_len": 256,
        "hop": 64,
        "sample_rate": 2e6,
        "iterations": 100,
    },
}

_PRESETS = {"paper": _PAPER}


def preset_config(name: str) -> dict:
    """Deep copy of a named preset configuration dict."""
    if name not in _PRESETS:
        raise ParameterError(f"unknown preset {name!r}; available: {sorted(_PRESETS)}")
    return copy.deepcopy(_PRESETS[name])
