"""Doppler-signature imitation: target spectrogram -> drive waveform -> link.

A target micro-Doppler spectrogram (e.g. the dual-rotor preset) is
inverted to a time-domain drive by Griffin-Lim phase retrieval, pushed
through the link simulator, and the re-analyzed spectrogram at each
receiver is scored against the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .linksim import ScenarioConfig, received_envelope, receiver_baseband
from .modem import to_dac
from .sigcore import RealWaveform


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude time-frequency grid (frames x fft bins, fftshifted axis)."""

    window_len: int
    hop: int
    sample_rate: float
    magnitudes: np.ndarray

    def __post_init__(self):
        if self.hop > self.window_len or self.hop < 1:
            raise ParameterError("need 1 <= hop <= window_len")
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != self.window_len:
            raise ParameterError("magnitudes must be (frames, window_len)")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ParameterError("magnitudes must be finite and non-negative")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "magnitudes", m)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    def frequencies(self) -> np.ndarray:
        return np.fft.fftshift(np.fft.fftfreq(self.window_len, 1.0 / self.sample_rate))

    def frame_times(self) -> np.ndarray:
        centers = np.arange(self.n_frames) * self.hop + self.window_len / 2.0
        return centers / self.sample_rate


def _frames(samples: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    n_frames = (len(samples) - window_len) // hop + 1
    idx = np.arange(window_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def _stft_complex(samples: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    win = np.hanning(window_len)
    return np.fft.fftshift(np.fft.fft(_frames(samples, window_len, hop) * win), axes=1)


def stft(x: RealWaveform, window_len: int, hop: int) -> Spectrogram:
    """Hann-windowed magnitude STFT; frames = floor((len-window)/hop)+1."""
    if hop < 1 or hop > window_len:
        raise ParameterError("need 1 <= hop <= window_len")
    if len(x) < window_len:
        raise ParameterError("input shorter than one window")
    return Spectrogram(
        window_len, hop, x.sample_rate, np.abs(_stft_complex(x.samples, window_len, hop))
    )


def _istft_real(spec_frames: np.ndarray, window_len: int, hop: int, length: int) -> np.ndarray:
    """Overlap-add inverse with window-square normalization; real output."""
    win = np.hanning(window_len)
    frames = np.fft.ifft(np.fft.ifftshift(spec_frames, axes=1)).real * win
    out = np.zeros(length)
    norm = np.zeros(length)
    for m in range(frames.shape[0]):
        lo = m * hop
        out[lo : lo + window_len] += frames[m]
        norm[lo : lo + window_len] += win * win
    nonzero = norm > 1e-12
    out[nonzero] /= norm[nonzero]
    return out


def griffin_lim(
    target: Spectrogram, iterations: int, seed: int
) -> tuple[RealWaveform, np.ndarray]:
    """Griffin-Lim phase retrieval against a magnitude target.

    Returns the reconstructed real waveform and the per-iteration residual
    ||  |STFT(x_k)| - target ||_F.
    """
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    mag = target.magnitudes
    length = target.window_len + (target.n_frames - 1) * target.hop
    if not np.any(mag > 0):
        return RealWaveform(target.sample_rate, np.zeros(length)), np.zeros(iterations)
    rng = np.random.default_rng(seed)
    phase = np.exp(2j * np.pi * rng.random(mag.shape))
    residuals = np.empty(iterations)
    x = None
    for it in range(iterations):
        x = _istft_real(mag * phase, target.window_len, target.hop, length)
        s = _stft_complex(x, target.window_len, target.hop)
        residuals[it] = float(np.linalg.norm(np.abs(s) - mag))
        phase = np.exp(1j * np.angle(s))
    return RealWaveform(target.sample_rate, x), residuals


def synthesize_waveform(target: Spectrogram, iterations: int = 100, seed: int = 0) -> RealWaveform:
    """Drive waveform whose STFT magnitude approximates ``target``."""
    waveform, _ = griffin_lim(target, iterations, seed)
    return waveform


def rotor_signature(
    blade_count: int,
    rotor_hz: float,
    tip_doppler_hz: float,
    duration_s: float,
    rotors: int = 2,
    window_len: int = 256,
    hop: int = 64,
    sample_rate: float = 2e6,
    ridge_bins: float = 1.5,
    flash_level: float = 0.5,
) -> Spectrogram:
    """Synthetic helicopter micro-Doppler target spectrogram.

    Each blade contributes a sinusoidal Doppler track
    f(t) = tip * sin(2 pi rotor t + 2 pi k / blades); with ``rotors=2`` the
    second rotor superposes the sign-flipped tracks.  Broadband blade-flash
    columns occur at rate ``blade_count * rotor_hz``.
    """
    if blade_count < 1 or rotor_hz <= 0 or tip_doppler_hz <= 0 or duration_s <= 0:
        raise ParameterError("all rotor parameters must be positive")
    if rotors not in (1, 2):
        raise ParameterError("rotors must be 1 or 2")
    if tip_doppler_hz >= sample_rate / 2:
        raise ParameterError("tip Doppler must stay below Nyquist")
    n_samples = int(round(duration_s * sample_rate))
    if n_samples < window_len:
        raise ParameterError("duration shorter than one analysis window")
    n_frames = (n_samples - window_len) // hop + 1
    times = (np.arange(n_frames) * hop + window_len / 2.0) / sample_rate
    freqs = np.fft.fftshift(np.fft.fftfreq(window_len, 1.0 / sample_rate))
    bin_hz = sample_rate / window_len
    sigma = ridge_bins * bin_hz
    grid = np.zeros((n_frames, window_len))
    signs = (1.0,) if rotors == 1 else (1.0, -1.0)
    for sign in signs:
        for k in range(blade_count):
            phase = 2.0 * np.pi * rotor_hz * times + 2.0 * np.pi * k / blade_count
            track = sign * tip_doppler_hz * np.sin(phase)
            grid += np.exp(-((freqs[None, :] - track[:, None]) ** 2) / (2 * sigma**2))
            # blade flash: broadband column when the blade phase wraps 2 pi
            flash = np.exp(
                -((np.mod(phase + np.pi, 2 * np.pi) - np.pi) ** 2) / (2 * 0.2**2)
            )
            band = (np.abs(freqs) <= tip_doppler_hz).astype(float)
            grid += flash_level * flash[:, None] * band[None, :]
    return Spectrogram(window_len, hop, sample_rate, grid)


def spectrogram_similarity(a: Spectrogram, b: Spectrogram) -> float:
    """Normalized zero-lag 2-D cross-correlation of the magnitude grids."""
    if a.magnitudes.shape != b.magnitudes.shape:
        raise ParameterError("spectrogram dimensions mismatch")
    av = a.magnitudes.ravel()
    bv = b.magnitudes.ravel()
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0 or nb == 0:
        raise ParameterError("zero-magnitude spectrogram")
    return float(np.dot(av, bv) / (na * nb))


@dataclass
class SpoofReport:
    """Per-receiver fidelity of the spoofed spectrogram."""

    waveform: RealWaveform
    similarities: list[float]
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"similarities": self.similarities, "degenerate": self.degenerate}


def spoof_pipeline(
    target: Spectrogram,
    scenario: ScenarioConfig,
    iterations: int = 100,
    seed: int | None = None,
) -> SpoofReport:
    """synthesize -> DAC -> link -> per-receiver re-analysis and scoring."""
    if seed is None:
        seed = scenario.seed
    if not np.any(target.magnitudes > 0):
        # zero target: zero-modulation drive, similarity undefined
        length = target.window_len + (target.n_frames - 1) * target.hop
        return SpoofReport(
            waveform=RealWaveform(target.sample_rate, np.zeros(length)),
            similarities=[math.nan] * len(scenario.receivers),
            degenerate=True,
        )
    waveform = synthesize_waveform(target, iterations, seed)
    drive = to_dac(waveform, scenario.dac)
    sims = []
    for i in range(len(scenario.receivers)):
        env = received_envelope(scenario, i, drive)
        bb = receiver_baseband(env)
        observed = stft(
            RealWaveform(bb.sample_rate, bb.samples.real),
            target.window_len,
            target.hop,
        )
        sims.append(spectrogram_similarity(observed, target))
    return SpoofReport(waveform=waveform, similarities=sims)
