"""Sampled-signal containers and the DSP primitives shared by the whole chain.

Everything RF-side is represented as a complex envelope relative to an
explicit carrier (``center_frequency``); real IF/drive waveforms live in
:class:`RealWaveform`.  All operations are pure: they return new containers
and never mutate their inputs.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

_BIN_MAGIC = b"MSAW"
_BIN_VERSION = 1
_KIND_REAL = 0
_KIND_COMPLEX = 1


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RealWaveform:
    """Uniformly sampled real-valued waveform (volts or dimensionless)."""

    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be > 0, got {self.sample_rate}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("samples must be finite (no NaN/Inf)")
        object.__setattr__(self, "samples", _freeze(arr))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "RealWaveform":
        return RealWaveform(self.sample_rate, samples)


@dataclass(frozen=True)
class ComplexEnvelope:
    """Complex baseband-equivalent signal referenced to ``center_frequency``."""

    sample_rate: float
    center_frequency: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be > 0, got {self.sample_rate}")
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("samples must be finite (no NaN/Inf)")
        object.__setattr__(self, "samples", _freeze(arr))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "ComplexEnvelope":
        return ComplexEnvelope(self.sample_rate, self.center_frequency, samples)


@dataclass(frozen=True)
class FilterTaps:
    """Linear-phase FIR taps; odd length, symmetric about the center."""

    taps: np.ndarray
    nominal_delay: int = field(default=0)

    def __post_init__(self):
        arr = np.asarray(self.taps, dtype=np.float64)
        if arr.ndim != 1 or len(arr) == 0:
            raise ParameterError("taps must be a non-empty 1-D sequence")
        if len(arr) % 2 == 0:
            raise ParameterError("taps must have odd length (linear phase)")
        if not np.allclose(arr, arr[::-1], atol=1e-12, rtol=0):
            raise ParameterError("taps must be symmetric about the center")
        object.__setattr__(self, "taps", _freeze(arr))
        object.__setattr__(self, "nominal_delay", (len(arr) - 1) // 2)

    def __len__(self) -> int:
        return len(self.taps)


def design_rrc(beta: float, span: int, sps: int) -> FilterTaps:
    """Unit-energy root-raised-cosine taps, ``span * sps + 1`` of them.

    ``beta`` is the roll-off in [0, 1], ``span`` the filter length in
    symbols, ``sps`` samples per symbol.  The removable singularities at
    t = 0 and t = +-Ts/(4 beta) are evaluated by their analytic limits.
    """
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta must be in [0, 1], got {beta}")
    if span < 2:
        raise ParameterError(f"span must be >= 2, got {span}")
    if sps < 2:
        raise ParameterError(f"sps must be >= 2, got {sps}")

    n = span * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps  # in symbol durations
    h = np.empty(n)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1.0 - beta + 4.0 * beta / math.pi
        elif beta > 0 and abs(abs(ti) - 1.0 / (4.0 * beta)) < 1e-12:
            h[i] = (beta / math.sqrt(2.0)) * (
                (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
                + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
            )
        else:
            num = math.sin(math.pi * ti * (1.0 - beta)) + 4.0 * beta * ti * math.cos(
                math.pi * ti * (1.0 + beta)
            )
            den = math.pi * ti * (1.0 - (4.0 * beta * ti) ** 2)
            h[i] = num / den
    h /= np.sqrt(np.sum(h * h))
    return FilterTaps(h)


def fir_filter(x, h: FilterTaps):
    """Linear convolution with group delay compensated; len(out) == len(in)."""
    if len(h.taps) == 0:
        raise ParameterError("empty taps")
    if len(x.samples) == 0:
        raise ParameterError("empty input")
    full = np.convolve(x.samples, h.taps, mode="full")
    d = h.nominal_delay
    out = full[d : d + len(x.samples)]
    return x.with_samples(out)


def upsample(x, factor: int):
    """Insert ``factor - 1`` zeros between samples; sample_rate scales up."""
    if factor < 1:
        raise ParameterError(f"factor must be >= 1, got {factor}")
    s = x.samples
    out = np.zeros(len(s) * factor, dtype=s.dtype)
    out[::factor] = s
    if isinstance(x, ComplexEnvelope):
        return ComplexEnvelope(x.sample_rate * factor, x.center_frequency, out)
    return RealWaveform(x.sample_rate * factor, out)


def downsample(x, factor: int, phase: int = 0):
    """Keep every ``factor``-th sample starting at ``phase``."""
    if factor < 1:
        raise ParameterError(f"factor must be >= 1, got {factor}")
    if not 0 <= phase < factor:
        raise ParameterError(f"phase must be in [0, {factor}), got {phase}")
    out = x.samples[phase::factor]
    if isinstance(x, ComplexEnvelope):
        return ComplexEnvelope(x.sample_rate / factor, x.center_frequency, out)
    return RealWaveform(x.sample_rate / factor, out)


@dataclass(frozen=True)
class Spectrum:
    """Two-sided magnitude spectrum on an absolute frequency axis (Hz)."""

    frequencies: np.ndarray
    magnitude: np.ndarray

    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.magnitude))])


def spectrum(x, nfft: int | None = None, window: str = "rect") -> Spectrum:
    """Magnitude DFT of a waveform or envelope.

    With the default rectangular window the result is Parseval-unitary:
    sum |X|^2 / nfft == sum |x|^2.  ``window="hann"`` applies a Hann taper
    (Parseval then holds for the windowed signal).  For a
    :class:`ComplexEnvelope` the frequency axis is offset by the carrier.
    """
    n = len(x.samples)
    if nfft is None:
        nfft = n
    if nfft < n:
        raise ParameterError(f"nfft={nfft} shorter than signal length {n}")
    if window == "rect":
        s = x.samples
    elif window == "hann":
        s = x.samples * np.hanning(n)
    else:
        raise ParameterError(f"unknown window {window!r}")
    mag = np.abs(np.fft.fftshift(np.fft.fft(s, nfft)))
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / x.sample_rate))
    if isinstance(x, ComplexEnvelope):
        freqs = freqs + x.center_frequency
    return Spectrum(_freeze(freqs), _freeze(mag))


def add_awgn(x: ComplexEnvelope, snr_db: float, seed: int) -> ComplexEnvelope:
    """Add circularly symmetric white Gaussian noise at the requested SNR.

    ``snr_db=inf`` returns the input unchanged.  Deterministic for a fixed
    seed.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return x
    power = float(np.mean(np.abs(x.samples) ** 2))
    if power == 0.0:
        raise ParameterError("cannot set an SNR on a zero-power signal")
    rng = np.random.default_rng(seed)
    sigma2 = power / (10.0 ** (snr_db / 10.0))
    noise = rng.normal(scale=math.sqrt(sigma2 / 2.0), size=(len(x.samples), 2))
    return x.with_samples(x.samples + noise[:, 0] + 1j * noise[:, 1])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_csv(x, path) -> None:
    """Write a waveform as CSV: (index,value) or (index,re,im).

    Values are written with full repr precision so the round-trip is exact.
    """
    complex_kind = isinstance(x, ComplexEnvelope)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        if complex_kind:
            w.writerow(["index", "re", "im"])
            for i, v in enumerate(x.samples):
                w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
        else:
            w.writerow(["index", "value"])
            for i, v in enumerate(x.samples):
                w.writerow([i, repr(float(v))])


def load_csv(path, sample_rate: float, center_frequency: float | None = None):
    """Read a waveform written by :func:`save_csv`.

    The CSV carries no rate metadata, so ``sample_rate`` (and
    ``center_frequency`` for complex data) must be supplied.
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header = rows[0]
    if header == ["index", "re", "im"]:
        samples = np.array([float(r[1]) + 1j * float(r[2]) for r in rows[1:]])
        return ComplexEnvelope(sample_rate, center_frequency or 0.0, samples)
    if header == ["index", "value"]:
        samples = np.array([float(r[1]) for r in rows[1:]])
        return RealWaveform(sample_rate, samples)
    raise ParameterError(f"unrecognized CSV header {header}")


def save_binary(x, path) -> None:
    """Write the little-endian binary container.

    Layout: 16-byte header (magic ``MSAW``, version u16, kind u16, f64
    sample_rate); for complex kind one extra f64 carries the center
    frequency; then f64 samples (complex interleaved re, im).  Bit-exact
    round-trip.
    """
    kind = _KIND_COMPLEX if isinstance(x, ComplexEnvelope) else _KIND_REAL
    with open(path, "wb") as f:
        f.write(struct.pack("<4sHHd", _BIN_MAGIC, _BIN_VERSION, kind, x.sample_rate))
        if kind == _KIND_COMPLEX:
            f.write(struct.pack("<d", x.center_frequency))
            inter = np.empty(2 * len(x.samples))
            inter[0::2] = x.samples.real
            inter[1::2] = x.samples.imag
            f.write(inter.astype("<f8").tobytes())
        else:
            f.write(x.samples.astype("<f8").tobytes())


def load_binary(path):
    """Read a container written by :func:`save_binary`."""
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16:
            raise ParameterError("truncated header")
        magic, version, kind, sample_rate = struct.unpack("<4sHHd", header)
        if magic != _BIN_MAGIC:
            raise ParameterError(f"bad magic {magic!r}")
        if version != _BIN_VERSION:
            raise ParameterError(f"unsupported version {version}")
        if kind == _KIND_COMPLEX:
            (center,) = struct.unpack("<d", f.read(8))
            raw = np.frombuffer(f.read(), dtype="<f8")
            samples = raw[0::2] + 1j * raw[1::2]
            return ComplexEnvelope(sample_rate, center, samples)
        if kind == _KIND_REAL:
            samples = np.frombuffer(f.read(), dtype="<f8")
            return RealWaveform(sample_rate, samples)
        raise ParameterError(f"unknown kind {kind}")
