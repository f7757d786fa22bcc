"""Gray-coded QAM mapping and the digital up/down conversion chain.

The DUC splits a symbol stream into I/Q, upsamples, RRC-shapes, and mixes
to a real IF waveform ``I*cos - Q*sin``.  The DDC is its inverse: complex
mix to baseband, matched RRC filter (which doubles as the image-reject
low-pass), symbol-rate sampling and an optional pilot-aided single
complex-gain normalization.

Frozen bit-mapping convention
-----------------------------
For order M with k = log2(M) bits per symbol, the first k/2 bits (MSB
first) select the I level and the last k/2 the Q level.  Each half is a
Gray code g; its binary decode i places the level at (L-1) - 2*i with
L = sqrt(M) levels per axis, so the all-zeros group maps to the most
positive level.  The constellation is scaled to unit average power:
bits ``00`` at order 4 map to (+1+j)/sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, FramingError, ParameterError, SyncError
from .sigcore import ComplexEnvelope, RealWaveform, design_rrc, fir_filter, upsample

SUPPORTED_ORDERS = (4, 16, 64, 256, 1024)


@dataclass(frozen=True)
class ModemConfig:
    """Rates and pulse-shaping parameters of the DUC/DDC chain."""

    qam_order: int = 256
    symbol_rate: float = 2.5e6
    sample_rate: float = 20e6
    f_if: float = 5e6
    rrc_beta: float = 0.35
    rrc_span: int = 12

    def __post_init__(self):
        if self.qam_order not in SUPPORTED_ORDERS:
            raise ConfigError(f"qam_order must be one of {SUPPORTED_ORDERS}")
        if self.symbol_rate <= 0 or self.sample_rate <= 0:
            raise ConfigError("rates must be positive")
        ratio = self.sample_rate / self.symbol_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError(
                f"sample_rate must be an integer multiple of symbol_rate "
                f"(got ratio {ratio})"
            )
        if not 0.0 <= self.rrc_beta <= 1.0:
            raise ConfigError("rrc_beta must be in [0, 1]")
        if self.rrc_span < 2:
            raise ConfigError("rrc_span must be >= 2")
        # sideband separability: IF clear of the shaped baseband lobe
        min_if = (1.0 + self.rrc_beta) * self.symbol_rate / 2.0
        if self.f_if <= min_if:
            raise ConfigError(f"f_if must exceed (1+beta)*Rs/2 = {min_if:g} Hz")
        if self.f_if >= self.sample_rate / 2.0:
            raise ConfigError("f_if must be below Nyquist")

    @property
    def sps(self) -> int:
        return int(round(self.sample_rate / self.symbol_rate))

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.qam_order))

    @property
    def bit_rate(self) -> float:
        return self.symbol_rate * self.bits_per_symbol

    @property
    def guard_samples(self) -> int:
        """Half-span guard added by duc() on each side of the frame."""
        return self.rrc_span * self.sps // 2


@dataclass(frozen=True)
class SymbolStream:
    """Sequence of complex symbols tagged with the constellation order."""

    symbols: np.ndarray
    qam_order: int

    def __post_init__(self):
        if self.qam_order not in SUPPORTED_ORDERS:
            raise ParameterError(f"qam_order must be one of {SUPPORTED_ORDERS}")
        arr = np.array(self.symbols, dtype=np.complex128, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class DacConfig:
    """Voltage range and resolution of the drive DAC."""

    v_min: float = 0.63
    v_max: float = 0.79
    resolution_bits: int = 14
    bias: float = 0.71

    def __post_init__(self):
        if not self.v_min < self.bias < self.v_max:
            raise ConfigError("need v_min < bias < v_max")
        if not 8 <= self.resolution_bits <= 16:
            raise ConfigError("resolution_bits must be in [8, 16]")


def _gray_decode(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _gray_encode(b: np.ndarray) -> np.ndarray:
    return b ^ (b >> 1)


@lru_cache(maxsize=None)
def constellation(order: int) -> np.ndarray:
    """Unit-average-power constellation indexed by the symbol's bit word.

    Index i is the integer value of the bit group (I bits high, MSB
    first).  The table realizes the frozen Gray convention documented in
    the module docstring.
    """
    if order not in SUPPORTED_ORDERS:
        raise ParameterError(f"order must be one of {SUPPORTED_ORDERS}")
    k = int(np.log2(order))
    kh = k // 2
    levels_per_axis = 1 << kh
    idx = np.arange(order)
    gi = idx >> kh
    gq = idx & (levels_per_axis - 1)
    li = (levels_per_axis - 1) - 2 * _gray_decode(gi)
    lq = (levels_per_axis - 1) - 2 * _gray_decode(gq)
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    pts = (li + 1j * lq) / scale
    pts.flags.writeable = False
    return pts


def qam_map(bits, order: int) -> SymbolStream:
    """Map a bit sequence to Gray-coded square QAM symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("bits must be 0/1")
    k = int(np.log2(order))
    if len(bits) % k != 0:
        raise FramingError(f"bit count {len(bits)} not divisible by {k}")
    words = bits.reshape(-1, k)
    idx = words @ (1 << np.arange(k - 1, -1, -1))
    return SymbolStream(constellation(order)[idx], order)


def qam_demap(symbols, order: int) -> np.ndarray:
    """Hard-decision demapping: nearest constellation point, inverse Gray.

    Ties break toward the smallest constellation index.
    """
    if isinstance(symbols, SymbolStream):
        sym = symbols.symbols
    else:
        sym = np.asarray(symbols, dtype=np.complex128)
    const = constellation(order)
    k = int(np.log2(order))
    out = np.empty((len(sym), k), dtype=np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    chunk = 1 << 16
    for lo in range(0, len(sym), chunk):
        block = sym[lo : lo + chunk]
        d2 = np.abs(block[:, None] - const[None, :]) ** 2
        idx = np.argmin(d2, axis=1)  # argmin returns the first (smallest) index
        out[lo : lo + len(block)] = (idx[:, None] & weights[None, :]) != 0
    return out.reshape(-1)


def _shaped_iq(stream: SymbolStream, cfg: ModemConfig):
    """Upsampled, guard-padded, RRC-shaped I and Q branches."""
    taps = design_rrc(cfg.rrc_beta, cfg.rrc_span, cfg.sps)
    g = cfg.guard_samples
    shaped = []
    for branch in (stream.symbols.real, stream.symbols.imag):
        up = upsample(RealWaveform(cfg.symbol_rate, branch), cfg.sps)
        padded = np.concatenate([np.zeros(g), up.samples, np.zeros(g)])
        shaped.append(
            fir_filter(RealWaveform(cfg.sample_rate, padded), taps).samples
        )
    return shaped[0], shaped[1]


def duc(stream: SymbolStream, cfg: ModemConfig) -> RealWaveform:
    """Digital up-conversion of a symbol stream to a real IF waveform.

    Output carries a half-span guard on each side so edge symbols keep
    their full pulse; symbol k peaks at sample ``cfg.guard_samples + k*sps``.
    """
    i_sig, q_sig = _shaped_iq(stream, cfg)
    n = np.arange(len(i_sig))
    phase = 2.0 * np.pi * cfg.f_if * n / cfg.sample_rate
    out = i_sig * np.cos(phase) - q_sig * np.sin(phase)
    return RealWaveform(cfg.sample_rate, out)


def to_dac(x: RealWaveform, dac: DacConfig) -> RealWaveform:
    """Map a waveform into the DAC voltage range and quantize.

    [-max|x|, +max|x|] maps affinely onto the configured range centered at
    ``bias``; levels span the endpoints inclusive, step
    (v_max - v_min) / (2^bits - 1).
    """
    if len(x.samples) == 0:
        raise ParameterError("empty input")
    m = float(np.max(np.abs(x.samples)))
    if m == 0.0:
        return x.with_samples(np.full(len(x.samples), dac.bias))
    half = min(dac.v_max - dac.bias, dac.bias - dac.v_min)
    y = dac.bias + x.samples * (half / m)
    step = (dac.v_max - dac.v_min) / (2**dac.resolution_bits - 1)
    q = np.round((y - dac.v_min) / step) * step + dac.v_min
    return x.with_samples(q)


def ddc(
    rx: ComplexEnvelope,
    cfg: ModemConfig,
    timing_offset: int = 0,
    pilot: SymbolStream | None = None,
) -> SymbolStream:
    """Digital down-conversion: the inverse of :func:`duc`.

    ``timing_offset`` is the sample index where the DUC frame starts (as
    returned by :func:`frame_sync`); symbol k is then sampled at
    ``timing_offset + guard + k*sps``.  If ``pilot`` is given, the leading
    ``len(pilot)`` symbols are assumed known and a single complex gain is
    estimated from them by least squares and divided out.
    """
    if abs(rx.sample_rate - cfg.sample_rate) > 1e-6:
        raise ConfigError(
            f"rx sample rate {rx.sample_rate} != config {cfg.sample_rate}"
        )
    n = np.arange(len(rx.samples))
    z = rx.samples * np.exp(-2j * np.pi * cfg.f_if * n / cfg.sample_rate)
    taps = design_rrc(cfg.rrc_beta, cfg.rrc_span, cfg.sps)
    filt = fir_filter(ComplexEnvelope(cfg.sample_rate, 0.0, z), taps).samples
    start = timing_offset + cfg.guard_samples
    n_sym = (len(filt) - timing_offset - 2 * cfg.guard_samples) // cfg.sps
    if n_sym <= 0:
        raise ParameterError("waveform too short for one symbol")
    sym = 2.0 * filt[start : start + n_sym * cfg.sps : cfg.sps]
    if pilot is not None:
        p = pilot.symbols
        if len(p) > len(sym):
            raise ParameterError("pilot longer than recovered stream")
        r = sym[: len(p)]
        gain = np.vdot(p, r) / np.vdot(p, p)
        sym = sym / gain
    return SymbolStream(sym, cfg.qam_order)


def frame_sync(rx: ComplexEnvelope, preamble: SymbolStream, cfg: ModemConfig) -> int:
    """Locate the frame start by cross-correlating with the shaped preamble.

    Returns the earliest correlation-peak offset; raises :class:`SyncError`
    if the peak does not stand 3x above the median correlation magnitude.
    """
    if len(preamble) < 16:
        raise ParameterError("preamble must be >= 16 symbols")
    ref = duc(preamble, cfg).samples
    if len(rx.samples) < len(ref):
        raise ParameterError("rx shorter than the preamble waveform")
    corr = np.correlate(rx.samples, ref, mode="valid")
    mag = np.abs(corr)
    peak = int(np.argmax(mag))  # earliest on ties
    med = float(np.median(mag))
    if mag[peak] < 3.0 * med:
        raise SyncError(
            f"no reliable sync peak (peak {mag[peak]:.3g} < 3 x median {med:.3g})"
        )
    return peak


def evm(rx: SymbolStream, ref: SymbolStream) -> float:
    """RMS error vector magnitude in percent of the reference RMS."""
    if len(rx) != len(ref):
        raise ParameterError("length mismatch")
    err = rx.symbols - ref.symbols
    return float(
        np.sqrt(np.mean(np.abs(err) ** 2) / np.mean(np.abs(ref.symbols) ** 2)) * 100.0
    )


def ber(bits_rx, bits_ref) -> float:
    """Bit error rate: Hamming distance over length."""
    a = np.asarray(bits_rx)
    b = np.asarray(bits_ref)
    if len(a) != len(b):
        raise ParameterError("length mismatch")
    if len(a) == 0:
        raise ParameterError("empty bit streams")
    return float(np.mean(a != b))
