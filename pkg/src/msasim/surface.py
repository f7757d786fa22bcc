"""Magnitude-phase-decoupled metasurface model.

Per-unit reflection is the product of a fast-time modulation factor (the
voltage-controlled magnitude) and a slow-time phase factor (the 1-bit
state phase).  This module covers the behavioral voltage->reflection
curves, the circuit-level diode mixer, steering vectors, the reflected
field in both the decoupled (factored) and direct-sum forms, and far-field
radiation patterns.

Coordinate convention: surface in the x-y plane, broadside = +z; azimuth
angles are cuts in the x-z plane.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, ParameterError
from .sigcore import ComplexEnvelope, RealWaveform

SPEED_OF_LIGHT = 299792458.0

# per-state phase convention: state 0 -> -25 deg, state 1 -> 170 deg
DEFAULT_PHASES_RAD = (math.radians(-25.0), math.radians(170.0))


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar rectangular array of unit cells."""

    nx: int = 16
    ny: int = 10
    pitch: float = 0.018
    f_rf: float = 5.8e9

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be >= 1")
        if self.pitch <= 0:
            raise ConfigError("pitch must be positive")
        lam = SPEED_OF_LIGHT / self.f_rf
        if self.pitch >= lam / 2:
            raise ConfigError(
                f"pitch {self.pitch} m >= lambda/2 = {lam / 2:.4g} m (grating lobes)"
            )

    @property
    def n_units(self) -> int:
        return self.nx * self.ny

    def positions(self) -> np.ndarray:
        """(N, 3) element positions, grid centered on the origin, z = 0."""
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        x = (ix.ravel() - (self.nx - 1) / 2.0) * self.pitch
        y = (iy.ravel() - (self.ny - 1) / 2.0) * self.pitch
        return np.column_stack([x, y, np.zeros(self.n_units)])


@dataclass(frozen=True)
class PlaneWave:
    """Propagation direction (unit 3-vector) and frequency of a plane wave."""

    direction: np.ndarray
    frequency: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if d.shape != (3,):
            raise ParameterError("direction must be a 3-vector")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ParameterError("direction must be unit norm")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "direction", d)

    @classmethod
    def from_azimuth(cls, azimuth_deg: float, frequency: float, elevation_deg: float = 0.0):
        az = math.radians(azimuth_deg)
        el = math.radians(elevation_deg)
        d = np.array([math.sin(az) * math.cos(el), math.sin(el), math.cos(az) * math.cos(el)])
        return cls(d / np.linalg.norm(d), frequency)

    def wavevector(self) -> np.ndarray:
        return self.direction * (2.0 * math.pi * self.frequency / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class Codebook:
    """1-bit state per unit plus the two per-state phase constants."""

    states: np.ndarray
    theta: tuple[float, float] = DEFAULT_PHASES_RAD

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.int8)
        if s.ndim != 1 or np.any((s != 0) & (s != 1)):
            raise ParameterError("states must be a 1-D vector of 0/1")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "states", s)

    def __len__(self) -> int:
        return len(self.states)

    def unit_phases(self) -> np.ndarray:
        """Per-unit phase factor angles theta_n in radians."""
        return np.where(self.states == 0, self.theta[0], self.theta[1])

    @classmethod
    def uniform(cls, n: int, state: int = 0, theta=DEFAULT_PHASES_RAD):
        return cls(np.full(n, state, dtype=np.int8), theta)


def perturbed_phases(codebook: Codebook, seed: int, max_dev_deg: float = 15.0) -> np.ndarray:
    """Per-unit phases with a seeded uniform perturbation within +-max_dev_deg.

    Models the measured phase spread of real units; use as the
    ``unit_phases`` override of :func:`reflected_field`.
    """
    rng = np.random.default_rng(seed)
    dev = rng.uniform(-math.radians(max_dev_deg), math.radians(max_dev_deg), len(codebook))
    return codebook.unit_phases() + dev


class UnitReflectionModel:
    """Voltage -> |reflection| curves and constant phase for both states.

    The magnitude curves are monotone piecewise-linear over the drive
    voltage range; the phase of each state is independent of voltage by
    construction.
    """

    def __init__(self, v_grid, mag_state0, mag_state1, phase0_rad, phase1_rad):
        v = np.asarray(v_grid, dtype=np.float64)
        m0 = np.asarray(mag_state0, dtype=np.float64)
        m1 = np.asarray(mag_state1, dtype=np.float64)
        if v.ndim != 1 or len(v) < 2:
            raise ConfigError("need at least two voltage anchors")
        if m0.shape != v.shape or m1.shape != v.shape:
            raise ConfigError("magnitude arrays must match the voltage grid")
        if np.any(np.diff(v) <= 0):
            raise ConfigError("voltage grid must be strictly increasing")
        for m in (m0, m1):
            d = np.diff(m)
            if not (np.all(d >= 0) or np.all(d <= 0)):
                raise ConfigError("magnitude curves must be monotone")
            if np.any(m < 0) or np.any(m > 1):
                raise ConfigError("magnitudes must lie in [0, 1]")
        dphi = abs(_wrap_deg(math.degrees(phase1_rad - phase0_rad)))
        if abs(dphi - 180.0) > 15.0 + 1e-9:
            raise ConfigError(
                f"per-state phase difference {dphi:.1f} deg outside 180 +- 15 deg"
            )
        self.v_grid = v
        self.mag = (m0, m1)
        self.phase = (float(phase0_rad), float(phase1_rad))

    @property
    def v_min(self) -> float:
        return float(self.v_grid[0])

    @property
    def v_max(self) -> float:
        return float(self.v_grid[-1])

    def magnitude(self, state: int, v, warn_clip: bool = True):
        """Piecewise-linear |Gamma| at drive voltage v; out of range clips."""
        if state not in (0, 1):
            raise ParameterError("state must be 0 or 1")
        v = np.asarray(v, dtype=np.float64)
        if warn_clip and (np.any(v < self.v_min) or np.any(v > self.v_max)):
            warnings.warn(
                "drive voltage outside the model range; clipping (hardware "
                "would saturate)",
                RuntimeWarning,
                stacklevel=2,
            )
        return np.interp(v, self.v_grid, self.mag[state])

    @classmethod
    def preset(cls, name: str = "fig3e") -> "UnitReflectionModel":
        """Built-in presets over the 0.63-0.79 V published bias range.

        ``fig3e``: state-0 magnitude 0.3->1.0, state-1 0.1->0.7 (tied to the
        published bias voltages; the default).  ``intro``: 0.2->1.0 and
        0.1->0.8.  Higher bias gives higher magnitude in both.
        """
        if name == "fig3e":
            return cls([0.63, 0.79], [0.3, 1.0], [0.1, 0.7], *DEFAULT_PHASES_RAD)
        if name == "intro":
            return cls([0.63, 0.79], [0.2, 1.0], [0.1, 0.8], *DEFAULT_PHASES_RAD)
        raise ParameterError(f"unknown preset {name!r}")

    @classmethod
    def from_csv(cls, path) -> "UnitReflectionModel":
        """Load curves from CSV: volts, mag_state0, mag_state1, phase0_deg, phase1_deg."""
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        if rows and rows[0][0].strip().lower() in ("volts", "v"):
            rows = rows[1:]
        data = np.array([[float(c) for c in r] for r in rows])
        if data.shape[1] != 5:
            raise ParameterError("expected 5 columns: volts, mag0, mag1, phase0_deg, phase1_deg")
        p0 = np.radians(data[:, 3])
        p1 = np.radians(data[:, 4])
        if np.ptp(p0) > 1e-9 or np.ptp(p1) > 1e-9:
            raise ConfigError("per-state phase must be constant over voltage")
        return cls(data[:, 0], data[:, 1], data[:, 2], float(p0[0]), float(p1[0]))

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["volts", "mag_state0", "mag_state1", "phase0_deg", "phase1_deg"])
            for i, v in enumerate(self.v_grid):
                w.writerow([
                    repr(float(v)),
                    repr(float(self.mag[0][i])),
                    repr(float(self.mag[1][i])),
                    repr(math.degrees(self.phase[0])),
                    repr(math.degrees(self.phase[1])),
                ])


def _wrap_deg(x: float) -> float:
    return (x + 180.0) % 360.0 - 180.0


def reflection_coefficient(v, state: int, model: UnitReflectionModel):
    """Complex Gamma = m_state(v) * exp(j phi_state); scalar or array in v."""
    mag = model.magnitude(state, v)
    return mag * np.exp(1j * model.phase[state])


# ---------------------------------------------------------------------------
# circuit-level diode mixer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiodeModel:
    """Exponential diode around an operating point, with the derived
    small-signal coefficients of its second-order Taylor expansion."""

    i_s: float = 1e-12
    alpha: float = 38.7
    v_0: float = 0.536

    def __post_init__(self):
        if self.i_s <= 0 or self.alpha <= 0:
            raise ConfigError("i_s and alpha must be positive")

    @property
    def i_0(self) -> float:
        return self.i_s * (math.exp(self.alpha * self.v_0) - 1.0)

    @property
    def r_d(self) -> float:
        """Dynamic resistance 1 / (dI/dV) at the operating point."""
        return 1.0 / (self.i_s * self.alpha * math.exp(self.alpha * self.v_0))

    @property
    def r_d_prime(self) -> float:
        """Second-order coefficient: i2 = dv^2 / (2 r_d_prime)."""
        return 1.0 / (self.i_s * self.alpha**2 * math.exp(self.alpha * self.v_0))


def diode_current(v, model: DiodeModel):
    """Exact exponential diode current I_s (exp(alpha v) - 1)."""
    v = np.asarray(v, dtype=np.float64)
    return model.i_s * (np.exp(model.alpha * v) - 1.0)


def mixer_ac_current(
    v_rf: RealWaveform, v_if: RealWaveform, model: DiodeModel, mode: str = "taylor"
) -> RealWaveform:
    """Small-signal AC mixer current for superimposed RF and IF drives.

    ``taylor``: the quadratic term of the expansion around the operating
    point, (v_rf + v_if)^2 / (2 r_d'), whose cross product carries the
    f_rf +- f_if conversion products.  ``exact``: the full exponential
    response minus its DC and linear terms.
    """
    if abs(v_rf.sample_rate - v_if.sample_rate) > 1e-9:
        raise ParameterError("v_rf and v_if must share a sample rate")
    if len(v_rf) != len(v_if):
        raise ParameterError("v_rf and v_if must have equal length")
    dv = v_rf.samples + v_if.samples
    if mode == "taylor":
        i_ac = dv**2 / (2.0 * model.r_d_prime)
    elif mode == "exact":
        i_total = model.i_s * (np.exp(model.alpha * (model.v_0 + dv)) - 1.0)
        i_ac = i_total - model.i_0 - dv / model.r_d
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return RealWaveform(v_rf.sample_rate, i_ac)


# ---------------------------------------------------------------------------
# array response
# ---------------------------------------------------------------------------

def steering_vector(geom: ArrayGeometry, k_r: PlaneWave, k_i: PlaneWave) -> np.ndarray:
    """Per-element phase response exp(-j (k_i + k_r) . r_n), length nx*ny."""
    for wave in (k_r, k_i):
        if abs(wave.frequency - geom.f_rf) > 1e-6:
            raise ConfigError(
                f"plane wave frequency {wave.frequency} != geometry f_rf {geom.f_rf}"
            )
    k_sum = k_i.wavevector() + k_r.wavevector()
    return np.exp(-1j * (geom.positions() @ k_sum))


class GammaSum:
    """Per-state modulation-factor traces for one drive waveform.

    Retains the state structure so the per-unit factors gamma_n(tau) and
    their phase terms remain reconstructable.
    """

    def __init__(self, sample_rate, state_mag, codebook: Codebook, clipped: bool):
        self.sample_rate = float(sample_rate)
        self.state_mag = state_mag  # (2, T) magnitude traces
        self.codebook = codebook
        self.clipped = bool(clipped)
        self.counts = (
            int(np.sum(codebook.states == 0)),
            int(np.sum(codebook.states == 1)),
        )

    def total(self) -> RealWaveform:
        """gamma_sum(tau) = sum_n m_{state(n)}(v(tau))."""
        return RealWaveform(
            self.sample_rate,
            self.counts[0] * self.state_mag[0] + self.counts[1] * self.state_mag[1],
        )

    def unit_factor(self, n: int) -> np.ndarray:
        """gamma_n(tau) for unit n (magnitude only; phase via the codebook)."""
        return self.state_mag[self.codebook.states[n]]

    def state_envelope(self, state: int) -> ComplexEnvelope:
        """Summed complex factor of one state group, phase included."""
        phase = np.exp(1j * self.codebook.theta[state])
        return ComplexEnvelope(
            self.sample_rate, 0.0, self.counts[state] * self.state_mag[state] * phase
        )


def gamma_sum(v_if, codebook: Codebook, model: UnitReflectionModel) -> GammaSum:
    """Evaluate the per-state modulation factors for a drive waveform.

    ``v_if`` is a :class:`RealWaveform` in volts shared by both state
    groups, or a dict ``{0: wf, 1: wf}`` with one drive per state group
    (the hardware exposes one IF port per diode type).  Out-of-range
    voltages clip, with the flag recorded on the result.
    """
    if isinstance(v_if, dict):
        drives = {0: v_if[0], 1: v_if[1]}
        if abs(drives[0].sample_rate - drives[1].sample_rate) > 1e-9 or len(
            drives[0]
        ) != len(drives[1]):
            raise ParameterError("state-group drives must share rate and length")
    else:
        drives = {0: v_if, 1: v_if}
    clipped = any(
        np.any(d.samples < model.v_min) or np.any(d.samples > model.v_max)
        for d in drives.values()
    )
    if clipped:
        warnings.warn(
            "drive voltage outside the model range; clipping (hardware would saturate)",
            RuntimeWarning,
            stacklevel=2,
        )
    state_mag = np.stack(
        [model.magnitude(s, drives[s].samples, warn_clip=False) for s in (0, 1)]
    )
    return GammaSum(drives[0].sample_rate, state_mag, codebook, clipped)


def reflected_field(
    gamma: GammaSum,
    codebook: Codebook,
    geom: ArrayGeometry,
    k_r: PlaneWave,
    k_i: PlaneWave,
    mode: str = "coupled",
    unit_phases: np.ndarray | None = None,
) -> ComplexEnvelope:
    """Reflected complex envelope at outgoing direction ``k_r``.

    ``coupled`` sums the per-unit contributions directly,
    E(tau) = sum_n gamma_n(tau) exp(j phi_n) v_n.  ``factored`` evaluates
    the decoupled model: the summed modulation trace times a fixed beam
    factor weighted by each unit's reference magnitude.  The two agree
    whenever the per-state magnitude curves are proportional (see
    :func:`factorization_residual`).
    """
    if len(codebook) != geom.n_units:
        raise ParameterError("codebook length must match the geometry")
    v = steering_vector(geom, k_r, k_i)
    phases = codebook.unit_phases() if unit_phases is None else np.asarray(unit_phases)
    if len(phases) != geom.n_units:
        raise ParameterError("unit_phases length must match the geometry")
    w_v = np.exp(1j * phases) * v
    group = [w_v[codebook.states == s].sum() for s in (0, 1)]
    if mode == "coupled":
        samples = gamma.state_mag[0] * group[0] + gamma.state_mag[1] * group[1]
    elif mode == "factored":
        total = gamma.total().samples
        ref = int(np.argmax(np.abs(total)))
        c_ref = (
            gamma.counts[0] * gamma.state_mag[0][ref]
            + gamma.counts[1] * gamma.state_mag[1][ref]
        )
        beam = gamma.state_mag[0][ref] * group[0] + gamma.state_mag[1][ref] * group[1]
        samples = total * (beam / c_ref)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return ComplexEnvelope(gamma.sample_rate, geom.f_rf, samples)


def factorization_residual(
    gamma: GammaSum,
    codebook: Codebook,
    geom: ArrayGeometry,
    k_r: PlaneWave,
    k_i: PlaneWave,
) -> float:
    """max_tau |direct - factored| / max_tau |factored| at one direction."""
    direct = reflected_field(gamma, codebook, geom, k_r, k_i, mode="coupled").samples
    fact = reflected_field(gamma, codebook, geom, k_r, k_i, mode="factored").samples
    denom = float(np.max(np.abs(fact)))
    if denom == 0.0:
        raise ParameterError("factored field is identically zero")
    return float(np.max(np.abs(direct - fact)) / denom)


def radiation_pattern(
    codebook: Codebook,
    geom: ArrayGeometry,
    k_i: PlaneWave,
    bias_v: float,
    angle_grid_deg,
    model: UnitReflectionModel,
    normalized: bool = False,
) -> np.ndarray:
    """Azimuth-cut power pattern |m(bias) sum_n exp(j theta_n) v_n(angle)|^2.

    The bias enters as one scalar magnitude (the mean of the two state
    curves at ``bias_v``), so the normalized shape is bias-invariant and
    the absolute pattern scales with bias.
    """
    angles = np.asarray(angle_grid_deg, dtype=np.float64)
    if angles.size == 0:
        raise ParameterError("empty angle grid")
    if np.any(np.abs(angles) > 90.0):
        raise ParameterError("angle grid must stay within +-90 deg of broadside")
    m = 0.5 * (
        float(model.magnitude(0, bias_v)) + float(model.magnitude(1, bias_v))
    )
    k_mag = 2.0 * math.pi * geom.f_rf / SPEED_OF_LIGHT
    az = np.radians(angles)
    k_out = np.column_stack([np.sin(az), np.zeros_like(az), np.cos(az)]) * k_mag
    k_sums = k_out + k_i.wavevector()[None, :]
    weights = m * np.exp(1j * codebook.unit_phases())
    power = _kernels.pattern_direct_sum(k_sums, geom.positions(), weights)
    if normalized:
        peak = float(np.max(power))
        if peak > 0:
            power = power / peak
    return power
