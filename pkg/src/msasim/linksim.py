"""End-to-end backscatter scenario engine.

Carrier illumination from one direction, metasurface modulation and
beamforming, propagation to multiple receivers, demodulation, and symbol
isotropy verification.  Frames are 64 pilot symbols (derived from the
scenario seed, known at the receiver) followed by the payload.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FramingError, ParameterError
from .modem import (
    DacConfig,
    ModemConfig,
    SymbolStream,
    ber,
    ddc,
    duc,
    evm,
    qam_demap,
    qam_map,
    to_dac,
)
from .sigcore import ComplexEnvelope, RealWaveform
from .surface import (
    ArrayGeometry,
    Codebook,
    PlaneWave,
    UnitReflectionModel,
    gamma_sum,
    perturbed_phases,
    reflected_field,
)

PILOT_SYMBOLS = 64


@dataclass(frozen=True)
class ReceiverSpec:
    """One receiver: outgoing azimuth, range, and optional noise level.

    ``snr_db`` is the SNR of the modulated (DC-removed) envelope component;
    ``None`` means noiseless.
    """

    azimuth_deg: float
    distance_m: float = 10.0
    snr_db: float | None = None

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ParameterError("distance must be positive")


@dataclass
class ScenarioConfig:
    """Everything needed to run one link: surface, modem, and receivers."""

    geometry: ArrayGeometry
    unit_model: UnitReflectionModel
    codebook: Codebook
    modem: ModemConfig
    dac: DacConfig
    incident_azimuth_deg: float
    receivers: list[ReceiverSpec]
    path_loss: bool = False
    seed: int = 0
    phase_perturb_deg: float | None = None
    drive: RealWaveform | None = None
    field_mode: str = "coupled"

    def __post_init__(self):
        if not self.receivers:
            raise ParameterError("need at least one receiver")
        if len(self.codebook) != self.geometry.n_units:
            raise ParameterError("codebook length must match the geometry")

    @property
    def incident(self) -> PlaneWave:
        return PlaneWave.from_azimuth(self.incident_azimuth_deg, self.geometry.f_rf)

    def unit_phase_override(self) -> np.ndarray | None:
        if self.phase_perturb_deg is None:
            return None
        return perturbed_phases(self.codebook, self.seed, self.phase_perturb_deg)


@dataclass
class ReceiverReport:
    symbols: np.ndarray
    evm_percent: float
    ber: float
    power_db: float


@dataclass
class LinkReport:
    """Per-receiver metrics plus the pairwise isotropy matrix."""

    receivers: list[ReceiverReport]
    isotropy: np.ndarray
    bits_tx: np.ndarray
    bits_rx: list[np.ndarray] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "receivers": [
                {
                    "evm_percent": r.evm_percent,
                    "ber": r.ber,
                    "power_db": r.power_db,
                    "n_symbols": int(len(r.symbols)),
                }
                for r in self.receivers
            ],
            "isotropy": self.isotropy.tolist(),
        }


def pilot_stream(scenario: ScenarioConfig) -> SymbolStream:
    """The known pilot block, a pure function of the scenario seed."""
    k = scenario.modem.bits_per_symbol
    rng = np.random.default_rng([scenario.seed, 0x70696C6F])
    bits = rng.integers(0, 2, PILOT_SYMBOLS * k)
    return qam_map(bits, scenario.modem.qam_order)


def transmit_drive(scenario: ScenarioConfig, bits) -> RealWaveform:
    """qam_map -> duc -> to_dac for one frame (pilot + payload)."""
    k = scenario.modem.bits_per_symbol
    bits = np.asarray(bits)
    if len(bits) % k != 0:
        raise FramingError(f"bit count {len(bits)} not divisible by {k}")
    payload = qam_map(bits, scenario.modem.qam_order)
    pilot = pilot_stream(scenario)
    frame = SymbolStream(
        np.concatenate([pilot.symbols, payload.symbols]), scenario.modem.qam_order
    )
    return to_dac(duc(frame, scenario.modem), scenario.dac)


def received_envelope(
    scenario: ScenarioConfig, receiver_index: int, drive: RealWaveform | None = None
) -> ComplexEnvelope:
    """Reflected envelope at one receiver, with optional 1/d loss and noise.

    The DC (bias) component is retained; the receiver removes it.
    """
    if not 0 <= receiver_index < len(scenario.receivers):
        raise ParameterError(f"invalid receiver index {receiver_index}")
    if drive is None:
        drive = scenario.drive
    if drive is None:
        raise ParameterError("no drive waveform: pass one or set scenario.drive")
    rx = scenario.receivers[receiver_index]
    gs = gamma_sum(drive, scenario.codebook, scenario.unit_model)
    k_r = PlaneWave.from_azimuth(rx.azimuth_deg, scenario.geometry.f_rf)
    env = reflected_field(
        gs,
        scenario.codebook,
        scenario.geometry,
        k_r,
        scenario.incident,
        mode=scenario.field_mode,
        unit_phases=scenario.unit_phase_override(),
    )
    samples = env.samples
    if scenario.path_loss:
        samples = samples / rx.distance_m
    if rx.snr_db is not None and not math.isinf(rx.snr_db):
        ac = samples - np.mean(samples)
        ac_power = float(np.mean(np.abs(ac) ** 2))
        if ac_power == 0.0:
            raise ParameterError("cannot set an SNR on an unmodulated envelope")
        sigma2 = ac_power / (10.0 ** (rx.snr_db / 10.0))
        rng = np.random.default_rng([scenario.seed, 0x6E6F6973, receiver_index])
        noise = rng.normal(scale=math.sqrt(sigma2 / 2.0), size=(len(samples), 2))
        samples = samples + noise[:, 0] + 1j * noise[:, 1]
    return ComplexEnvelope(env.sample_rate, env.center_frequency, samples)


def receiver_baseband(env: ComplexEnvelope) -> ComplexEnvelope:
    """Derotate by the carrier (DC) phase and remove the DC bias component."""
    mean = np.mean(env.samples)
    rot = np.exp(-1j * np.angle(mean)) if mean != 0 else 1.0
    samples = env.samples * rot
    return env.with_samples(samples - np.mean(samples))


def run_link(scenario: ScenarioConfig, bits) -> LinkReport:
    """Full chain: map, DUC, DAC, surface, per-receiver envelope, DDC, demap."""
    bits = np.asarray(bits)
    drive = transmit_drive(scenario, bits)
    payload_ref = qam_map(bits, scenario.modem.qam_order)
    pilot = pilot_stream(scenario)

    reports = []
    bits_rx = []
    payloads = []
    for i in range(len(scenario.receivers)):
        env = received_envelope(scenario, i, drive)
        power_db = 10.0 * math.log10(float(np.mean(np.abs(env.samples) ** 2)))
        bb = receiver_baseband(env)
        recovered = ddc(bb, scenario.modem, timing_offset=0, pilot=pilot)
        payload = SymbolStream(
            recovered.symbols[PILOT_SYMBOLS:], scenario.modem.qam_order
        )
        rx_bits = qam_demap(payload, scenario.modem.qam_order)
        reports.append(
            ReceiverReport(
                symbols=payload.symbols,
                evm_percent=evm(payload, payload_ref),
                ber=ber(rx_bits, bits),
                power_db=power_db,
            )
        )
        bits_rx.append(rx_bits)
        payloads.append(payload.symbols)

    n = len(reports)
    iso = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            iso[a, b] = iso[b, a] = isotropy_metric(payloads[a], payloads[b])
    return LinkReport(receivers=reports, isotropy=iso, bits_tx=bits, bits_rx=bits_rx)


def isotropy_metric(sym_a, sym_b) -> float:
    """|<a, b>| / (||a|| ||b||): 1.0 iff equal up to one complex scale."""
    a = sym_a.symbols if isinstance(sym_a, SymbolStream) else np.asarray(sym_a)
    b = sym_b.symbols if isinstance(sym_b, SymbolStream) else np.asarray(sym_b)
    if len(a) != len(b):
        raise ParameterError("length mismatch")
    if len(a) < 16:
        raise ParameterError("need at least 16 symbols")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ParameterError("zero vector")
    return float(np.abs(np.vdot(a, b)) / (na * nb))


# ---------------------------------------------------------------------------
# JSON scenario files
# ---------------------------------------------------------------------------

def scenario_from_dict(cfg: dict) -> ScenarioConfig:
    """Build a scenario from the JSON schema shared by all CLI subcommands."""
    geom_d = cfg.get("geometry", {})
    geometry = ArrayGeometry(
        nx=int(geom_d.get("nx", 16)),
        ny=int(geom_d.get("ny", 10)),
        pitch=float(geom_d.get("pitch_m", 0.018)),
        f_rf=float(geom_d.get("f_rf_hz", 5.8e9)),
    )
    um = cfg.get("unit_model", {})
    if "csv" in um:
        unit_model = UnitReflectionModel.from_csv(um["csv"])
    else:
        unit_model = UnitReflectionModel.preset(um.get("preset", "fig3e"))
    modem_d = cfg.get("modem", {})
    modem = ModemConfig(
        qam_order=int(modem_d.get("qam_order", 256)),
        symbol_rate=float(modem_d.get("symbol_rate", 2.5e6)),
        sample_rate=float(modem_d.get("sample_rate", 20e6)),
        f_if=float(modem_d.get("f_if", 5e6)),
        rrc_beta=float(modem_d.get("rrc_beta", 0.35)),
        rrc_span=int(modem_d.get("rrc_span", 12)),
    )
    dac_d = cfg.get("dac", {})
    v_min = float(dac_d.get("v_min", 0.63))
    v_max = float(dac_d.get("v_max", 0.79))
    dac = DacConfig(
        v_min=v_min,
        v_max=v_max,
        resolution_bits=int(dac_d.get("resolution_bits", 14)),
        bias=float(dac_d.get("bias", (v_min + v_max) / 2.0)),
    )
    if "receivers" not in cfg or not cfg["receivers"]:
        raise ParameterError("scenario must declare at least one receiver")
    receivers = [
        ReceiverSpec(
            azimuth_deg=float(r["azimuth_deg"]),
            distance_m=float(r.get("distance_m", 10.0)),
            snr_db=None if r.get("snr_db") is None else float(r["snr_db"]),
        )
        for r in cfg["receivers"]
    ]
    seed = int(cfg.get("seed", 0))
    cb_d = cfg.get("codebook", {})
    theta = (
        math.radians(float(cb_d.get("theta0_deg", -25.0))),
        math.radians(float(cb_d.get("theta1_deg", 170.0))),
    )
    incident_deg = float(cfg.get("incident", {}).get("azimuth_deg", 0.0))
    if "states" in cb_d:
        codebook = Codebook(np.asarray(cb_d["states"]), theta)
    elif "optimize_toward_deg" in cb_d:
        # local import: beamform depends on surface, not on linksim
        from .beamform import BeamObjective, optimize_greedy

        objective = BeamObjective(
            geometry=geometry,
            k_i=PlaneWave.from_azimuth(incident_deg, geometry.f_rf),
            k_t=PlaneWave.from_azimuth(
                float(cb_d["optimize_toward_deg"]), geometry.f_rf
            ),
            theta=theta,
        )
        codebook = optimize_greedy(
            objective, restarts=int(cb_d.get("restarts", 8)), seed=seed
        )
    else:
        codebook = Codebook.uniform(geometry.n_units, 0, theta)
    perturb = cfg.get("phase_perturb_deg")
    return ScenarioConfig(
        geometry=geometry,
        unit_model=unit_model,
        codebook=codebook,
        modem=modem,
        dac=dac,
        incident_azimuth_deg=incident_deg,
        receivers=receivers,
        path_loss=bool(cfg.get("path_loss", False)),
        seed=seed,
        phase_perturb_deg=None if perturb is None else float(perturb),
        field_mode=str(cfg.get("field_mode", "coupled")),
    )


def scenario_from_json(path) -> ScenarioConfig:
    with open(path) as f:
        return scenario_from_dict(json.load(f))
