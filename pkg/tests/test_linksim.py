"""End-to-end link scenarios, isotropy, and JSON configuration."""

import json

import numpy as np
import pytest

from msasim.errors import ParameterError
from msasim.linksim import (
    PILOT_SYMBOLS,
    ReceiverSpec,
    ScenarioConfig,
    isotropy_metric,
    pilot_stream,
    received_envelope,
    receiver_baseband,
    run_link,
    scenario_from_dict,
    scenario_from_json,
    transmit_drive,
)
from msasim.modem import DacConfig, ModemConfig
from msasim.surface import ArrayGeometry, Codebook, UnitReflectionModel


def _scenario(nx=8, ny=4, receivers=None, seed=3, **kw):
    g = ArrayGeometry(nx=nx, ny=ny)
    rng = np.random.default_rng(seed)
    cb = Codebook(rng.integers(0, 2, g.n_units).astype(np.int8))
    return ScenarioConfig(
        geometry=g,
        unit_model=UnitReflectionModel.preset("fig3e"),
        codebook=cb,
        modem=ModemConfig(**kw.pop("modem", {})),
        dac=DacConfig(),
        incident_azimuth_deg=0.0,
        receivers=receivers or [ReceiverSpec(azimuth_deg=30.0)],
        seed=seed,
        **kw,
    )


def _bits(scenario, n_sym, seed=0):
    k = scenario.modem.bits_per_symbol
    return np.random.default_rng(seed).integers(0, 2, n_sym * k)


class TestScenarioConfig:
    def test_requires_receivers(self):
        g = ArrayGeometry(nx=8, ny=4)
        with pytest.raises(ParameterError):
            ScenarioConfig(
                geometry=g,
                unit_model=UnitReflectionModel.preset("fig3e"),
                codebook=Codebook.uniform(g.n_units),
                modem=ModemConfig(),
                dac=DacConfig(),
                incident_azimuth_deg=0.0,
                receivers=[],
            )

    def test_codebook_geometry_coupling(self):
        g = ArrayGeometry(nx=8, ny=4)
        with pytest.raises(ParameterError):
            ScenarioConfig(
                geometry=g,
                unit_model=UnitReflectionModel.preset("fig3e"),
                codebook=Codebook.uniform(4),
                modem=ModemConfig(),
                dac=DacConfig(),
                incident_azimuth_deg=0.0,
                receivers=[ReceiverSpec(azimuth_deg=0.0)],
            )

    def test_receiver_distance_positive(self):
        with pytest.raises(ParameterError):
            ReceiverSpec(azimuth_deg=0.0, distance_m=-1.0)


class TestPilotAndDrive:
    def test_pilot_is_seed_deterministic(self):
        s = _scenario()
        a = pilot_stream(s)
        b = pilot_stream(s)
        np.testing.assert_array_equal(a.symbols, b.symbols)
        assert len(a) == PILOT_SYMBOLS

    def test_different_seed_different_pilot(self):
        a = pilot_stream(_scenario(seed=1))
        b = pilot_stream(_scenario(seed=2))
        assert not np.array_equal(a.symbols, b.symbols)

    def test_drive_length_and_range(self):
        s = _scenario()
        bits = _bits(s, 32)
        drive = transmit_drive(s, bits)
        expect = (PILOT_SYMBOLS + 32) * s.modem.sps + 2 * s.modem.guard_samples
        assert len(drive) == expect
        assert np.all(drive.samples >= s.dac.v_min - 1e-12)
        assert np.all(drive.samples <= s.dac.v_max + 1e-12)

    def test_ragged_bits_rejected(self):
        s = _scenario()
        from msasim.errors import FramingError

        with pytest.raises(FramingError):
            transmit_drive(s, np.zeros(13, dtype=int))


class TestReceivedEnvelope:
    def test_requires_drive(self):
        s = _scenario()
        with pytest.raises(ParameterError):
            received_envelope(s, 0)

    def test_invalid_receiver_index(self):
        s = _scenario()
        drive = transmit_drive(s, _bits(s, 16))
        with pytest.raises(ParameterError):
            received_envelope(s, 5, drive)

    def test_path_loss_scales_inverse_distance(self):
        near = _scenario(
            receivers=[ReceiverSpec(azimuth_deg=30.0, distance_m=10.0)], path_loss=True
        )
        far = _scenario(
            receivers=[ReceiverSpec(azimuth_deg=30.0, distance_m=20.0)], path_loss=True
        )
        drive = transmit_drive(near, _bits(near, 16))
        a = received_envelope(near, 0, drive).samples
        b = received_envelope(far, 0, drive).samples
        np.testing.assert_allclose(a, 2.0 * b, rtol=1e-12)

    def test_noise_deterministic_per_receiver(self):
        s = _scenario(
            receivers=[
                ReceiverSpec(azimuth_deg=30.0, snr_db=20.0),
                ReceiverSpec(azimuth_deg=-10.0, snr_db=20.0),
            ]
        )
        drive = transmit_drive(s, _bits(s, 16))
        a = received_envelope(s, 0, drive).samples
        b = received_envelope(s, 0, drive).samples
        np.testing.assert_array_equal(a, b)
        c = received_envelope(s, 1, drive).samples
        assert not np.array_equal(a, c)

    def test_receiver_baseband_removes_dc(self):
        s = _scenario()
        drive = transmit_drive(s, _bits(s, 16))
        bb = receiver_baseband(received_envelope(s, 0, drive))
        assert abs(np.mean(bb.samples)) < 1e-9 * np.max(np.abs(bb.samples))


class TestRunLink:
    def test_noiseless_link_decodes_exactly(self):
        s = _scenario(
            receivers=[ReceiverSpec(azimuth_deg=30.0), ReceiverSpec(azimuth_deg=-25.0)]
        )
        bits = _bits(s, 64)
        rep = run_link(s, bits)
        for r, rx in zip(rep.receivers, rep.bits_rx):
            assert r.ber == 0.0
            assert r.evm_percent < 0.5
            np.testing.assert_array_equal(rx, bits)
        assert rep.isotropy[0, 1] > 0.999

    def test_moderate_snr_4qam_still_decodes(self):
        s = _scenario(
            receivers=[ReceiverSpec(azimuth_deg=30.0, snr_db=30.0)],
            modem={"qam_order": 4},
        )
        bits = _bits(s, 128)
        rep = run_link(s, bits)
        assert rep.receivers[0].ber == 0.0

    def test_isotropy_matrix_shape(self):
        s = _scenario(
            receivers=[
                ReceiverSpec(azimuth_deg=30.0),
                ReceiverSpec(azimuth_deg=0.0),
                ReceiverSpec(azimuth_deg=-45.0),
            ]
        )
        rep = run_link(s, _bits(s, 32))
        assert rep.isotropy.shape == (3, 3)
        np.testing.assert_allclose(np.diag(rep.isotropy), 1.0)
        np.testing.assert_allclose(rep.isotropy, rep.isotropy.T)

    def test_report_dict_is_json_ready(self):
        s = _scenario()
        rep = run_link(s, _bits(s, 24))
        d = rep.to_dict()
        json.dumps(d)
        assert d["receivers"][0]["n_symbols"] == 24


class TestIsotropyMetric:
    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=64) + 1j * rng.normal(size=64)
        assert isotropy_metric(a, a * (0.3 - 2.1j)) == pytest.approx(1.0)

    def test_independent_vectors_score_low(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=512) + 1j * rng.normal(size=512)
        b = rng.normal(size=512) + 1j * rng.normal(size=512)
        assert isotropy_metric(a, b) < 0.2

    def test_validation(self):
        with pytest.raises(ParameterError):
            isotropy_metric(np.ones(8), np.ones(8))  # too short
        with pytest.raises(ParameterError):
            isotropy_metric(np.ones(32), np.ones(16))
        with pytest.raises(ParameterError):
            isotropy_metric(np.zeros(32), np.ones(32))


class TestJsonScenario:
    def _cfg(self):
        return {
            "geometry": {"nx": 8, "ny": 4},
            "codebook": {"states": [0, 1] * 16},
            "receivers": [{"azimuth_deg": 30.0, "snr_db": 25.0}],
            "seed": 7,
        }

    def test_round_trip_from_file(self, tmp_path):
        p = tmp_path / "scenario.json"
        p.write_text(json.dumps(self._cfg()))
        s = scenario_from_json(p)
        assert s.geometry.n_units == 32
        assert s.seed == 7
        assert s.receivers[0].snr_db == 25.0
        np.testing.assert_array_equal(s.codebook.states, [0, 1] * 16)

    def test_defaults_match_prototype(self):
        s = scenario_from_dict({"receivers": [{"azimuth_deg": 0.0}]})
        assert s.geometry.nx == 16 and s.geometry.ny == 10
        assert s.modem.bit_rate == pytest.approx(20e6)
        assert s.dac.v_min == 0.63 and s.dac.v_max == 0.79

    def test_optimized_codebook_deterministic(self):
        cfg = {
            "geometry": {"nx": 8, "ny": 4},
            "codebook": {"optimize_toward_deg": 40.0, "restarts": 4},
            "receivers": [{"azimuth_deg": 40.0}],
            "seed": 11,
        }
        a = scenario_from_dict(cfg)
        b = scenario_from_dict(cfg)
        np.testing.assert_array_equal(a.codebook.states, b.codebook.states)

    def test_missing_receivers_rejected(self):
        with pytest.raises(ParameterError):
            scenario_from_dict({"receivers": []})
