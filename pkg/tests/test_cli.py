"""Command-line interface: outputs, exit codes, and reproducibility."""

import json

import numpy as np
import pytest

from msasim.cli import main
from msasim.sigcore import load_binary

SMALL_CFG = {
    "geometry": {"nx": 8, "ny": 4},
    "codebook": {"optimize_toward_deg": 35.0, "restarts": 4},
    "receivers": [
        {"azimuth_deg": 35.0, "distance_m": 10.0, "snr_db": None},
        {"azimuth_deg": -20.0, "distance_m": 10.0, "snr_db": None},
    ],
    "seed": 3,
    "payload_symbols": 64,
    "orders": [4, 256],
    "pattern": {
        "bias_volts": [0.63, 0.79],
        "angle_start_deg": -90.0,
        "angle_stop_deg": 90.0,
        "angle_step_deg": 2.0,
    },
    "beamform": {"target_deg": 35.0, "restarts": 4, "method": "greedy"},
    "spoof": {
        "blade_count": 2,
        "rotor_hz": 800.0,
        "tip_doppler_hz": 300e3,
        "duration_s": 0.004,
        "rotors": 2,
        "window_len": 128,
        "hop": 32,
        "sample_rate": 2e6,
        "iterations": 30,
    },
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(SMALL_CFG))
    return p


def _run(*argv):
    return main([str(a) for a in argv])


def _tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


class TestLoopback:
    def test_writes_manifest_and_results(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("loopback", "--config", cfg_path, "--out", out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "loopback"
        assert manifest["seed"] == 3
        assert len(manifest["config_sha256"]) == 64
        results = json.loads((out / "loopback.json").read_text())
        assert set(results) == {"4", "256"}
        for r in results.values():
            assert r["ber"] == 0.0
            assert r["evm_percent"] < 0.5

    def test_max_evm_gate(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run(
            "loopback", "--config", cfg_path, "--out", out, "--max-evm", "1e-9"
        ) == 1
        assert _run(
            "loopback", "--config", cfg_path, "--out", out, "--max-evm", "5.0"
        ) == 0

    def test_seed_override_recorded(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("loopback", "--config", cfg_path, "--out", out, "--seed", 99) == 0
        assert json.loads((out / "manifest.json").read_text())["seed"] == 99


class TestLink:
    def test_report_and_constellations(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("link", "--config", cfg_path, "--out", out) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["receivers"]) == 2
        assert report["isotropy"][0][1] > 0.999
        for i in range(2):
            csv_path = out / f"constellation_rx{i}.csv"
            lines = csv_path.read_text().splitlines()
            assert lines[0] == "re,im,ref_re,ref_im"
            assert len(lines) == 1 + 64


class TestPattern:
    def test_per_bias_files(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("pattern", "--config", cfg_path, "--out", out) == 0
        for bias in ("0.63", "0.79"):
            lines = (out / f"pattern_bias_{bias}V.csv").read_text().splitlines()
            assert lines[0] == "angle_deg,gain_db,gain_db_normalized"
            assert len(lines) == 1 + 91  # -90..90 step 2

    def test_normalized_flag(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("pattern", "--config", cfg_path, "--out", out, "--normalized") == 0
        rows = (out / "pattern_bias_0.63V.csv").read_text().splitlines()[1:]
        gains = [float(r.split(",")[1]) for r in rows]
        assert max(gains) == pytest.approx(0.0, abs=1e-12)


class TestBeamform:
    def test_codebook_gain_reproducible(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("beamform", "--config", cfg_path, "--out", out) == 0
        cb = json.loads((out / "codebook.json").read_text())
        assert len(cb["states"]) == 32
        assert set(cb["states"]) <= {0, 1}

        from msasim.beamform import BeamObjective, array_gain
        from msasim.surface import ArrayGeometry, Codebook, PlaneWave

        g = ArrayGeometry(nx=8, ny=4)
        obj = BeamObjective(
            geometry=g,
            k_i=PlaneWave.from_azimuth(0.0, g.f_rf),
            k_t=PlaneWave.from_azimuth(35.0, g.f_rf),
        )
        assert array_gain(Codebook(np.array(cb["states"])), obj) == pytest.approx(
            cb["gain_db"]
        )


class TestSpoof:
    def test_report_and_waveform(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("spoof", "--config", cfg_path, "--out", out) == 0
        report = json.loads((out / "spoof.json").read_text())
        assert len(report["similarities"]) == 2
        assert not report["degenerate"]
        wave = load_binary(out / "waveform.msaw")
        assert wave.sample_rate == 2e6
        assert len(wave) > 0

    def test_iterations_flag(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run(
            "spoof", "--config", cfg_path, "--out", out, "--iterations", 5
        ) == 0


class TestDeterminism:
    @pytest.mark.parametrize("sub", ["loopback", "link", "pattern", "beamform", "spoof"])
    def test_rerun_byte_identical(self, sub, cfg_path, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert _run(sub, "--config", cfg_path, "--out", a) == 0
        assert _run(sub, "--config", cfg_path, "--out", b) == 0
        ta = _tree_bytes(a)
        tb = _tree_bytes(b)
        ta.pop("manifest.json")
        tb.pop("manifest.json")  # manifests differ only in output_dir
        assert ta == tb


class TestErrors:
    def test_missing_config_file(self, tmp_path):
        assert _run("loopback", "--config", tmp_path / "nope.json", "--out", tmp_path) == 2

    def test_malformed_config(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert _run("loopback", "--config", p, "--out", tmp_path / "o") == 2

    def test_unknown_preset(self, tmp_path):
        assert _run("loopback", "--preset", "nope", "--out", tmp_path / "o") == 2

    def test_invalid_scenario_values(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"geometry": {"pitch_m": 0.5}, "receivers": [{"azimuth_deg": 0}]}))
        assert _run("link", "--config", p, "--out", tmp_path / "o") == 2

    def test_preset_runs(self, tmp_path):
        # the built-in preset drives the beamform subcommand end to end
        out = tmp_path / "o"
        assert _run("beamform", "--preset", "paper", "--out", out) == 0
        assert (out / "codebook.json").exists()
