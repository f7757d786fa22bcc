"""Command-line entry point.

Subcommands bind a JSON scenario configuration (or a named preset) to the
pipelines and emit analysis-ready JSON/CSV files.  Every run first writes
``manifest.json`` recording the subcommand, config digest and seed; all
outputs are written atomically (temp file + rename) so a re-run with the
same config and seed reproduces byte-identical files.

Exit codes: 0 success, 1 quality-threshold failure, 2 usage/config error.
Set ``MSA_LOG`` (e.g. DEBUG, INFO) for verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MsaError
from .linksim import run_link, scenario_from_dict
from .modem import ModemConfig, ber, ddc, duc, evm, qam_demap, qam_map
from .presets import preset_config
from .sigcore import ComplexEnvelope, add_awgn, save_binary
from .spoof import rotor_signature, spoof_pipeline
from .surface import PlaneWave, radiation_pattern

log = logging.getLogger("msasim")

EXIT_OK = 0
EXIT_QUALITY = 1
EXIT_USAGE = 2


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_config(args) -> tuple[dict, str]:
    """Resolve config dict and its canonical byte digest."""
    if args.config:
        raw = Path(args.config).read_bytes()
        cfg = json.loads(raw)
        digest = hashlib.sha256(raw).hexdigest()
        source = str(args.config)
    else:
        cfg = preset_config(args.preset)
        canon = json.dumps(cfg, sort_keys=True).encode()
        digest = hashlib.sha256(canon).hexdigest()
        source = f"preset:{args.preset}"
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg, f"{source}|{digest}"


def _write_manifest(out: Path, subcommand: str, source_digest: str, seed: int) -> None:
    source, digest = source_digest.split("|", 1)
    _write_json(
        out / "manifest.json",
        {
            "subcommand": subcommand,
            "config": source,
            "config_sha256": digest,
            "output_dir": str(out),
            "seed": seed,
            "version": __version__,
        },
    )


def _loopback_once(modem: ModemConfig, n_symbols: int, seed: int, snr_db):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_symbols * modem.bits_per_symbol)
    tx_syms = qam_map(bits, modem.qam_order)
    wave = duc(tx_syms, modem)
    env = ComplexEnvelope(wave.sample_rate, 0.0, wave.samples)
    if snr_db is not None and not math.isinf(snr_db):
        env = add_awgn(env, snr_db, seed + 1)
    rx = ddc(env, modem)
    rx_bits = qam_demap(rx, modem.qam_order)
    return evm(rx, tx_syms), ber(rx_bits, bits)


def cmd_loopback(cfg: dict, out: Path, args) -> int:
    modem_d = cfg.get("modem", {})
    orders = cfg.get("orders", [4, 16, 64, 256])
    n_symbols = int(cfg.get("payload_symbols", 256))
    seed = int(cfg.get("seed", 0))
    snr_db = cfg.get("snr_db")
    results = {}
    worst_evm = 0.0
    for order in orders:
        modem = ModemConfig(
            qam_order=int(order),
            symbol_rate=float(modem_d.get("symbol_rate", 2.5e6)),
            sample_rate=float(modem_d.get("sample_rate", 20e6)),
            f_if=float(modem_d.get("f_if", 5e6)),
            rrc_beta=float(modem_d.get("rrc_beta", 0.35)),
            rrc_span=int(modem_d.get("rrc_span", 12)),
        )
        e, b = _loopback_once(modem, n_symbols, seed, snr_db)
        log.info("loopback order=%d evm=%.4f%% ber=%.3g", order, e, b)
        results[str(order)] = {"evm_percent": e, "ber": b, "bit_rate": modem.bit_rate}
        worst_evm = max(worst_evm, e)
    _write_json(out / "loopback.json", results)
    if args.max_evm is not None and worst_evm > args.max_evm:
        log.error("EVM %.3f%% above threshold %.3f%%", worst_evm, args.max_evm)
        return EXIT_QUALITY
    return EXIT_OK


def cmd_link(cfg: dict, out: Path, args) -> int:
    scenario = scenario_from_dict(cfg)
    n_symbols = int(cfg.get("payload_symbols", 256))
    rng = np.random.default_rng(scenario.seed)
    bits = rng.integers(0, 2, n_symbols * scenario.modem.bits_per_symbol)
    report = run_link(scenario, bits)
    _write_json(out / "report.json", report.to_dict())
    ref = qam_map(bits, scenario.modem.qam_order).symbols
    for i, r in enumerate(report.receivers):
        lines = ["re,im,ref_re,ref_im"]
        for s, p in zip(r.symbols, ref):
            lines.append(
                f"{float(s.real)!r},{float(s.imag)!r},"
                f"{float(p.real)!r},{float(p.imag)!r}"
            )
        _atomic_write_text(out / f"constellation_rx{i}.csv", "\n".join(lines) + "\n")
    if args.max_evm is not None:
        worst = max(r.evm_percent for r in report.receivers)
        if worst > args.max_evm:
            log.error("EVM %.3f%% above threshold %.3f%%", worst, args.max_evm)
            return EXIT_QUALITY
    return EXIT_OK


def cmd_pattern(cfg: dict, out: Path, args) -> int:
    scenario = scenario_from_dict(cfg)
    pat = cfg.get("pattern", {})
    biases = pat.get("bias_volts", [0.63, 0.71, 0.79])
    start = float(pat.get("angle_start_deg", -90.0))
    stop = float(pat.get("angle_stop_deg", 90.0))
    step = float(pat.get("angle_step_deg", 0.5))
    angles = np.arange(start, stop + step / 2, step)
    if angles.size == 0:
        raise MsaError("empty angle grid")
    k_i = scenario.incident
    for bias in biases:
        power = radiation_pattern(
            scenario.codebook,
            scenario.geometry,
            k_i,
            float(bias),
            angles,
            scenario.unit_model,
        )
        with np.errstate(divide="ignore"):
            gain_db = 10.0 * np.log10(power)
            norm_db = gain_db - 10.0 * np.log10(np.max(power))
        if args.normalized:
            gain_db = norm_db
        lines = ["angle_deg,gain_db,gain_db_normalized"]
        for a, g, gn in zip(angles, gain_db, norm_db):
            lines.append(f"{float(a)!r},{float(g)!r},{float(gn)!r}")
        _atomic_write_text(
            out / f"pattern_bias_{bias:.2f}V.csv", "\n".join(lines) + "\n"
        )
    return EXIT_OK


def cmd_beamform(cfg: dict, out: Path, args) -> int:
    from .beamform import BeamObjective, array_gain, optimize_exhaustive, optimize_greedy

    scenario = scenario_from_dict(cfg)
    bf = cfg.get("beamform", {})
    target = float(bf.get("target_deg", 45.0))
    objective = BeamObjective(
        geometry=scenario.geometry,
        k_i=scenario.incident,
        k_t=PlaneWave.from_azimuth(target, scenario.geometry.f_rf),
        theta=scenario.codebook.theta,
    )
    method = bf.get("method", "greedy")
    if method == "exhaustive":
        codebook = optimize_exhaustive(objective)
    elif method == "greedy":
        codebook = optimize_greedy(
            objective, restarts=int(bf.get("restarts", 8)), seed=scenario.seed
        )
    else:
        raise MsaError(f"unknown beamform method {method!r}")
    _write_json(
        out / "codebook.json",
        {
            "states": [int(s) for s in codebook.states],
            "gain_db": array_gain(codebook, objective),
            "target_deg": target,
            "method": method,
        },
    )
    return EXIT_OK


def cmd_spoof(cfg: dict, out: Path, args) -> int:
    scenario = scenario_from_dict(cfg)
    sp = cfg.get("spoof", {})
    target = rotor_signature(
        blade_count=int(sp.get("blade_count", 2)),
        rotor_hz=float(sp.get("rotor_hz", 800.0)),
        tip_doppler_hz=float(sp.get("tip_doppler_hz", 300e3)),
        duration_s=float(sp.get("duration_s", 0.01)),
        rotors=int(sp.get("rotors", 2)),
        window_len=int(sp.get("window_len", 256)),
        hop=int(sp.get("hop", 64)),
        sample_rate=float(sp.get("sample_rate", 2e6)),
    )
    iterations = args.iterations or int(sp.get("iterations", 100))
    report = spoof_pipeline(target, scenario, iterations=iterations)
    _write_json(out / "spoof.json", report.to_dict())
    save_binary(report.waveform, out / "waveform.msaw")
    return EXIT_OK


_COMMANDS = {
    "loopback": cmd_loopback,
    "link": cmd_link,
    "pattern": cmd_pattern,
    "beamform": cmd_beamform,
    "spoof": cmd_spoof,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msasim",
        description="Metasurface superheterodyne backscatter transmitter simulator",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON scenario file")
        p.add_argument("--preset", default="paper", help="named built-in preset")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument(
            "--normalized", action="store_true", help="emit peak-normalized patterns"
        )
        p.add_argument("--iterations", type=int, default=None, help="Griffin-Lim iterations")
        p.add_argument(
            "--max-evm", type=float, default=None, help="fail (exit 1) above this EVM %%"
        )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MSA_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, source_digest = _load_config(args)
    except (OSError, ValueError, MsaError) as exc:
        print(f"msasim: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        _write_manifest(out, args.subcommand, source_digest, int(cfg.get("seed", 0)))
        return _COMMANDS[args.subcommand](cfg, out, args)
    except MsaError as exc:
        print(f"msasim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError, TypeError) as exc:
        print(f"msasim: config error: {exc!r}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
