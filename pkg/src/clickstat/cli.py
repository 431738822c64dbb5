"""Command-line front end: ``clickstat simulate|g2tau|g2dn|phase|reproduce``.

Exit codes: 0 success, 1 a reproduction criterion failed, 2 usage or
configuration error, 3 I/O or file-format error, 4 no estimate possible
(too few clicks, or a chain without photons).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__, conditioner, correlator, reproduce
from .config import DEFAULT_SEED, ConfigError, format_config, load_config, parse_duration
from .core import PumpSchedule, StreamFormatError, atomic_write, read_stream, write_stream
from .phase import PhaseParams, as_pi_fraction, jitter_distribution, phase_jitter
from .simulator import make_rng, simulate

log = logging.getLogger("clickstat")

SEED_ENV = "CLICKSTAT_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO, EXIT_EMPTY = 0, 1, 2, 3, 4


def _duration(text):
    try:
        return parse_duration(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve_seed(cli_seed, fallback):
    if cli_seed is not None:
        return cli_seed, "command line"
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env, 0), f"environment {SEED_ENV}"
    return fallback, "default"


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        return _fail(EXIT_USAGE, f"invalid configuration: {e}")
    except OSError as e:
        return _fail(EXIT_IO, f"cannot read config: {e}")
    seed, source = _resolve_seed(args.seed, cfg.rng_seed)
    if args.seed is None and source == "default":
        source = "config file"
    try:
        cfg = replace(cfg, rng_seed=seed).validate()
    except ConfigError as e:
        return _fail(EXIT_USAGE, f"invalid configuration: {e}")
    out = simulate(cfg)
    try:
        write_stream(out.clicks, args.out)
        manifest = {
            "tool": "clickstat",
            "version": __version__,
            "command": "simulate",
            "seed": cfg.rng_seed,
            "seed_source": source,
            "config": cfg.to_dict(),
            "config_text": format_config(cfg),
            "inputs": {str(args.config): _digest(args.config)},
            "outputs": {str(args.out): _digest(args.out)},
            "counts": {"clicks": len(out.clicks), "atoms": len(out.transits),
                       "emitted_photons": out.emitted_photon_count,
                       "background": out.background_count},
            "wall_clock_s": round(time.perf_counter() - t0, 3),
        }
        atomic_write(f"{args.out}.manifest.json", json.dumps(manifest, indent=2) + "\n")
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write output: {e}")
    print(f"{len(out.clicks)} clicks from {len(out.transits)} atoms -> {args.out}")
    return EXIT_OK


def _read(path):
    try:
        return read_stream(path), None
    except StreamFormatError as e:
        return None, _fail(EXIT_IO, f"{path}: {e}")
    except OSError as e:
        return None, _fail(EXIT_IO, f"cannot read {path}: {e}")


def cmd_g2tau(args) -> int:
    a, err = _read(args.input)
    if err is not None:
        return err
    b = a
    if args.cross:
        b, err = _read(args.cross)
        if err is not None:
            return err
    if args.bin_width <= 0 or args.max_tau < args.bin_width:
        return _fail(EXIT_USAGE, "need bin width > 0 and max tau >= bin width")
    try:
        h = correlator.g2_tau(a, b, args.bin_width, args.max_tau)
    except correlator.EmptyStream as e:
        return _fail(EXIT_EMPTY, str(e))
    except correlator.MismatchedRecordLength as e:
        return _fail(EXIT_USAGE, str(e))
    header = {"input": args.input, "cross": args.cross or "", "detection": "hbt" if args.cross else "auto",
              "bin_width_ns": args.bin_width, "max_tau_ns": args.max_tau,
              "record_length_ns": a.record_length, "clicks_a": len(a), "clicks_b": len(b)}
    try:
        atomic_write(args.out, h.to_csv(header))
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write output: {e}")
    return EXIT_OK


def cmd_g2dn(args) -> int:
    if args.window < 1:
        return _fail(EXIT_USAGE, "window W must be >= 1")
    try:
        sched = PumpSchedule(args.period, args.bright)
    except ValueError as e:
        return _fail(EXIT_USAGE, str(e))
    stream, err = _read(args.input)
    if err is not None:
        return err
    try:
        res, triggers, chain = conditioner.conditioned_g2(
            stream, sched, W=args.window, n_boot=args.bootstrap, seed=args.seed)
    except conditioner.DegenerateChain as e:
        return _fail(EXIT_EMPTY, str(e))
    header = {"input": args.input, "W": args.window, "period_ns": sched.period,
              "bright_ns": sched.bright_duration, "triggers": len(triggers),
              "segments": len(chain), "bootstrap": args.bootstrap}
    try:
        atomic_write(args.out, res.to_csv(header))
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write output: {e}")
    g0, e0 = res.at(0)
    print(f"g2(dN=0) = {g0:.4f} +- {e0:.4f} from {len(chain)} chained intervals")
    return EXIT_OK


def cmd_phase(args) -> int:
    try:
        p = PhaseParams(args.velocity, args.pulse, args.wavelength)
    except ValueError as e:
        return _fail(EXIT_USAGE, str(e))
    phi = phase_jitter(p)
    print(f"phase jitter = {phi:.6g} rad = {as_pi_fraction(phi)}")
    if args.hist:
        st = jitter_distribution(args.velocity, args.pulse, args.wavelength,
                                 args.samples, make_rng(args.seed))
        try:
            atomic_write(args.hist, st.to_csv())
        except OSError as e:
            return _fail(EXIT_IO, f"cannot write histogram: {e}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    t0 = time.perf_counter()
    seed, source = _resolve_seed(args.seed, DEFAULT_SEED)
    ctx, checks = reproduce.run_all(seed)
    try:
        paths = reproduce.write_outputs(args.out_dir, ctx, checks)
        manifest = {
            "tool": "clickstat",
            "version": __version__,
            "command": "reproduce",
            "seed": seed,
            "seed_source": source,
            "config": ctx.config.to_dict(),
            "config_text": format_config(ctx.config),
            "outputs": {p.name: _digest(p) for p in paths},
            "wall_clock_s": round(time.perf_counter() - t0, 3),
        }
        atomic_write(Path(args.out_dir) / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write outputs: {e}")
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clickstat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a click stream from a config file")
    s.add_argument("config")
    s.add_argument("out", help="output stream (.txt for the text form, binary otherwise)")
    s.add_argument("--seed", type=lambda x: int(x, 0))
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("g2tau", help="unconditioned g2(tau) of a stream")
    s.add_argument("input")
    s.add_argument("out")
    s.add_argument("--cross", help="second detector stream (HBT cross-correlation)")
    s.add_argument("--bin-width", type=_duration, default=correlator.DEFAULT_BIN_WIDTH)
    s.add_argument("--max-tau", type=_duration, default=correlator.DEFAULT_MAX_TAU)
    s.set_defaults(func=cmd_g2tau)

    s = sub.add_parser("g2dn", help="conditioned g2(dN)")
    s.add_argument("input")
    s.add_argument("out")
    s.add_argument("--period", type=_duration, default=PumpSchedule().period)
    s.add_argument("--bright", type=_duration, default=PumpSchedule().bright_duration)
    s.add_argument("-W", "--window", type=int, default=conditioner.DEFAULT_W)
    s.add_argument("--bootstrap", type=int, default=conditioner.DEFAULT_BOOTSTRAP)
    s.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    s.set_defaults(func=cmd_g2dn)

    s = sub.add_parser("phase", help="phase jitter from axial atomic motion")
    s.add_argument("--velocity", type=float, required=True, help="mm/s")
    s.add_argument("--pulse", type=_duration, required=True, help="e.g. 2us")
    s.add_argument("--wavelength", type=float, default=795.0, help="nm (default 795)")
    s.add_argument("--hist", help="write |phase| histogram CSV for uniform velocities")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("reproduce", help="run every reproduction check and write CSVs + report")
    s.add_argument("out_dir")
    s.add_argument("--seed", type=lambda x: int(x, 0))
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
