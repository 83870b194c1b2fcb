"""``fluxdac`` command-line entry point.

Exit status: 0 success, 1 config or input error, 2 numerical
non-convergence, 3 a self-check reported a failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import harness
from .config import load_config
from .errors import ConfigError, FluxDacError, NonConvergenceError, PresetError
from .records import load_record
from .units import device_to_mapping, load_device_presets

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_CHECK_FAILED = 3
EXIT_USAGE = 64

SEED_ENV = "FLUXDAC_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario JSON file (defaults if omitted)")
    common.add_argument("--out", type=Path, help="output file (stdout if omitted)")
    common.add_argument("--seed", type=_seed, help=f"RNG seed; falls back to ${SEED_ENV}, then the config")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    parser = _Parser(prog="fluxdac", description="Flux-DAC simulation harness.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("plateau", parents=[common], help="flux increment vs bias-pulse amplitude")
    sub.add_parser("sfq-program", parents=[common], help="flux output vs SFQ pulse count")
    sub.add_parser("margins", parents=[common], help="SFQ programming margin vs digit")
    sub.add_parser("spectroscopy", parents=[common], help="qubit f01 vs flux, bias line and DAC")
    sub.add_parser("coherence", parents=[common], help="dephasing rates and T1 vs flux")
    demux = sub.add_parser("demux-check", parents=[common], help="exhaustive DEMUX addressing check")
    demux.add_argument("--depth", type=int, default=4)
    demux.add_argument("--schedules", type=int, default=100)
    cal = sub.add_parser("calibrate", parents=[common], help="fit model parameters to a JSON record")
    cal.add_argument("record", type=Path)
    sub.add_parser("presets", parents=[common], help="list device presets")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return None
    try:
        return _seed(env)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(SEED_ENV, f"invalid seed {env!r}") from exc


def _presets(args) -> str:
    source = None
    if args.config is not None:
        source = load_config(args.config).snapshot.get("presets_file")
    devices = load_device_presets(source)
    maps = [device_to_mapping(d) for d in devices]
    if args.format == "json":
        return json.dumps({"devices": maps}, indent=2, sort_keys=True) + "\n"
    keys = [k for k in maps[0] if k != "meta"] if maps else ["name"]
    return _csv([keys] + [["" if m.get(k) is None else m[k] for k in keys] for m in maps])


def _calibrate(args) -> str:
    record = load_record(args.record)
    fits = harness.calibrate(record)
    if args.format == "json":
        return json.dumps(harness.calibration_document(record, fits), indent=2, sort_keys=True) + "\n"
    return _csv(harness.calibration_rows(fits))


def run(args) -> int:
    if args.command == "presets":
        _emit(_presets(args), args.out)
        return EXIT_OK
    if args.command == "calibrate":
        _emit(_calibrate(args), args.out)
        return EXIT_OK

    cfg = load_config(args.config)
    seed = _resolve_seed(args)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if args.command == "demux-check":
        record = harness.run_demux_check(cfg, args.depth, args.schedules)
        _emit(record.render(args.format), args.out)
        ok = record.metadata["bijective"] and record.metadata["isolated"]
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    record = harness.RUNNERS[args.command](cfg)
    _emit(record.render(args.format), args.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except NonConvergenceError as exc:
        print(f"fluxdac: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ConfigError, PresetError) as exc:
        print(f"fluxdac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"fluxdac: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FluxDacError as exc:
        print(f"fluxdac: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
