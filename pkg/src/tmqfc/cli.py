"""Command-line entry point: ``simulate <config> [--out DIR] [--threads N] [--dump-green]``.

Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped,
4 I/O error, 1 anything else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import tomli_w

from .config import RunConfig, parse_config
from .errors import ConfigError, GuardError, MatrixFormatError, TMQFCError
from .io import atomic_write_bytes, dump_matrix, write_table
from .runner import derived_quantities, run_experiment, stage_green

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_IO = 4


def _plain(value):
    """Convert numpy scalars and nested containers to TOML-serializable values."""
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def sidecar_text(cfg: RunConfig, derived: dict, summary: dict) -> str:
    doc = cfg.to_dict()
    doc["derived"] = _plain(derived)
    doc["summary"] = _plain(summary)
    return tomli_w.dumps(doc)


def summary_line(name: str, summary: dict) -> str:
    parts = [name]
    for key, value in summary.items():
        if isinstance(value, (bool, np.bool_)):
            parts.append(f"{key}={bool(value)}")
        elif isinstance(value, (int, float, np.floating, np.integer)):
            parts.append(f"{key}={float(value):.6g}")
    return " ".join(parts)


def execute(cfg: RunConfig, threads: int = 1) -> list[Path]:
    """Run the experiment and write its outputs; returns the paths written."""
    out_dir = Path(cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            result, stage = run_experiment(cfg, pool.map)
    else:
        result, stage = run_experiment(cfg)
    name = result.name
    written = []
    try:
        table = out_dir / f"{name}.csv"
        write_table(table, result.axes, result.rows)
        written.append(table)
        meta = out_dir / f"{name}.meta.toml"
        text = sidecar_text(cfg, derived_quantities(cfg, stage), result.summary)
        atomic_write_bytes(meta, text.encode("utf-8"))
        written.append(meta)
        if cfg.output.dump_green:
            green = out_dir / f"{name}.green.bin"
            dump_matrix(stage_green(cfg, stage), green)
            written.append(green)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    print(summary_line(name, result.summary))
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simulate", description="Run a temporal-mode interferometer experiment.")
    ap.add_argument("config", help="TOML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    ap.add_argument("--dump-green", action="store_true", help="also write the stage-1 Green matrix")
    ap.add_argument("--format", choices=["csv"], default="csv", help="result table format")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
        output = cfg.output
        if args.out:
            output = replace(output, directory=args.out)
        if args.dump_green:
            output = replace(output, dump_green=True)
        cfg = replace(cfg, output=output)
        execute(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (OSError, MatrixFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TMQFCError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
