"""Command-line entry point: run one scenario and write its outputs.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from openhk import __version__
from openhk.config import ConfigError, ScenarioConfig, from_dict, to_dict
from openhk.dynamics import NumericalError
from openhk.ensemble import TimeGrid, realization_seed, run_ensemble
from openhk.io import OutputError, write_events, write_manifest, write_opinions, write_series
from openhk.open_process import simulate_open_realization

log = logging.getLogger("openhk")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

# flag -> (config key, type)
FLAGS = {
    "--mode": ("mode", str),
    "--n0": ("n0", int),
    "--a": ("a", float),
    "--b": ("b", float),
    "--lambda-a": ("lambda_a", float),
    "--lambda-d": ("lambda_d", float),
    "--t-end": ("t_end", float),
    "--dt": ("h", float),
    "--grid": ("grid_points", int),
    "--realizations": ("realizations", int),
    "--seed": ("master_seed", int),
    "--out-dir": ("out_dir", str),
    "--traces": ("traces", int),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="openhk",
        description="Monte Carlo runs of closed or open Hegselmann-Krause dynamics.",
    )
    p.add_argument("--config", type=Path, help="JSON scenario document; flags override it")
    for flag, (key, typ) in FLAGS.items():
        kwargs = {"choices": ("closed", "open")} if key == "mode" else {}
        p.add_argument(flag, dest=key, type=typ, default=None, **kwargs)
    p.add_argument("--threads", type=int, default=None, help="worker threads (capped by OPENHK_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    doc = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {args.config} ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config", "expected a JSON object")
    for key, _ in FLAGS.values():
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    return from_dict(doc)


def run_scenario(cfg: ScenarioConfig, threads: int | None = None) -> list[Path]:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror}") from exc
    sim = cfg.to_open_config()
    grid = TimeGrid.uniform(0.0, cfg.t_end, cfg.grid_points)

    log.info("running %d %s realizations", cfg.realizations, cfg.mode)
    stats = run_ensemble(sim, cfg.realizations, cfg.master_seed, grid, threads)
    written = [write_series(stats, out / "series.csv")]
    for k in range(cfg.traces):
        trace = simulate_open_realization(sim, realization_seed(cfg.master_seed, k), grid.points)
        written.append(write_events(trace, out / f"events_{k}.csv"))
        written.append(write_opinions(trace, out / f"opinions_{k}.csv"))
    names = [p.name for p in written]
    written.append(write_manifest(out / "manifest.json", to_dict(cfg), __version__, names))
    return written


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
        paths = run_scenario(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
