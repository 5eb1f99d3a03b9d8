"""CSV and JSON outputs. Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from openhk.ensemble import OBSERVABLES, EnsembleStats, TimeGrid
from openhk.open_process import Trace

SERIES_HEADER = ["t"] + [f"{p}_{o}" for o in OBSERVABLES for p in ("mean", "var")] + ["count"]
EVENTS_HEADER = ["time", "kind", "agent_id", "opinion", "n_after"]
OPINIONS_HEADER = ["time", "agent_id", "opinion"]


class OutputError(OSError):
    pass


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_rows(path, header: list[str], rows) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_series(stats: EnsembleStats, path) -> Path:
    if stats.count.size == 0 or int(stats.count.min()) < 1:
        raise ValueError("refusing to write an empty ensemble")
    rows = []
    for k, t in enumerate(stats.grid.points):
        row = [fmt(t)]
        for name in OBSERVABLES:
            row += [fmt(stats.mean[name][k]), fmt(stats.var[name][k])]
        row.append(str(int(stats.count[k])))
        rows.append(row)
    return _write_rows(path, SERIES_HEADER, rows)


def read_series(path) -> EnsembleStats:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SERIES_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    cols = list(zip(*rows))
    col = {name: cols[i] for i, name in enumerate(SERIES_HEADER)}
    as_float = lambda name: np.array([float(v) for v in col[name]])  # noqa: E731
    return EnsembleStats(
        grid=TimeGrid(as_float("t")),
        mean={o: as_float(f"mean_{o}") for o in OBSERVABLES},
        var={o: as_float(f"var_{o}") for o in OBSERVABLES},
        count=np.array([int(v) for v in col["count"]], dtype=np.int64),
    )


def write_events(trace: Trace, path) -> Path:
    rows = (
        [
            fmt(e.time),
            e.kind.value,
            "" if e.agent is None else str(e.agent),
            "" if e.opinion is None else fmt(e.opinion),
            str(e.n_after),
        ]
        for e in trace.events
    )
    return _write_rows(path, EVENTS_HEADER, rows)


def write_opinions(trace: Trace, path) -> Path:
    """Long-format sampled opinions, one row per agent per sample time."""
    rows = (
        [fmt(s.time), str(int(i)), fmt(x)]
        for s in trace.samples
        for i, x in zip(s.ids, s.opinions)
    )
    return _write_rows(path, OPINIONS_HEADER, rows)


def write_manifest(path, config: dict[str, Any], version: str, outputs: list[str]) -> Path:
    path = Path(path)
    doc = {
        "version": version,
        "master_seed": config.get("master_seed"),
        "config": config,
        "outputs": outputs,
    }
    try:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
