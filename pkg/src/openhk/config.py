"""Scenario documents: JSON in, validated :class:`ScenarioConfig` out."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any

from openhk.dynamics import DEFAULT_STEP
from openhk.ensemble import DEFAULT_GRID_POINTS
from openhk.open_process import OpenConfig, OpinionLaw

MODES = ("closed", "open")
DEFAULTS: dict[str, Any] = {
    "lambda_a": None,
    "lambda_d": None,
    "h": DEFAULT_STEP,
    "grid_points": DEFAULT_GRID_POINTS,
    "realizations": 1000,
    "master_seed": 0,
    "out_dir": "out",
    "traces": 0,
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    n0: int
    a: float
    b: float
    t_end: float
    lambda_a: float | None = None
    lambda_d: float | None = None
    h: float = DEFAULT_STEP
    grid_points: int = DEFAULT_GRID_POINTS
    realizations: int = 1000
    master_seed: int = 0
    out_dir: str = "out"
    traces: int = 0

    def to_open_config(self) -> OpenConfig:
        law = OpinionLaw(self.a, self.b)
        closed = self.mode == "closed"
        return OpenConfig(
            lambda_a=math.nan if closed else self.lambda_a,
            lambda_d=math.nan if closed else self.lambda_d,
            n0=self.n0,
            init_law=law,
            t_end=self.t_end,
            h=self.h,
            closed=closed,
        )


FIELDS = tuple(f.name for f in dataclasses.fields(ScenarioConfig))
REQUIRED = tuple(k for k in FIELDS if k not in DEFAULTS)


def _number(key: str, value: Any, *, positive: bool = False, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(key, f"expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(key, f"must be > 0, got {value!r}")
    return float(value)


def _integer(key: str, value: Any, *, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value!r}")
    return value


def from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "expected a JSON object")
    unknown = sorted(set(doc) - set(FIELDS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    missing = [k for k in REQUIRED if k not in doc]
    if missing:
        raise ConfigError(missing[0], "required key is missing")
    d = {**DEFAULTS, **doc}

    mode = d["mode"]
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {mode!r}")
    a = _number("a", d["a"])
    b = _number("b", d["b"])
    if not a < b:
        raise ConfigError("b", f"must exceed a ({a}), got {b}")
    lambdas = {}
    for key in ("lambda_a", "lambda_d"):
        if mode == "open" and d[key] is None:
            raise ConfigError(key, "required in open mode")
        lambdas[key] = _number(key, d[key], positive=True, allow_none=True)
    out_dir = d["out_dir"]
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("out_dir", f"expected a non-empty path string, got {out_dir!r}")

    return ScenarioConfig(
        mode=mode,
        n0=_integer("n0", d["n0"], minimum=0),
        a=a,
        b=b,
        t_end=_number("t_end", d["t_end"], positive=True),
        h=_number("h", d["h"], positive=True),
        grid_points=_integer("grid_points", d["grid_points"], minimum=1),
        realizations=_integer("realizations", d["realizations"], minimum=1),
        master_seed=_integer("master_seed", d["master_seed"], minimum=0),
        out_dir=out_dir,
        traces=_integer("traces", d["traces"], minimum=0),
        **lambdas,
    )


def parse_config(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON ({exc})") from exc
    return from_dict(doc)


def to_dict(config: ScenarioConfig) -> dict[str, Any]:
    return dataclasses.asdict(config)


def normalize(doc: dict[str, Any]) -> dict[str, Any]:
    """The document with defaults filled in, in field order."""
    full = {**DEFAULTS, **doc}
    return {k: full[k] for k in FIELDS}


def emit(config: ScenarioConfig) -> str:
    return json.dumps(to_dict(config), indent=2)
