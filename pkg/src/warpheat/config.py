"""Line-oriented ``key = value`` run configuration with per-command schemas."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: str  # float | int | str | floats
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    hint: str = ""


def _between(lo: float, hi: float, closed: bool = False) -> Callable[[float], bool]:
    if closed:
        return lambda v: lo <= v <= hi
    return lambda v: lo < v < hi


def _profile_ok(v: str) -> bool:
    return bool(re.fullmatch(r"example|surrogate|euclidean-[1-9][0-9]*|cone-[0-9]+(\.[0-9]+)?", v))


SCHEDULE = {
    "eta1": Key("float", 0.6, _between(0.0, 1.0), "in (0, 1)"),
    "eta2": Key("float", 0.604, _between(0.0, 1.0), "in (0, 1)"),
    "eps0": Key("float", 2e-5, _between(0.0, 1.0), "in (0, 1)"),
    "n_bands": Key("int", 8, _between(4, 12, closed=True), "in [4, 12]"),
    "omega_decay": Key("float", 0.1, _between(0.0, 1.0), "in (0, 1)"),
}

SOLVER = {
    "n_points": Key("int", 8192, _between(64, 2 ** 20, closed=True), "in [64, 2^20]"),
    "seed_factor": Key("float", 1e-4, _between(0.0, 0.01, closed=False), "in (0, 0.01)"),
    "outer_factor": Key("float", 12.0, _between(4.0, 100.0, closed=True), "in [4, 100]"),
    "steps_per_decade": Key("int", 200, _between(10, 100000, closed=True), "in [10, 1e5]"),
}

SCHEMAS: dict[str, dict[str, Key]] = {
    "params": dict(SCHEDULE),
    "certify": {
        **SCHEDULE,
        "per_band": Key("int", 4096, _between(16, 10 ** 6, closed=True), "in [16, 1e6]"),
        "bands": Key("int", 0, _between(0, 12, closed=True), "in [0, 12]; 0 means all"),
        "window_scale": Key("float", 1e-3, _between(0.0, 0.01, closed=True), "in [0, 0.01]"),
        "slack": Key("float", 0.0, _between(0.0, 1e-6, closed=True), "in [0, 1e-6]"),
    },
    "solve": {
        "profile": Key("str", "euclidean-3", _profile_ok, "euclidean-N | cone-ALPHA | surrogate"),
        "times": Key("floats", [0.5, 1.0, 2.0, 4.0], lambda v: len(v) > 0 and all(x > 0 for x in v)
                     and all(b > a for a, b in zip(v, v[1:])), "positive increasing list"),
        "field_stride": Key("int", 8, _between(1, 10 ** 6, closed=True), ">= 1"),
        **SOLVER,
    },
    "spectral": {
        "profile": Key("str", "euclidean-3", _profile_ok, "euclidean-N | cone-ALPHA | surrogate"),
        "radius": Key("float", 1.0, lambda v: v > 0 and math.isfinite(v), "> 0"),
        "modes": Key("int", 64, _between(1, 4096, closed=True), "in [1, 4096]"),
        "grid": Key("int", 4000, _between(64, 10 ** 6, closed=True), "in [64, 1e6]"),
        "t": Key("float", 1.0, lambda v: v > 0 and math.isfinite(v), "> 0"),
        "radii": Key("floats", [4.0, 6.0, 8.0], lambda v: len(v) > 0 and all(x > 0 for x in v), "positive list"),
        **SOLVER,
    },
    "blowdown": {
        **SCHEDULE,
        "samples": Key("int", 33, _between(3, 1025, closed=True), "in [3, 1025]"),
    },
    "demo-oscillation": {
        "alpha1": Key("float", 6.0, lambda v: 0 < v <= 40, "in (0, 40]"),
        "alpha2": Key("float", 5.0, lambda v: 0 < v <= 40, "in (0, 40]"),
        "boundaries": Key("floats", [1.0, 2.5, 4.5, 7.0], lambda v: len(v) > 0 and all(b > a for a, b in zip(v, v[1:])),
                          "increasing list of log10 radii"),
        "blend": Key("float", 0.05, _between(0.0, 1.0), "in (0, 1) decades"),
        "pad": Key("float", 1.5, _between(0.0, 10.0), "in (0, 10) decades"),
        **SOLVER,
    },
}


def _parse_value(key: str, spec: Key, raw: str) -> Any:
    raw = raw.strip()
    try:
        if spec.kind == "float":
            v: Any = float(raw)
            if not math.isfinite(v):
                raise ValueError
        elif spec.kind == "int":
            v = int(raw)
        elif spec.kind == "floats":
            v = [float(x) for x in raw.replace(",", " ").split()]
        else:
            v = raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {spec.kind}") from None
    if not spec.check(v):
        raise ConfigError(f"{key} = {raw}: out of range ({spec.hint})")
    return v


def _format_value(spec: Key, v: Any) -> str:
    if spec.kind == "float":
        return repr(float(v))
    if spec.kind == "floats":
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def dumps(self) -> str:
        schema = SCHEMAS[self.command]
        lines = [f"# warpheat {self.command}"]
        lines += [f"{k} = {_format_value(schema[k], self.values[k])}" for k in schema]
        return "\n".join(lines) + "\n"


def parse_config(command: str, text: str = "", overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse ``key = value`` lines (``#`` comments) and apply overrides; unknown keys are errors."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    raw: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in schema:
            raise ConfigError(f"line {n}: unknown key {k!r} for {command}")
        if k in raw:
            raise ConfigError(f"line {n}: duplicate key {k!r}")
        raw[k] = v
    for k, v in (overrides or {}).items():
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} for {command}")
        raw[k] = v
    values = {k: (_parse_value(k, s, raw[k]) if k in raw else s.default) for k, s in schema.items()}
    return RunConfig(command, values)


def load_config(command: str, path: str | Path | None, overrides: dict[str, str] | None = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(command, text, overrides)
