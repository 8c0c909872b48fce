"""Flat ``key = value`` run configuration.

``#`` starts a comment, ``[section]`` headers are accepted and ignored, lists
are comma separated.  Every key may appear once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .errors import ConfigError

COMMANDS = ("construct", "verify", "path-search", "distortion", "rotnum", "report")


@dataclass(frozen=True)
class RunConfig:
    d: int
    taus: Tuple[float, ...]
    rhos: Tuple[float, ...] = ()
    base_point: float = 0.0
    window: int = 20
    # path engine
    M0: int = 8
    A_base: Optional[float] = None
    growth_base: Optional[float] = None
    grid: Optional[str] = None  # grid CSV; a seeded random field when absent
    # checks
    iterations: int = 10_000
    holder_samples: int = 10_000
    f_radius: int = 50
    samples: int = 1000
    distortion_n: int = 3
    # run
    command: Optional[str] = None
    out: str = "."
    seed: int = 0

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _int(v: str) -> int:
    return int(v.strip())


def _float(v: str) -> float:
    x = float(v.strip())
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value {v!r}")
    return x


def _floats(v: str) -> Tuple[float, ...]:
    items = [s for s in (p.strip() for p in v.split(",")) if s]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(s) for s in items)


_PARSERS = {
    "d": _int,
    "taus": _floats,
    "rhos": _floats,
    "base_point": _float,
    "window": _int,
    "M0": _int,
    "A_base": _float,
    "growth_base": _float,
    "grid": str.strip,
    "iterations": _int,
    "holder_samples": _int,
    "f_radius": _int,
    "samples": _int,
    "distortion_n": _int,
    "out": str.strip,
    "seed": _int,
}

_POSITIVE = ("window", "M0", "iterations", "holder_samples", "samples", "distortion_n")


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", n)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", n)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key!r}: {exc}", n) from None
        lines[key] = n

    for key in ("d", "taus"):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    d = values["d"]
    if d < 1:
        raise ConfigError("d must be positive", lines["d"])
    for key in ("taus", "rhos"):
        if key in values:
            if len(values[key]) != d:
                raise ConfigError(f"{key} has {len(values[key])} entries but d = {d}", lines[key])
            if any(not 0.0 < v < 1.0 for v in values[key]):
                raise ConfigError(f"every entry of {key} must lie in (0, 1)", lines[key])
    if "base_point" in values and not 0.0 <= values["base_point"] < 1.0:
        raise ConfigError("base_point must lie in [0, 1)", lines["base_point"])
    for key in _POSITIVE:
        if key in values and values[key] < 1:
            raise ConfigError(f"{key} must be positive", lines[key])
    if "f_radius" in values and values["f_radius"] < 0:
        raise ConfigError("f_radius must be non-negative", lines["f_radius"])
    return RunConfig(**values)
