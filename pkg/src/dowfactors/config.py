"""
Run configuration.

Stored as a flat ``key=value`` text file; every key has a matching
command-line flag (underscores become dashes) and flags win over the file.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    data: str = ""
    out: str = "out"
    target: tuple[str, ...] = ("DIS",)
    seed: int = 42
    k: int = 3
    k_max: int = 10
    restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-6
    trees: int = 100
    depth: int = 6
    min_leaf: int = 2
    mtry: int = 0
    bootstrap: bool = True
    stages: int = 100
    learning_rate: float = 0.1
    boost_depth: int = 3
    split: str = "temporal"
    bins: int = 20
    hml: Optional[str] = None
    risk_free: Optional[str] = None
    index: Optional[str] = None

    def check(self) -> "Config":
        """Range-check numeric settings; returns self for chaining."""
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(len(self.target) >= 1 and all(self.target), "target must name at least one ticker")
        need(self.seed >= 0, "seed must be >= 0")
        need(self.k >= 1, "k must be >= 1")
        need(self.k_max >= 1, "k_max must be >= 1")
        need(self.restarts >= 1, "restarts must be >= 1")
        need(self.max_iter >= 1, "max_iter must be >= 1")
        need(self.tol >= 0, "tol must be >= 0")
        need(self.trees >= 1, "trees must be >= 1")
        need(self.depth >= 0, "depth must be >= 0")
        need(self.boost_depth >= 0, "boost_depth must be >= 0")
        need(self.min_leaf >= 1, "min_leaf must be >= 1")
        need(self.mtry >= 0, "mtry must be >= 0 (0 selects ceil(p/3))")
        need(self.stages >= 0, "stages must be >= 0")
        need(0 < self.learning_rate <= 1, "learning_rate must lie in (0, 1]")
        need(self.bins >= 1, "bins must be >= 1")
        from .evaluation import parse_split
        try:
            parse_split(self.split, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_text(self, skip: tuple[str, ...] = ("out",)) -> str:
        """Render as ``key=value`` lines; unset optional paths are omitted."""
        lines = []
        for key, value in asdict(self).items():
            if value is None or key in skip:
                continue
            if isinstance(value, (tuple, list)):
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def coerce(key: str, raw: str):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    kind = FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("tuple"):
            return tuple(t.strip() for t in raw.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw or None if kind.startswith("Optional") else raw


def read_config(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = coerce(key, raw)
    return values


def merge(base: Config, *layers: dict) -> Config:
    cfg = base
    for layer in layers:
        cfg = replace(cfg, **{k: v for k, v in layer.items() if v is not None})
    return cfg
