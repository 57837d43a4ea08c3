"""Namespaced YAML configuration with dotted-key access and CLI overrides."""

from __future__ import annotations

from pathlib import Path

import yaml

_MISSING = object()

DEFAULTS = {
    "input": {"fps": 30.0},
    "pipeline": {
        "resolution": "128x96",
        "trailing": "drop",  # drop | duplicate
        "drop_on_lag": False,
        "prefetch_spatial": False,
    },
    "stages": {
        "spatial": {"impl": "constant_depth", "depth": 5.0},
        "inter": {"impl": "blend"},
        "sr": {"impl": "bicubic"},
    },
    "poses": {"source": "file"},  # file | predictor
    "latency": {"budget_ms": 1000.0},
    "serve": {"host": "127.0.0.1", "port": 8473, "stats_interval_s": 1.0},
}


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, data: dict | None = None, source: str = "<defaults>"):
        self.data = _deep_merge(DEFAULTS, data or {})
        self.source = source

    @classmethod
    def load(cls, path) -> "Config":
        path = Path(path)
        try:
            with open(path) as f:
                doc = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls(doc, source=str(path))

    def get(self, key: str, default=_MISSING):
        node = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is not _MISSING:
                    return default
                raise ConfigError(f"missing config key {key!r} (source: {self.source})")
            node = node[part]
        return node

    def set(self, key: str, value) -> None:
        parts = key.split(".")
        node = self.data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"config key {key!r} collides with a scalar")
        node[parts[-1]] = value

    def apply_overrides(self, overrides: dict) -> None:
        """CLI flags win over file values."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def resolution(self, key: str = "pipeline.resolution"):
        raw = str(self.get(key))
        try:
            w, h = raw.lower().split("x")
            w, h = int(w), int(h)
        except ValueError:
            raise ConfigError(f"config key {key!r}={raw!r} is not WIDTHxHEIGHT "
                              f"(source: {self.source})") from None
        if w < 1 or h < 1:
            raise ConfigError(f"config key {key!r} must be positive dimensions")
        return w, h


def _deep_merge(base: dict, extra: dict) -> dict:
    out = {}
    for k, v in base.items():
        if isinstance(v, dict) and isinstance(extra.get(k), dict):
            out[k] = _deep_merge(v, extra[k])
        elif k in extra:
            out[k] = extra[k]
        else:
            out[k] = v
    for k, v in extra.items():
        if k not in out:
            out[k] = v
    return out
