"""Flat key-value run configuration.

Config files are `key = value` lines (# comments allowed). CLI flags
override file values; the effective configuration is digested into every
output artifact for provenance.
"""

from __future__ import annotations

import hashlib
import shlex

from .errors import ConfigError

# every known key with its parser; unknown keys are rejected to catch typos
_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _parse_bool(s: str) -> bool:
    v = _BOOL.get(s.strip().lower())
    if v is None:
        raise ConfigError(f"not a boolean: {s!r}")
    return v


def _parse_ints(s: str) -> tuple[int, ...]:
    return tuple(int(p) for p in s.replace(",", " ").split())


def _parse_paths(s: str) -> list[str]:
    return [p for p in s.replace(",", " ").split() if p]


SCHEMA = {
    "seed": int,
    "dataset.kind": str,  # synthetic | cifar10 | records
    "dataset.paths": _parse_paths,
    "dataset.height": int,
    "dataset.width": int,
    "dataset.channels": int,
    "dataset.classes": int,
    "dataset.per_class": int,
    "dataset.noise": float,
    "dataset.jitter": float,
    "dataset.plan": _parse_paths,
    "split.mode": str,  # per-class | total
    "split.val_size": int,
    "classifier.hidden": _parse_ints,
    "classifier.epochs": int,
    "classifier.lr": float,
    "classifier.batch": int,
    "evaluator.kind": str,  # builtin | external
    "evaluator.command": shlex.split,
    "evaluator.val_spec": str,  # JSON passed through to the external child
    "search.iterations": int,
    "search.warmup": int,
    "search.n_mutate": int,
    "search.n_unexplored": int,
    "search.n_explored": int,
    "search.label_aware": _parse_bool,
    "predictor.epochs": int,
    "predictor.lr": float,
    "predictor.batch": int,
    "policy.alpha": float,
    "policy.n_cand": int,
    "train.epochs": int,
    "train.lr": float,
    "train.batch": int,
    "train.hidden": _parse_ints,
    "train.seeds": int,
}

DEFAULTS = {
    "dataset.kind": "synthetic",
    "dataset.classes": 4,
    "dataset.per_class": 130,
    "dataset.height": 16,
    "dataset.width": 16,
    "dataset.channels": 1,
    "dataset.noise": 35.0,
    "dataset.jitter": 3.0,
    "split.mode": "per-class",
    "split.val_size": 40,
    "classifier.hidden": (64,),
    "classifier.epochs": 40,
    "classifier.lr": 0.005,
    "classifier.batch": 32,
    "evaluator.kind": "builtin",
    "evaluator.val_spec": "{}",
    "search.iterations": 500,
    "search.warmup": 100,
    "search.n_mutate": 10,
    "search.n_unexplored": 50,
    "search.n_explored": 40,
    "search.label_aware": True,
    "predictor.epochs": 100,
    "predictor.lr": 0.01,
    "predictor.batch": 64,
    "policy.alpha": 2.5,
    "policy.n_cand": 100,
    "train.epochs": 60,
    "train.lr": 0.005,
    "train.batch": 32,
    "train.hidden": (64,),
    "train.seeds": 3,
}


class RunConfig:
    """Typed view over parsed key-value settings."""

    def __init__(self, values: dict):
        self.values = dict(DEFAULTS)
        self.values.update(values)
        if "seed" not in self.values:
            raise ConfigError("config must set an explicit seed "
                              "(wall-clock seeding is not supported)")

    def __getitem__(self, key: str):
        try:
            return self.values[key]
        except KeyError:
            raise ConfigError(f"missing config key {key!r}") from None

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def digest(self) -> str:
        """Stable hash of the effective configuration."""
        lines = []
        for key in sorted(self.values):
            lines.append(f"{key}={self.values[key]!r}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = SCHEMA[key](value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    return values


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return RunConfig(parse_config_text(text))


def apply_overrides(config: RunConfig, overrides: dict) -> RunConfig:
    """Non-None override values win over file values."""
    merged = dict(config.values)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        merged[key] = value
    return RunConfig(merged)
