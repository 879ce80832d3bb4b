"""Run configuration: defaults, flat-file parsing, and validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    """Hyperparameters of one training run.

    Field names double as the keys of the flat ``key = value`` config file
    and as CLI override flags.
    """

    batch_size: int = 32
    learning_rate: float = 1e-5
    epochs: int = 50
    tau: float = 0.07
    beta: float = 0.8
    omega: float = 0.9
    k_high: int = 50
    k_low: int = 500
    sigma: float = 0.5
    alpha: float = 1.0
    interval: int = 5
    kmeans_runs: int = 5
    negatives: int = 10
    rho: float = 1.0
    out_dim: int | None = None
    kmeans_max_iter: int = 100
    oracle_batch_size: int = 20
    oracle_retries: int = 3

    def validate(self) -> "RunConfig":
        checks = [
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.learning_rate >= 0, "learning_rate must be >= 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.tau > 0, "tau must be > 0"),
            (0 <= self.beta <= 1, "beta must lie in [0, 1]"),
            (0 <= self.omega <= 1, "omega must lie in [0, 1]"),
            (self.k_high >= 1, "k_high must be >= 1"),
            (self.k_low >= 0, "k_low must be >= 0"),
            (0 <= self.sigma <= 1, "sigma must lie in [0, 1]"),
            (self.alpha > 0, "alpha must be > 0"),
            (self.interval >= 1, "interval must be >= 1"),
            (self.kmeans_runs >= 1, "kmeans_runs must be >= 1"),
            (self.negatives >= 1, "negatives must be >= 1"),
            (self.rho >= 0, "rho must be >= 0"),
            (self.out_dim is None or self.out_dim >= 2, "out_dim must be >= 2"),
            (self.kmeans_max_iter >= 1, "kmeans_max_iter must be >= 1"),
            (self.oracle_batch_size >= 1, "oracle_batch_size must be >= 1"),
            (self.oracle_retries >= 0, "oracle_retries must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def replace(self, **overrides) -> "RunConfig":
        data = asdict(self)
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in data:
                raise ConfigError(f"unknown config key {key!r}")
            data[key] = value
        return RunConfig(**data).validate()


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype == "int | None":
            return None if raw.lower() in ("none", "null", "") else int(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for config key {key!r}") from None
    raise ConfigError(f"unsupported config field type for {key!r}")


def load_config(path) -> RunConfig:
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw)
    return RunConfig(**values).validate()
