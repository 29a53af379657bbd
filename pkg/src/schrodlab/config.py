"""Run configuration: TOML or JSON in, validated dataclass out."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import json
import os
from pathlib import Path

import tomli

from .errors import ConfigError, ExponentOutOfRange, InvalidDimension, TestExponentTooLarge

_KEYS = {"n", "sigma", "m", "s", "eps_tier", "sweep", "seed", "samples", "output",
         "r_min", "validation_budget", "profile_cache"}


@dataclass(frozen=True)
class Samples:
    witness: int = 200
    quotient: int = 10000


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    sigma: float = 0.2
    s: float = 0.15
    sweep: tuple[int, ...] = (12, 16, 20, 24)
    eps_tier: str = "empirical"
    seed: int = 20240601
    samples: Samples = field(default_factory=Samples)
    output: str = "lab-out"
    r_min: float | None = None  # defaults to the smallest R of the sweep
    validation_budget: int = 1000
    profile_cache: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = list(self.sweep)
        return d

    @property
    def resolved_r_min(self) -> float:
        if self.r_min is not None:
            return float(self.r_min)
        return float(min(self.sweep)) ** (1.0 / self.sigma)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.n not in (2, 3):
        raise InvalidDimension(f"n={cfg.n}: runs are supported for n in (2, 3)")
    if not 0 < cfg.sigma < 1 / (cfg.n + 2):
        raise ExponentOutOfRange(f"sigma={cfg.sigma} must lie in (0, 1/(n+2))")
    if cfg.s >= cfg.sigma * cfg.n / 2:
        raise TestExponentTooLarge(f"s={cfg.s} must be below sigma*n/2={cfg.sigma * cfg.n / 2:g}")
    if len(cfg.sweep) < 1 or any(int(m) != m or m < 1 for m in cfg.sweep):
        raise ConfigError(f"sweep must be positive integers, got {cfg.sweep}")
    if cfg.eps_tier not in ("empirical", "rigorous"):
        raise ConfigError(f"eps_tier must be 'empirical' or 'rigorous', got {cfg.eps_tier!r}")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.samples.witness < 1 or cfg.samples.quotient < 1:
        raise ConfigError("sample budgets must be positive")
    return cfg


def from_dict(d: dict) -> RunConfig:
    unknown = set(d) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    d = dict(d)
    if "m" in d:
        if "sweep" in d:
            raise ConfigError("give either m or sweep, not both")
        d["sweep"] = [d.pop("m")]
    if "sweep" in d:
        d["sweep"] = tuple(int(v) for v in d["sweep"])
    if "samples" in d:
        extra = set(d["samples"]) - {"witness", "quotient"}
        if extra:
            raise ConfigError(f"unknown samples keys: {sorted(extra)}")
        d["samples"] = Samples(**d["samples"])
    try:
        cfg = RunConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return validate(cfg)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        d = json.loads(raw)
        d = d.get("config", d)  # accept a report's JSON mirror as well
    else:
        d = tomli.loads(raw.decode())
    return from_dict(d)


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("LAB_THREADS", "1")))
    except ValueError:
        raise ConfigError("LAB_THREADS must be an integer") from None
