"""Flat experiment configuration with JSON round-tripping and key=value overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .scenario import RadioParams

ALGORITHM_ALIASES = {"do-snm": "do-snm", "dosnm": "do-snm", "ra": "ra", "lg": "lg",
                     "rd": "rd", "ed": "ed", "full": "full"}


@dataclass(frozen=True)
class ExperimentConfig:
    # radio / compute (Table I)
    tau: int = 1
    capacitance: float = 2e-28
    bandwidth: float = 10e6
    nu_min: float = 1e9
    nu_max: float = 10e9
    noise_psd: float = 4e-21
    tx_power_min: float = 0.1
    tx_power_max: float = 1.0
    carrier_min: float = 1.0
    carrier_max: float = 4.0
    deadline: float = 0.2
    cycles_per_sample: float = 90822.0
    lambda0: float = 5.0
    local_iters: Optional[int] = None  # fixed lambda for every client instead of lambda0 scaling
    model_bits: Optional[float] = None  # default: 32 bits per learner parameter
    # deployment
    arena_width: float = 1000.0
    arena_height: float = 1000.0
    n_es: int = 4
    n_clients: int = 60
    coverage_radius: float = 2000.0
    round_duration: float = 10.0  # seconds of movement between global rounds
    # sharing graph
    avg_degree: float = 2.0
    private_min: int = 20
    private_max: int = 60
    shared_min: int = 5
    shared_max: int = 25
    # selection
    algorithm: str = "do-snm"
    r_ef0: float = 0.6
    xi: int = 5
    baseline_m: Optional[int] = None  # fixed RA/LG size; otherwise drawn per baseline_rule
    baseline_rule: str = "range"  # "range": M uniform in [L, H]; "edcr": shortest random prefix meeting r_ef0
    # privacy
    dp_epsilon: Optional[float] = 80.0  # None disables noise and clipping
    dp_delta: float = 0.01
    dp_clip: float = 20.0
    dp_cumulative: bool = False
    # learning task
    n_features: int = 20
    n_classes: int = 10
    class_sep: float = 0.5
    rho: float = 0.6
    lr: float = 0.05
    n_test: int = 2000
    # run
    rounds: int = 20
    seed: int = 0

    def __post_init__(self):
        algo = ALGORITHM_ALIASES.get(str(self.algorithm).lower())
        if algo is None:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        object.__setattr__(self, "algorithm", algo)
        checks = [
            (self.tau >= 1, "tau must be >= 1"),
            (0 < self.nu_min <= self.nu_max, "need 0 < nu_min <= nu_max"),
            (self.bandwidth > 0 and self.noise_psd > 0, "bandwidth and noise_psd must be positive"),
            (0 < self.tx_power_min <= self.tx_power_max, "bad transmit power range"),
            (0 < self.carrier_min <= self.carrier_max, "bad carrier frequency range"),
            (self.deadline > 0, "deadline must be positive"),
            (self.n_es >= 1 and self.n_clients >= 1, "need at least one ES and one client"),
            (0 < self.r_ef0 <= 1, "r_ef0 must lie in (0, 1]"),
            (self.xi >= 1, "xi must be >= 1"),
            (self.rounds >= 0, "rounds must be >= 0"),
            (self.dp_epsilon is None or self.dp_epsilon > 0, "dp_epsilon must be positive"),
            (0 < self.dp_delta < 1, "dp_delta must lie in (0, 1)"),
            (1 <= self.private_min <= self.private_max, "bad private block size range"),
            (1 <= self.shared_min <= self.shared_max, "bad shared block size range"),
            (self.n_classes >= 2 and self.n_features >= 1, "need >= 2 classes and >= 1 feature"),
            (self.rho > 0 and self.lr > 0, "rho and lr must be positive"),
            (self.local_iters is None or self.local_iters >= 1, "local_iters must be >= 1"),
            (self.baseline_m is None or self.baseline_m >= 1, "baseline_m must be >= 1"),
            (self.baseline_rule in ("range", "edcr"), "baseline_rule must be 'range' or 'edcr'"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)

    @property
    def arena(self) -> tuple:
        return (self.arena_width, self.arena_height)

    def param_count(self) -> int:
        return (self.n_features + 1) * self.n_classes

    def radio(self) -> RadioParams:
        bits = self.model_bits if self.model_bits is not None else 32.0 * self.param_count()
        return RadioParams(
            bandwidth=self.bandwidth, noise_psd=self.noise_psd, deadline=self.deadline,
            tau=self.tau, capacitance=self.capacitance, nu_min=self.nu_min, nu_max=self.nu_max,
            cycles_per_sample=self.cycles_per_sample, model_bits=bits,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, pairs) -> "ExperimentConfig":
        """Apply ``key=value`` strings; values are parsed as JSON when possible."""
        types = {f.name: f for f in fields(self)}
        changes = {}
        for item in pairs:
            if "=" not in item:
                raise ConfigurationError(f"override {item!r} is not key=value")
            key, raw = item.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ConfigurationError(f"unknown config key {key!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            changes[key] = value
        return replace(self, **changes)


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
