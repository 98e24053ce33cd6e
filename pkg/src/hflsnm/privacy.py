"""Gaussian-mechanism calibration for client uploads and ES broadcasts.

Uplink: sigma_up = c C^n (2W / D_n) / eps.
Downlink: the ES tops the noise already present in its aggregate up to the
level a single (eps, delta) release of the edge model needs,

    sigma_down = 2 c W sqrt(Q) / eps,
    Q = (C^k / D^{S^k})^2 - (1/m^2) sum_n (C^n / D_n)^2,

and adds nothing when Q <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DpConfig:
    epsilon: float
    delta: float = 0.01
    clip: float = 20.0  # W, L2 bound on the flattened model
    exposure_up: float = 1.0  # C^n
    exposure_down: float = 1.0  # C^k

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.clip <= 0:
            raise ValueError("clipping threshold must be positive")

    @property
    def c(self) -> float:
        return math.sqrt(2.0 * math.log(1.25 / self.delta))


@dataclass
class NoiseRecord:
    sigma_up: dict = field(default_factory=dict)  # client -> sigma
    sigma_down: dict = field(default_factory=dict)  # ES id -> sigma
    q: dict = field(default_factory=dict)  # ES id -> Q

    def as_dict(self) -> dict:
        return {
            "sigma_up": {str(k): v for k, v in self.sigma_up.items()},
            "sigma_down": {str(k): v for k, v in self.sigma_down.items()},
            "q": {str(k): v for k, v in self.q.items()},
        }


def uplink_sensitivity(clip: float, data_size: float) -> float:
    return 2.0 * clip / data_size


def uplink_sigma(cfg: DpConfig, data_size: float, exposures: float | None = None) -> float:
    if data_size < 1:
        raise ValueError("data size must be >= 1")
    cn = cfg.exposure_up if exposures is None else exposures
    return cfg.c * cn * uplink_sensitivity(cfg.clip, data_size) / cfg.epsilon


def downlink_q(data_sizes, exposures_up, exposure_down: float) -> float:
    d = np.asarray(data_sizes, dtype=float)
    cn = np.broadcast_to(np.asarray(exposures_up, dtype=float), d.shape)
    m = d.size
    return float((exposure_down / d.sum()) ** 2 - np.sum((cn / d) ** 2) / m**2)


def downlink_sigma(cfg: DpConfig, data_sizes, exposures_up=None, exposure_down: float | None = None):
    """Return ``(Q, sigma_down)`` for one ES cluster."""
    d = np.asarray(data_sizes, dtype=float)
    if d.size == 0:
        raise ValueError("cluster must be non-empty")
    cn = cfg.exposure_up if exposures_up is None else exposures_up
    ck = cfg.exposure_down if exposure_down is None else exposure_down
    q = downlink_q(d, cn, ck)
    sigma = 2.0 * cfg.c * cfg.clip * math.sqrt(q) / cfg.epsilon if q > 0 else 0.0
    return q, sigma


def clip_model(model: np.ndarray, clip: float) -> np.ndarray:
    norm = float(np.linalg.norm(model))
    if norm <= clip:
        return np.array(model, dtype=float, copy=True)
    return np.asarray(model, dtype=float) * (clip / norm)


def clip_and_noise(model, sigma: float, clip: float, rng: np.random.Generator) -> np.ndarray:
    """L2-clip to ``clip`` then add N(0, sigma^2) per coordinate."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    out = clip_model(np.asarray(model, dtype=float), clip)
    if sigma > 0:
        out = out + rng.normal(0.0, sigma, size=out.shape)
    return out
