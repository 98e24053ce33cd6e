"""Client/ES geometry, per-round random-direction mobility and UMa pathloss."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError

KMH = 1000.0 / 3600.0
MAX_SPEED = 100.0 * KMH
MIN_DISTANCE = 1.0


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class MobilityState:
    position: Position
    speed: float  # m/s
    direction: float  # radians, [0, 2pi)


@dataclass(frozen=True)
class EdgeServerSite:
    id: int
    position: Position
    bandwidth: float = 10e6
    coverage_radius: float = 2000.0

    def __post_init__(self):
        if self.bandwidth <= 0 or self.coverage_radius <= 0:
            raise ConfigurationError("ES bandwidth and coverage radius must be positive")

    def covers(self, pos: Position) -> bool:
        return self.position.distance(pos) <= self.coverage_radius


def _reflect(v: float, upper: float) -> float:
    # fold onto [0, upper]; handles overshoots longer than the arena
    if upper <= 0:
        return 0.0
    period = 2.0 * upper
    v = math.fmod(v, period)
    if v < 0:
        v += period
    return period - v if v > upper else v


def step_mobility(state: MobilityState, dt: float, rng: np.random.Generator, arena=None) -> MobilityState:
    """Move for ``dt`` seconds along the current heading, then draw a new heading.

    With ``arena=(width, height)`` the position is reflected back inside.
    """
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    d = state.direction
    x = state.position.x + state.speed * math.cos(d) * dt
    y = state.position.y + state.speed * math.sin(d) * dt
    if arena is not None:
        x = _reflect(x, arena[0])
        y = _reflect(y, arena[1])
    new_dir = float(rng.uniform(0.0, 2.0 * math.pi))
    return replace(state, position=Position(x, y), direction=new_dir)


def pathloss_db(distance_m: float, carrier_freq_ghz: float) -> float:
    """UMa pathloss: 32.4 + 20 log10(f[GHz]) + 30 log10(d[m]), d clamped to 1 m."""
    if carrier_freq_ghz <= 0:
        raise ConfigurationError("carrier frequency must be positive")
    d = max(float(distance_m), MIN_DISTANCE)
    return 32.4 + 20.0 * math.log10(carrier_freq_ghz) + 30.0 * math.log10(d)


def channel_gain(client_pos: Position, es: EdgeServerSite, carrier_freq: float) -> float:
    """Linear power gain h between a client and an ES (``carrier_freq`` in GHz)."""
    pl = pathloss_db(client_pos.distance(es.position), carrier_freq)
    return 10.0 ** (-pl / 10.0)


def grid_sites(n_es: int, arena, bandwidth: float = 10e6, coverage_radius: float = 2000.0) -> list:
    """ES sites at the cell centres of a near-square grid, column-major."""
    if n_es < 1:
        raise ConfigurationError("need at least one ES")
    width, height = arena
    cols = math.ceil(math.sqrt(n_es))
    rows = math.ceil(n_es / cols)
    if width / cols < 1.0 or height / rows < 1.0:
        raise ConfigurationError(f"arena {arena} too small for a {cols}x{rows} ES grid")
    sites = []
    for k in range(n_es):
        i, j = divmod(k, rows)
        pos = Position((i + 0.5) * width / cols, (j + 0.5) * height / rows)
        sites.append(EdgeServerSite(k, pos, bandwidth, coverage_radius))
    return sites


def place_scenario(
    n_es: int,
    arena,
    n_clients: int,
    seed=None,
    bandwidth: float = 10e6,
    coverage_radius: float = 2000.0,
):
    """Grid ESs plus clients drawn uniformly in the arena and inside some ES disk.

    Returns ``(sites, states)``. ``seed`` may be an int or a Generator.
    """
    if n_clients < 1:
        raise ConfigurationError("need at least one client")
    sites = grid_sites(n_es, arena, bandwidth, coverage_radius)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    width, height = arena
    states = []
    attempts = 0
    while len(states) < n_clients:
        attempts += 1
        if attempts > 1000 * n_clients:
            raise ConfigurationError("ES disks cover too little of the arena to place clients")
        pos = Position(float(rng.uniform(0, width)), float(rng.uniform(0, height)))
        if not any(s.covers(pos) for s in sites):
            continue
        speed = float(rng.uniform(0.0, MAX_SPEED))
        direction = float(rng.uniform(0.0, 2.0 * math.pi))
        states.append(MobilityState(pos, speed, direction))
    return sites, states
