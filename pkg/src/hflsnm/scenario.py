"""Scenario: everything needed to schedule one global round.

Couples the sharing graph, ES sites, client mobility states and per-client
radio/compute parameters, and builds per-ES ``P1Instance`` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .costmodel import energy_upper_bound, local_iterations
from .mobility import EdgeServerSite, MobilityState, Position, channel_gain, step_mobility
from .resource import P1Instance, check_feasible
from .socialnet import SocialGraph
from .errors import InfeasibleError


@dataclass(frozen=True)
class RadioParams:
    """Shared radio/compute constants (Table I defaults)."""

    bandwidth: float = 10e6
    noise_psd: float = 4e-21
    deadline: float = 0.2
    tau: int = 1
    capacitance: float = 2e-28
    nu_min: float = 1e9
    nu_max: float = 10e9
    cycles_per_sample: float = 90822.0
    model_bits: float = 6720.0


@dataclass
class Scenario:
    graph: SocialGraph
    sites: list
    states: list  # MobilityState per client, graph.clients order
    tx_power: np.ndarray
    carrier_freq: np.ndarray  # GHz
    local_iters: np.ndarray
    radio: RadioParams = field(default_factory=RadioParams)
    arena: tuple = (1000.0, 1000.0)

    def __post_init__(self):
        n = len(self.graph.clients)
        self.tx_power = np.asarray(self.tx_power, dtype=float)
        self.carrier_freq = np.asarray(self.carrier_freq, dtype=float)
        self.local_iters = np.asarray(self.local_iters, dtype=np.int64)
        if not (len(self.states) == self.tx_power.size == self.carrier_freq.size == self.local_iters.size == n):
            raise ValueError("per-client arrays must match the graph's client count")

    @property
    def clients(self) -> tuple:
        return self.graph.clients

    @property
    def n_es(self) -> int:
        return len(self.sites)

    @property
    def data_sizes(self) -> np.ndarray:
        return self.graph.data_sizes

    def distances(self) -> np.ndarray:
        """(n_clients, n_es) client-to-ES distances in metres."""
        xy = np.array([[s.position.x, s.position.y] for s in self.states])
        es = np.array([[s.position.x, s.position.y] for s in self.sites])
        return np.hypot(xy[:, None, 0] - es[None, :, 0], xy[:, None, 1] - es[None, :, 1])

    def gains(self) -> np.ndarray:
        out = np.empty((len(self.states), self.n_es))
        for i, st in enumerate(self.states):
            for k, site in enumerate(self.sites):
                out[i, k] = channel_gain(st.position, site, self.carrier_freq[i])
        return out

    def covering(self, client) -> list:
        """ES ids whose coverage disk contains the client, ascending."""
        i = self.graph.index[client]
        pos = self.states[i].position
        return [s.id for s in self.sites if s.covers(pos)]

    def nearest_es(self, client) -> int:
        i = self.graph.index[client]
        return int(np.argmin(self.distances()[i]))

    def cycles(self) -> np.ndarray:
        """X_n = lambda_n C D_n."""
        return self.local_iters * self.radio.cycles_per_sample * self.data_sizes

    def p1_instance(self, es_id: int, clients, gains=None) -> P1Instance:
        if gains is None:
            gains = self.gains()
        idx = [self.graph.index[c] for c in clients]
        r = self.radio
        return P1Instance(
            cycles=self.cycles()[idx],
            gains=gains[idx, es_id],
            powers=self.tx_power[idx],
            bandwidth=self.sites[es_id].bandwidth,
            noise_psd=r.noise_psd,
            deadline=r.deadline,
            tau=r.tau,
            capacitance=r.capacitance,
            nu_min=r.nu_min,
            nu_max=r.nu_max,
            model_bits=r.model_bits,
            client_ids=tuple(clients),
        )

    def admissible(self) -> list:
        """Clients that can meet t0 alone on at least one covering ES."""
        g = self.gains()
        out = []
        for c in self.clients:
            for k in self.covering(c):
                try:
                    check_feasible(self.p1_instance(k, [c], g))
                except InfeasibleError:
                    continue
                out.append(c)
                break
        return out

    def energy_bound(self, selection):
        idx = [self.graph.index[c] for c in selection]
        r = self.radio
        return energy_upper_bound(
            self.data_sizes[idx], self.local_iters[idx], self.tx_power[idx],
            r.tau, r.deadline, r.nu_max, r.cycles_per_sample, r.capacitance,
        )

    def mean_gain(self) -> float:
        """Gain at the mean client-to-nearest-covering-ES distance and mean carrier."""
        d = self.distances()
        near = []
        for i, c in enumerate(self.clients):
            cov = self.covering(c)
            near.append(min(d[i, k] for k in cov) if cov else d[i].min())
        mean_d = max(float(np.mean(near)), 1.0)
        f = float(np.mean(self.carrier_freq))
        pl = 32.4 + 20 * math.log10(f) + 30 * math.log10(mean_d)
        return 10.0 ** (-pl / 10.0)

    def step(self, dt: float, rng: np.random.Generator) -> None:
        """Advance every client's position by one round (in place)."""
        self.states = [step_mobility(s, dt, rng, self.arena) for s in self.states]

    # --- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "sites": [
                {"id": s.id, "x": s.position.x, "y": s.position.y,
                 "bandwidth": s.bandwidth, "coverage_radius": s.coverage_radius}
                for s in self.sites
            ],
            "states": [
                {"x": s.position.x, "y": s.position.y, "speed": s.speed, "direction": s.direction}
                for s in self.states
            ],
            "tx_power": self.tx_power.tolist(),
            "carrier_freq": self.carrier_freq.tolist(),
            "local_iters": self.local_iters.tolist(),
            "radio": dict(self.radio.__dict__),
            "arena": list(self.arena),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        sites = [
            EdgeServerSite(s["id"], Position(s["x"], s["y"]), s["bandwidth"], s["coverage_radius"])
            for s in data["sites"]
        ]
        states = [MobilityState(Position(s["x"], s["y"]), s["speed"], s["direction"]) for s in data["states"]]
        return cls(
            graph=SocialGraph.from_dict(data["graph"]),
            sites=sites,
            states=states,
            tx_power=data["tx_power"],
            carrier_freq=data["carrier_freq"],
            local_iters=data["local_iters"],
            radio=RadioParams(**data["radio"]),
            arena=tuple(data["arena"]),
        )


def build_scenario(graph: SocialGraph, sites, states, rng, radio: RadioParams,
                   tx_power_range=(0.1, 1.0), carrier_freq_range=(1.0, 4.0),
                   lambda0: float = 5.0, local_iters=None, arena=(1000.0, 1000.0)) -> Scenario:
    n = len(graph.clients)
    p = rng.uniform(*tx_power_range, size=n)
    f = rng.uniform(*carrier_freq_range, size=n)
    if local_iters is None:
        lam = local_iterations(graph.data_sizes, lambda0)
    else:
        lam = np.full(n, int(local_iters), dtype=np.int64)
    return Scenario(graph, list(sites), list(states), p, f, lam, radio, tuple(arena))


def with_radio(scenario: Scenario, **changes) -> Scenario:
    return replace(scenario, radio=replace(scenario.radio, **changes))
