"""Social-network data-sharing graph and effective/redundant data algebra.

Clients are nodes. Every sample lives in exactly one ``SampleBlock`` owned
by one client (private data) or by two clients (data shared along an edge).
Given a selection of clients, the *effective* data is the union of their
samples and the *redundant* data is every shared block whose two owners are
both selected, i.e. samples that get trained twice in one round.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Hashable, Iterable

import numpy as np

from .errors import ConfigurationError

ClientId = Hashable


@dataclass(frozen=True)
class SampleBlock:
    id: Hashable
    size: int
    owners: tuple

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ConfigurationError(f"block {self.id!r}: size must be a positive integer")
        owners = tuple(self.owners)
        if len(owners) not in (1, 2) or len(set(owners)) != len(owners):
            raise ConfigurationError(f"block {self.id!r}: needs 1 or 2 distinct owners, got {owners}")
        object.__setattr__(self, "owners", owners)
        object.__setattr__(self, "size", int(self.size))

    @property
    def shared(self) -> bool:
        return len(self.owners) == 2


@dataclass(frozen=True)
class CoverageReport:
    effective_size: int
    redundant_size: int
    trained_size: int
    r_ef: float
    r_re: float


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Immutable sharing graph. Array views are built lazily and cached."""

    clients: tuple
    blocks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(self.clients))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if len(set(self.clients)) != len(self.clients):
            raise ConfigurationError("duplicate client ids")
        known = set(self.clients)
        for b in self.blocks:
            bad = [o for o in b.owners if o not in known]
            if bad:
                raise ConfigurationError(f"block {b.id!r} has unknown owners {bad}")
        empty = [c for c, d in zip(self.clients, self.data_sizes) if d < 1]
        if empty:
            raise ConfigurationError(f"clients without data: {empty}")

    def __eq__(self, other):
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return self.clients == other.clients and self.blocks == other.blocks

    def __hash__(self):
        return hash((self.clients, self.blocks))

    @cached_property
    def index(self) -> dict:
        return {c: i for i, c in enumerate(self.clients)}

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.blocks], dtype=np.int64)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Boolean (n_clients, n_blocks) ownership matrix."""
        inc = np.zeros((len(self.clients), len(self.blocks)), dtype=bool)
        for j, b in enumerate(self.blocks):
            for o in b.owners:
                inc[self.index[o], j] = True
        return inc

    @cached_property
    def shared_mask(self) -> np.ndarray:
        return np.array([b.shared for b in self.blocks], dtype=bool)

    @cached_property
    def data_sizes(self) -> np.ndarray:
        """D_n per client, in ``clients`` order."""
        d = {c: 0 for c in self.clients}
        for b in self.blocks:
            for o in b.owners:
                if o in d:
                    d[o] += b.size
        return np.array([d[c] for c in self.clients], dtype=np.int64)

    @cached_property
    def edges(self) -> dict:
        """Map from sorted owner pair to total shared samples."""
        out: dict = {}
        for b in self.blocks:
            if b.shared:
                key = tuple(sorted(b.owners, key=repr))
                out[key] = out.get(key, 0) + b.size
        return out

    @property
    def total_data(self) -> int:
        return int(self.data_sizes.sum())

    @property
    def effective_universe(self) -> int:
        return int(self.sizes.sum())

    @property
    def redundant_universe(self) -> int:
        return int(self.sizes[self.shared_mask].sum())

    def data_size(self, client) -> int:
        return int(self.data_sizes[self.index[client]])

    def average_degree(self) -> float:
        if not self.clients:
            return 0.0
        return 2.0 * len(self.edges) / len(self.clients)

    def mask(self, selection: Iterable) -> np.ndarray:
        m = np.zeros(len(self.clients), dtype=bool)
        for c in selection:
            try:
                m[self.index[c]] = True
            except KeyError:
                raise ValueError(f"unknown client id {c!r}") from None
        return m

    # --- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "clients": list(self.clients),
            "blocks": [{"id": b.id, "size": b.size, "owners": list(b.owners)} for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SocialGraph":
        blocks = [SampleBlock(b["id"], b["size"], tuple(b["owners"])) for b in data["blocks"]]
        return cls(tuple(data["clients"]), tuple(blocks))


def save_graph(graph: SocialGraph, path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2, sort_keys=True))


def load_graph(path) -> SocialGraph:
    return SocialGraph.from_dict(json.loads(Path(path).read_text()))


def example_graph() -> SocialGraph:
    """The five-client A..E community shipped as ``data/fig1_graph.json``."""
    text = resources.files("hflsnm.data").joinpath("fig1_graph.json").read_text()
    return SocialGraph.from_dict(json.loads(text))


def generate_graph(
    n_clients: int,
    avg_degree: float,
    private_size_range=(50, 300),
    shared_size_range=(10, 100),
    seed=None,
) -> SocialGraph:
    """Random sparse sharing graph with integer client ids ``0..n-1``.

    Each client gets one private block. ``round(avg_degree * n / 2)`` distinct
    pairs are drawn uniformly (a G(n, m) graph) and each pair shares one block.
    """
    if n_clients < 1:
        raise ConfigurationError("n_clients must be >= 1")
    if avg_degree < 0:
        raise ConfigurationError("avg_degree must be >= 0")
    for name, (lo, hi) in (("private_size_range", private_size_range), ("shared_size_range", shared_size_range)):
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"{name} must satisfy 1 <= min <= max, got {(lo, hi)}")
    rng = np.random.default_rng(seed)
    clients = tuple(range(n_clients))
    priv = rng.integers(private_size_range[0], private_size_range[1] + 1, size=n_clients)
    blocks = [SampleBlock(f"p{c}", int(priv[c]), (c,)) for c in clients]

    pairs = list(combinations(clients, 2))
    n_edges = min(int(round(avg_degree * n_clients / 2)), len(pairs))
    if n_edges:
        chosen = np.sort(rng.choice(len(pairs), size=n_edges, replace=False))
        shared = rng.integers(shared_size_range[0], shared_size_range[1] + 1, size=n_edges)
        for k, idx in enumerate(chosen):
            i, j = pairs[idx]
            blocks.append(SampleBlock(f"s{i}-{j}", int(shared[k]), (i, j)))
    return SocialGraph(clients, tuple(blocks))


def _report(graph: SocialGraph, eff: int, red: int, trained: int) -> CoverageReport:
    eff_u = graph.effective_universe
    red_u = graph.redundant_universe
    return CoverageReport(
        effective_size=eff,
        redundant_size=red,
        trained_size=trained,
        r_ef=eff / eff_u if eff_u else 0.0,
        r_re=red / red_u if red_u else 0.0,
    )


def owner_counts(graph: SocialGraph, mask: np.ndarray) -> np.ndarray:
    """How many selected owners each block has (0, 1 or 2)."""
    return mask.astype(np.int64) @ graph.incidence


def coverage(graph: SocialGraph, selection: Iterable) -> CoverageReport:
    """Effective/redundant sizes and EDCR/RDCR of ``selection``."""
    m = graph.mask(selection)
    counts = owner_counts(graph, m)
    sizes = graph.sizes
    eff = int(sizes[counts >= 1].sum())
    red = int(sizes[counts >= 2].sum())
    trained = int(graph.data_sizes[m].sum())
    return _report(graph, eff, red, trained)


def coverage_oracle(graph: SocialGraph, selection: Iterable) -> CoverageReport:
    """Reference implementation on literal sample-id sets (tests only)."""
    selection = list(dict.fromkeys(selection))
    for c in selection:
        if c not in graph.index:
            raise ValueError(f"unknown client id {c!r}")
    datasets = {c: set() for c in graph.clients}
    for j, b in enumerate(graph.blocks):
        ids = {(j, s) for s in range(b.size)}
        for o in b.owners:
            datasets[o] |= ids

    def eff_red(clients):
        union = set().union(*(datasets[c] for c in clients)) if clients else set()
        red = set()
        for a, b in combinations(clients, 2):
            red |= datasets[a] & datasets[b]
        return len(union), len(red)

    eff, red = eff_red(selection)
    eff_u, red_u = eff_red(list(graph.clients))
    trained = sum(len(datasets[c]) for c in selection)
    return CoverageReport(
        effective_size=eff,
        redundant_size=red,
        trained_size=trained,
        r_ef=eff / eff_u if eff_u else 0.0,
        r_re=red / red_u if red_u else 0.0,
    )
