"""Hierarchical FL training loop over a social sharing graph.

Clients run full-batch GD, ESs aggregate tau times per global round, the cloud
aggregates once. Shared blocks are materialised as identical samples on both
owners, so a block whose owners are both selected is trained twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .errors import RoundError, HflsnmError
from .mobility import place_scenario
from .pipeline import Schedule, schedule_round
from .privacy import DpConfig, NoiseRecord, clip_and_noise, downlink_sigma, uplink_sigma
from .scenario import Scenario, build_scenario
from .socialnet import SampleBlock, SocialGraph, coverage, generate_graph


# --- learner ---------------------------------------------------------------------

class LinearSoftmaxLearner:
    """Multinomial logistic regression on a flat parameter vector ``[W | b]``."""

    def __init__(self, n_features: int, n_classes: int):
        self.n_features = n_features
        self.n_classes = n_classes

    @property
    def param_count(self) -> int:
        return (self.n_features + 1) * self.n_classes

    def init(self) -> np.ndarray:
        return np.zeros(self.param_count)

    def _unpack(self, model):
        k = self.n_classes
        w = model[: self.n_features * k].reshape(self.n_features, k)
        return w, model[self.n_features * k:]

    def logits(self, model, X):
        w, b = self._unpack(model)
        return X @ w + b

    def gradient(self, model, X, y) -> np.ndarray:
        """Gradient of the mean cross-entropy over ``(X, y)``."""
        z = self.logits(model, X)
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        p[np.arange(len(y)), y] -= 1.0
        p /= len(y)
        return np.concatenate([(X.T @ p).ravel(), p.sum(axis=0)])

    def loss(self, model, X, y) -> float:
        z = self.logits(model, X)
        z -= z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(len(y)), y].mean())

    def local_train(self, model, X, y, iters: int, lr: float) -> np.ndarray:
        out = np.array(model, dtype=float, copy=True)
        for _ in range(int(iters)):
            out -= lr * self.gradient(out, X, y)
        return out

    def evaluate(self, model, X, y) -> float:
        return float(np.mean(np.argmax(self.logits(model, X), axis=1) == y))


# --- synthetic data -----------------------------------------------------------------

@dataclass
class SyntheticTask:
    """Gaussian class clusters realised on the blocks of a sharing graph.

    Each client draws label proportions from Dirichlet(rho); private blocks use
    the owner's proportions, shared blocks the mean of both owners'.
    """

    graph: SocialGraph
    means: np.ndarray
    blocks: dict  # block id -> (X, y)
    X_test: np.ndarray
    y_test: np.ndarray
    label_dist: np.ndarray = field(repr=False, default=None)

    def client_data(self, client):
        parts = [self.blocks[b.id] for b in self.graph.blocks if client in b.owners]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def pooled(self, clients):
        """Concatenation of every selected client's training set, duplicates kept."""
        parts = [self.client_data(c) for c in clients]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def make_task(graph: SocialGraph, n_features: int, n_classes: int, rho: float = 0.6,
              class_sep: float = 1.0, n_test: int = 2000, seed=0) -> SyntheticTask:
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, class_sep, size=(n_classes, n_features))
    dist = rng.dirichlet(np.full(n_classes, rho), size=len(graph.clients))
    idx = graph.index
    blocks = {}
    for b in graph.blocks:
        probs = np.mean([dist[idx[o]] for o in b.owners], axis=0)
        y = rng.choice(n_classes, size=b.size, p=probs)
        blocks[b.id] = (means[y] + rng.normal(size=(b.size, n_features)), y)
    y_test = np.arange(n_test) % n_classes
    X_test = means[y_test] + rng.normal(size=(n_test, n_features))
    return SyntheticTask(graph, means, blocks, X_test, y_test, dist)


# --- aggregation ----------------------------------------------------------------------

def weighted_average(models, weights) -> np.ndarray:
    if len(models) == 0:
        raise ValueError("nothing to aggregate")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(models),) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per model")
    stack = np.stack([np.asarray(m, dtype=float) for m in models])
    if np.all(stack == stack[0]):
        return stack[0].copy()  # exact, no rounding through the weights
    return (w @ stack) / w.sum()


def edge_aggregate(models, data_sizes, dp: DpConfig | None = None, client_rngs=None,
                   es_rng=None, exposures_up=None, exposure_down=None, record=None, es_id=None,
                   client_ids=None):
    """Data-weighted ES aggregation, with uplink and downlink Gaussian noise when ``dp`` is set."""
    if len(models) == 0:
        raise ValueError("nothing to aggregate")
    if dp is None:
        return weighted_average(models, data_sizes)
    noisy = []
    for n, (m, d) in enumerate(zip(models, data_sizes)):
        s = uplink_sigma(dp, d, exposures_up)
        noisy.append(clip_and_noise(m, s, dp.clip, client_rngs[n]))
        if record is not None:
            record.sigma_up[client_ids[n] if client_ids else n] = s
    agg = weighted_average(noisy, data_sizes)
    q, s_down = downlink_sigma(dp, data_sizes, exposures_up, exposure_down)
    if record is not None:
        record.sigma_down[es_id] = s_down
        record.q[es_id] = q
    if s_down > 0:
        agg = clip_and_noise(agg, s_down, dp.clip, es_rng)
    return agg


def global_aggregate(edge_models, edge_data) -> np.ndarray:
    return weighted_average(edge_models, edge_data)


# --- rounds -------------------------------------------------------------------------------

@dataclass
class RoundReport:
    round: int
    selection: tuple
    association: dict
    E_total: float
    t_total: float
    B_S: float
    accuracy: float
    r_ef: float
    r_re: float
    effective: int
    redundant: int
    noise: NoiseRecord
    allocations: dict = field(repr=False, default_factory=dict)
    costs: dict = field(repr=False, default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.selection)


@dataclass
class SimState:
    cfg: ExperimentConfig
    scenario: Scenario
    task: SyntheticTask
    learner: LinearSoftmaxLearner
    model: np.ndarray
    round: int = 0


def _rng(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


def build_state(cfg: ExperimentConfig) -> SimState:
    graph = generate_graph(
        cfg.n_clients, cfg.avg_degree,
        private_size_range=(cfg.private_min, cfg.private_max),
        shared_size_range=(cfg.shared_min, cfg.shared_max),
        seed=_rng(cfg.seed, 1),
    )
    sites, states = place_scenario(cfg.n_es, cfg.arena, cfg.n_clients, _rng(cfg.seed, 2),
                                   cfg.bandwidth, cfg.coverage_radius)
    scenario = build_scenario(
        graph, sites, states, _rng(cfg.seed, 3), cfg.radio(),
        tx_power_range=(cfg.tx_power_min, cfg.tx_power_max),
        carrier_freq_range=(cfg.carrier_min, cfg.carrier_max),
        lambda0=cfg.lambda0, local_iters=cfg.local_iters, arena=cfg.arena,
    )
    return state_for(cfg, scenario)


def state_for(cfg: ExperimentConfig, scenario: Scenario) -> SimState:
    task = make_task(scenario.graph, cfg.n_features, cfg.n_classes, cfg.rho, cfg.class_sep,
                     cfg.n_test, seed=_rng(cfg.seed, 4))
    learner = LinearSoftmaxLearner(cfg.n_features, cfg.n_classes)
    return SimState(cfg, scenario, task, learner, learner.init())


def dp_config(cfg: ExperimentConfig, round_index: int) -> DpConfig | None:
    """Per-round exposures C^n = C^k = tau, or cumulative over rounds when configured."""
    if cfg.dp_epsilon is None:
        return None
    rounds = round_index + 1 if cfg.dp_cumulative else 1
    return DpConfig(cfg.dp_epsilon, cfg.dp_delta, cfg.dp_clip,
                    exposure_up=cfg.tau * rounds, exposure_down=cfg.tau * rounds)


def train_round(state: SimState, clusters: dict, dp: DpConfig | None) -> tuple:
    """tau edge-iteration cycles per ES then one global aggregation; returns (model, noise record)."""
    cfg, task, learner, scenario = state.cfg, state.task, state.learner, state.scenario
    idx = scenario.graph.index
    record = NoiseRecord()
    edge_models, edge_data = [], []
    for k, members in sorted(clusters.items()):
        data = [task.client_data(c) for c in members]
        sizes = [len(y) for _, y in data]
        omega_k = state.model
        for l in range(cfg.tau):
            locals_ = [
                learner.local_train(omega_k, X, y, scenario.local_iters[idx[c]], cfg.lr)
                for c, (X, y) in zip(members, data)
            ]
            client_rngs = [_rng(cfg.seed, 5, state.round, l, idx[c]) for c in members]
            omega_k = edge_aggregate(
                locals_, sizes, dp, client_rngs, _rng(cfg.seed, 6, state.round, l, k),
                record=record, es_id=k, client_ids=members,
            )
        if dp is None:
            record.sigma_up.update((c, 0.0) for c in members)
            record.sigma_down[k] = 0.0
            record.q[k] = 0.0
        edge_models.append(omega_k)
        edge_data.append(sum(sizes))
    return global_aggregate(edge_models, edge_data), record


def run_global_round(state: SimState, algorithm: str | None = None) -> RoundReport:
    cfg = state.cfg
    algorithm = algorithm or cfg.algorithm
    try:
        sched: Schedule = schedule_round(algorithm, state.scenario, cfg, _rng(cfg.seed, 7, state.round))
    except HflsnmError as exc:
        raise RoundError(state.round, exc) from exc
    state.model, record = train_round(state, sched.clusters, dp_config(cfg, state.round))
    cov = coverage(state.scenario.graph, sched.selection)
    report = RoundReport(
        round=state.round,
        selection=sched.selection,
        association=dict(sched.association.assignment),
        E_total=sched.E_total,
        t_total=sched.t_total,
        B_S=sched.B_S,
        accuracy=state.learner.evaluate(state.model, state.task.X_test, state.task.y_test),
        r_ef=cov.r_ef,
        r_re=cov.r_re,
        effective=cov.effective_size,
        redundant=cov.redundant_size,
        noise=record,
        allocations=sched.allocations,
        costs=sched.costs,
    )
    state.scenario.step(cfg.round_duration, _rng(cfg.seed, 8, state.round))
    state.round += 1
    return report


def summarize(reports, cfg: ExperimentConfig) -> dict:
    return {
        "algorithm": cfg.algorithm,
        "rounds": len(reports),
        "final_accuracy": reports[-1].accuracy if reports else math.nan,
        "total_energy": math.fsum(r.E_total for r in reports),
        "total_latency": math.fsum(r.t_total for r in reports),
        "mean_selected": float(np.mean([r.M for r in reports])) if reports else 0.0,
        "mean_r_ef": float(np.mean([r.r_ef for r in reports])) if reports else math.nan,
        "mean_r_re": float(np.mean([r.r_re for r in reports])) if reports else math.nan,
        "seed": cfg.seed,
    }


def run_experiment(cfg: ExperimentConfig, state: SimState | None = None):
    """Run ``cfg.rounds`` global rounds; returns ``(reports, summary)``."""
    state = state or build_state(cfg)
    reports = [run_global_round(state) for _ in range(cfg.rounds)]
    return reports, summarize(reports, cfg)


# --- redundancy / coverage study ------------------------------------------------------------

def fixed_coverage_graph(n_clients: int, effective: int, redundant: int, seed=0) -> SocialGraph:
    """Graph whose full-participation coverage is exactly (effective, redundant).

    Every client gets a private block; ``redundant`` samples are split over a
    ring of shared blocks, the rest of ``effective`` over the private blocks.
    """
    if n_clients < 2:
        raise ValueError("need at least two clients")
    private_total = effective - redundant
    if redundant < 0 or private_total < n_clients:
        raise ValueError("need 0 <= redundant <= effective - n_clients")
    rng = np.random.default_rng(seed)
    clients = [f"u{i}" for i in range(n_clients)]

    def split(total, parts):
        if total == 0:
            return [0] * parts
        cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
        return list(np.diff(np.concatenate([[0], cuts, [total]])).astype(int))

    blocks = [SampleBlock(f"p{i}", int(s), (c,)) for i, (c, s) in enumerate(zip(clients, split(private_total, n_clients)))]
    if redundant:
        n_edges = min(n_clients, redundant)
        for e, s in enumerate(split(redundant, n_edges)):
            a, b = clients[e], clients[(e + 1) % n_clients]
            blocks.append(SampleBlock(f"s{e}", int(s), (a, b)))
    return SocialGraph(tuple(clients), tuple(blocks))


def coverage_study(effective: int, redundant: int, seed: int, rounds: int = 20, n_clients: int = 10,
                   n_features: int = 20, n_classes: int = 10, rho: float = 0.6, lr: float = 0.5,
                   local_iters: int = 5, class_sep: float = 1.0, n_test: int = 2000) -> list:
    """Noise-free full-participation training on a fixed-coverage graph, one ES.

    Returns the test accuracy after every global round.
    """
    graph = fixed_coverage_graph(n_clients, effective, redundant, seed=_rng(seed, 9))
    task = make_task(graph, n_features, n_classes, rho, class_sep, n_test, seed=_rng(seed, 4))
    learner = LinearSoftmaxLearner(n_features, n_classes)
    data = [task.client_data(c) for c in graph.clients]
    sizes = [len(y) for _, y in data]
    model = learner.init()
    accs = []
    for _ in range(rounds):
        locals_ = [learner.local_train(model, X, y, local_iters, lr) for X, y in data]
        model = weighted_average(locals_, sizes)
        accs.append(learner.evaluate(model, task.X_test, task.y_test))
    return accs
