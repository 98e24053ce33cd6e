"""Client selection (P3): size bounds, PEMO and the RA/LG/RD/ED baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import CapacityError, ConstraintError, SelectionError
from .socialnet import SocialGraph, coverage

RETRIES_PER_SLOT = 10


@dataclass(frozen=True)
class SelectionBounds:
    L: int
    H: int
    H_bar: float
    r_ef_max: float

    def __post_init__(self):
        if not 1 <= self.L <= self.H:
            raise ValueError(f"need 1 <= L <= H, got L={self.L}, H={self.H}")


@dataclass(frozen=True)
class CandidateScore:
    selection: tuple
    effective: int
    redundant: int
    epsilon: float
    bound: float
    G: float = float("nan")


@dataclass(frozen=True)
class SelectionPlan:
    selection: tuple
    M: int
    r_ef: float
    epsilon: float
    B_S: float
    G_S: float
    pool: tuple = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "selection": list(self.selection), "M": self.M, "r_ef": self.r_ef,
            "epsilon": self.epsilon, "B_S": self.B_S, "G_S": self.G_S, "pool_size": len(self.pool),
        }


# --- bounds ------------------------------------------------------------------

def client_cap(mean_data, mean_nu, mean_power, mean_gain, B0, N0, z, t0, lam, C, K, n_clients):
    """Per-ES cap H_bar from the averaged latency equation, and H = floor(K H_bar).

    Solves lam C D/nu + z / (B log2(1 + h p / (B N0))) = t0 with B = B0 / H_bar.
    H_bar is capped at n_clients / K.
    """
    compute = lam * C * mean_data / mean_nu
    if compute >= t0:
        raise CapacityError(f"average compute time {compute:.4g}s already exceeds t0={t0}")
    cap = n_clients / K

    def lhs(hb):
        if z == 0:
            return compute
        b = B0 / hb
        return compute + z / (b * math.log2(1.0 + mean_gain * mean_power / (b * N0)))

    if lhs(1.0) > t0:
        raise CapacityError("no per-ES cap >= 1 satisfies the averaged latency equation")
    if cap <= 1.0 or lhs(cap) <= t0:
        h_bar = max(cap, 1.0)
    else:
        h_bar = brentq(lambda hb: lhs(hb) - t0, 1.0, cap, xtol=1e-12, rtol=1e-14, maxiter=500)
    return h_bar, min(int(math.floor(K * h_bar + 1e-9)), n_clients)


def _index_list(graph: SocialGraph, candidates) -> np.ndarray:
    if candidates is None:
        return np.arange(len(graph.clients))
    return np.array(sorted(graph.index[c] for c in candidates), dtype=np.int64)


def greedy_coverage_order(graph: SocialGraph, budget: int | None = None, candidates=None) -> list:
    """Standard greedy max-coverage: add the largest marginal effective gain, ties by graph order.

    Stops at ``budget`` picks or when no candidate adds new samples.
    """
    pool = list(_index_list(graph, candidates))
    inc, sizes = graph.incidence, graph.sizes
    covered = np.zeros(len(sizes), dtype=bool)
    order = []
    limit = len(pool) if budget is None else min(budget, len(pool))
    while len(order) < limit:
        gains = inc[pool][:, ~covered] @ sizes[~covered]
        j = int(np.argmax(gains))
        if gains[j] <= 0:
            break
        i = pool.pop(j)
        order.append(graph.clients[i])
        covered |= inc[i]
    return order


def r_ef_max(graph: SocialGraph, H: int, candidates=None) -> float:
    order = greedy_coverage_order(graph, H, candidates)
    return coverage(graph, order).r_ef


def lower_bound_L(graph: SocialGraph, r_ef0: float, candidates=None) -> int:
    """Length of the shortest greedy prefix with r_ef >= r_ef0."""
    if r_ef0 <= 0:
        raise ConstraintError("r_ef0 must be positive", bound="r_ef0")
    eff_u = graph.effective_universe
    order = greedy_coverage_order(graph, None, candidates)
    covered = np.zeros(len(graph.sizes), dtype=bool)
    for n, c in enumerate(order, start=1):
        covered |= graph.incidence[graph.index[c]]
        if graph.sizes[covered].sum() / eff_u >= r_ef0:
            return n
    best = coverage(graph, order).r_ef
    raise ConstraintError(
        f"r_ef0={r_ef0} exceeds the reachable maximum r_ef_max={best:.4f}; set r_ef0 <= r_ef_max",
        bound=best,
    )


def selection_bounds(scenario, r_ef0: float, candidates=None) -> SelectionBounds:
    """L, H, H_bar and r_ef_max for a scenario, from averaged client parameters."""
    graph = scenario.graph
    r = scenario.radio
    pool = list(graph.clients) if candidates is None else list(candidates)
    h_bar, H = client_cap(
        mean_data=float(np.mean(graph.data_sizes)),
        mean_nu=0.5 * (r.nu_min + r.nu_max),
        mean_power=float(np.mean(scenario.tx_power)),
        mean_gain=scenario.mean_gain(),
        B0=float(np.mean([s.bandwidth for s in scenario.sites])),
        N0=r.noise_psd,
        z=r.model_bits,
        t0=r.deadline,
        lam=float(np.mean(scenario.local_iters)),
        C=r.cycles_per_sample,
        K=scenario.n_es,
        n_clients=len(graph.clients),
    )
    H = max(1, min(H, len(pool)))
    rmax = r_ef_max(graph, H, pool)
    if r_ef0 > rmax:
        raise ConstraintError(
            f"r_ef0={r_ef0} exceeds r_ef_max={rmax:.4f} reachable with H={H} clients; set r_ef0 <= r_ef_max",
            bound=rmax,
        )
    L = lower_bound_L(graph, r_ef0, pool)
    return SelectionBounds(L=L, H=max(H, L), H_bar=h_bar, r_ef_max=rmax)


# --- PEMO ----------------------------------------------------------------------

def _threshold_candidate(graph, pool_idx, M, r_ef0, rng) -> list:
    inc, sizes = graph.incidence, graph.sizes
    remaining = list(pool_idx)
    covered = np.zeros(len(sizes), dtype=bool)
    picked = []
    budget = M
    while budget > 0 and remaining:
        rem_inc = inc[remaining][:, ~covered]
        open_sizes = sizes[~covered]
        d_ef_rest = open_sizes[rem_inc.any(axis=0)].sum()
        threshold = d_ef_rest * r_ef0 / budget
        gains = rem_inc @ open_sizes
        eligible = np.flatnonzero(gains >= threshold)
        if eligible.size == 0:
            j = int(np.argmax(gains))
        else:
            j = int(eligible[rng.integers(eligible.size)])
        i = remaining.pop(j)
        picked.append(i)
        covered |= inc[i]
        budget -= 1
    return picked


def score_candidates(graph: SocialGraph, selections, bound_fn) -> list:
    """Attach effective/redundant sizes, eps_S, B_S and pool-normalised G_S."""
    raw = []
    for sel in selections:
        cov = coverage(graph, sel)
        eps = cov.effective_size / cov.redundant_size if cov.redundant_size else math.inf
        raw.append((tuple(sel), cov.effective_size, cov.redundant_size, eps, float(bound_fn(sel))))
    finite = [r[3] for r in raw if math.isfinite(r[3])]
    eps_max = max(finite) if finite else 1.0
    b_max = max((r[4] for r in raw), default=1.0) or 1.0
    out = []
    for sel, eff, red, eps, b in raw:
        g = 0.0 if math.isinf(eps) else eps_max * b / (eps * b_max)
        out.append(CandidateScore(sel, eff, red, eps, b, g))
    return out


def pemo(graph: SocialGraph, bounds: SelectionBounds, r_ef0: float, xi: int, bound_fn, seed=None,
         candidates=None) -> SelectionPlan:
    """Performance-energy metric optimisation.

    For each size M in [L, H], draw ``xi`` threshold-rule selections, drop those
    below ``r_ef0`` (retrying each slot up to 10 times) and return the
    candidate with the smallest G_S (ties: smaller B_S, then smaller M).
    ``bound_fn(selection)`` must return the energy bound B_S.
    """
    if xi < 1:
        raise ValueError("xi must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pool_idx = _index_list(graph, candidates)
    eff_u = graph.effective_universe
    seen = set()
    pool = []
    for M in range(bounds.L, bounds.H + 1):
        for _ in range(xi):
            for _ in range(RETRIES_PER_SLOT):
                picked = _threshold_candidate(graph, pool_idx, M, r_ef0, rng)
                mask = np.zeros(len(graph.clients), dtype=bool)
                mask[picked] = True
                eff = graph.sizes[(mask.astype(np.int64) @ graph.incidence) >= 1].sum()
                if eff / eff_u >= r_ef0:
                    key = frozenset(picked)
                    if key not in seen:
                        seen.add(key)
                        pool.append([graph.clients[i] for i in picked])
                    break
    if not pool:
        raise SelectionError(f"no candidate selection reached r_ef0={r_ef0}")
    scored = score_candidates(graph, pool, bound_fn)
    best = min(range(len(scored)), key=lambda i: (scored[i].G, scored[i].bound, len(scored[i].selection), i))
    s = scored[best]
    return SelectionPlan(
        selection=s.selection, M=len(s.selection), r_ef=coverage(graph, s.selection).r_ef,
        epsilon=s.epsilon, B_S=s.bound, G_S=s.G, pool=tuple(scored),
    )


# --- baselines -------------------------------------------------------------------

def random_selection(graph: SocialGraph, rng, m: int | None = None, r_ef0: float | None = None,
                     candidates=None) -> list:
    """Uniform random clients: exactly ``m`` of them, or the shortest random prefix meeting r_ef0."""
    pool = [graph.clients[i] for i in _index_list(graph, candidates)]
    perm = [pool[i] for i in rng.permutation(len(pool))]
    if m is not None:
        return perm[: min(m, len(perm))]
    if r_ef0 is None:
        raise ValueError("need a target size m or an EDCR target r_ef0")
    eff_u = graph.effective_universe
    covered = np.zeros(len(graph.sizes), dtype=bool)
    for n, c in enumerate(perm, start=1):
        covered |= graph.incidence[graph.index[c]]
        if graph.sizes[covered].sum() / eff_u >= r_ef0:
            return perm[:n]
    raise ConstraintError(f"r_ef0={r_ef0} unreachable from the admissible clients", bound=coverage(graph, perm).r_ef)


def redundancy_driven(graph: SocialGraph, r_ef0: float, candidates=None) -> list:
    """Greedy: add the client with the least new redundant data until r_ef >= r_ef0 (ties by order)."""
    pool = list(_index_list(graph, candidates))
    inc, sizes, shared = graph.incidence, graph.sizes, graph.shared_mask
    eff_u = graph.effective_universe
    picked_mask = np.zeros(len(graph.clients), dtype=bool)
    order = []
    while pool:
        counts = picked_mask.astype(np.int64) @ inc
        if sizes[counts >= 1].sum() / eff_u >= r_ef0:
            return order
        # a shared block becomes redundant when its other owner is already picked
        at_risk = shared & (counts == 1)
        added = inc[pool][:, at_risk] @ sizes[at_risk]
        j = int(np.argmin(added))
        i = pool.pop(j)
        picked_mask[i] = True
        order.append(graph.clients[i])
    if coverage(graph, order).r_ef >= r_ef0:
        return order
    raise ConstraintError(f"r_ef0={r_ef0} unreachable", bound=coverage(graph, order).r_ef)


def effectiveness_driven(graph: SocialGraph, budget: int | None = None, candidates=None) -> list:
    """Greedy max effective coverage over all admissible clients."""
    return greedy_coverage_order(graph, budget, candidates)
