"""Per-round scheduling: who trains, on which ES, with what CPU and bandwidth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .association import AssociationMap, fast_greedy
from .costmodel import CostBreakdown, round_totals
from .errors import ConfigurationError, InfeasibleError, SelectionError
from .resource import AllocationSolution, comm_time, p1_objective, solve_p1
from .selection import (
    pemo,
    random_selection,
    redundancy_driven,
    effectiveness_driven,
    selection_bounds,
)

ALGORITHMS = ("do-snm", "ra", "lg", "rd", "ed", "full")


@dataclass
class Schedule:
    selection: tuple
    association: AssociationMap
    allocations: dict  # ES id -> AllocationSolution
    costs: dict  # client -> CostBreakdown
    E_total: float
    t_total: float
    B_S: float
    plan: object = field(default=None, repr=False)

    @property
    def clusters(self) -> dict:
        return self.association.clusters

    def deadline_violations(self, t0: float, tau: int = 1) -> list:
        return [c for c, b in self.costs.items() if tau * b.latency > tau * t0 * (1 + 1e-9)]


def _costs_from(alloc: AllocationSolution, inst) -> dict:
    out = {}
    for n, c in enumerate(alloc.client_ids):
        X = inst.cycles[n]
        e_cmp = 0.5 * inst.capacitance * X * alloc.nu[n] ** 2
        out[c] = CostBreakdown(
            t_cmp=float(X / alloc.nu[n]),
            t_com=float(alloc.t_com[n]),
            e_cmp=float(e_cmp),
            e_com=float(inst.powers[n] * alloc.t_com[n]),
        )
    return out


def _finalize(scenario, selection, association, allocations, gains, plan=None) -> Schedule:
    costs = {}
    for k, alloc in allocations.items():
        costs.update(_costs_from(alloc, scenario.p1_instance(k, alloc.client_ids, gains)))
    ordered = {c: costs[c] for c in selection}
    t_total, e_total = round_totals(list(ordered.values()), scenario.radio.tau)
    return Schedule(
        selection=tuple(selection),
        association=association,
        allocations=allocations,
        costs=ordered,
        E_total=e_total,
        t_total=t_total,
        B_S=scenario.energy_bound(selection).value,
        plan=plan,
    )


def allocate(scenario, association: AssociationMap, gains=None) -> dict:
    """Solve P1 on every cluster of a fixed association."""
    if gains is None:
        gains = scenario.gains()
    return {k: solve_p1(scenario.p1_instance(k, members, gains)) for k, members in association.clusters.items()}


def _greedy_then_ao(scenario, selection, plan=None) -> Schedule:
    res = fast_greedy(selection, scenario)
    return _finalize(scenario, selection, res.association, res.allocations, scenario.gains(), plan)


def _do_snm(scenario, cfg, rng, candidates) -> Schedule:
    bounds = selection_bounds(scenario, cfg.r_ef0, candidates)
    plan = pemo(scenario.graph, bounds, cfg.r_ef0, cfg.xi,
                lambda s: scenario.energy_bound(s).value, seed=rng, candidates=candidates)
    # the averaged cap H can overshoot what a real association fits; fall back
    # through the pool in G_S order until Fast Greedy finds a feasible one
    for cand in sorted(plan.pool, key=lambda s: (s.G, s.bound, len(s.selection))):
        try:
            return _greedy_then_ao(scenario, list(cand.selection), plan)
        except InfeasibleError:
            continue
    raise SelectionError("no PEMO candidate admits a feasible association")


def _random_allocation(scenario, selection, rng) -> Schedule:
    gains = scenario.gains()
    assign = AssociationMap()
    for c in selection:
        cov = scenario.covering(c)
        assign.assignment[c] = int(cov[rng.integers(len(cov))])
    r = scenario.radio
    allocations = {}
    for k, members in assign.clusters.items():
        inst = scenario.p1_instance(k, members, gains)
        B = np.full(inst.m, inst.bandwidth / inst.m)
        nu = rng.uniform(r.nu_min, r.nu_max, size=inst.m)
        tc = np.array([comm_time(b, a, inst.model_bits) for b, a in zip(B, inst.snr_scale)])
        nan = np.full(inst.m, np.nan)
        allocations[k] = AllocationSolution(
            client_ids=inst.client_ids, nu=nu, bandwidth=B,
            binding=np.zeros(inst.m, dtype=bool), mu=math.nan,
            theta=nan, gamma=nan, sigma=nan,
            energy=p1_objective(inst, nu, B), t_cmp=inst.cycles / nu, t_com=tc,
        )
    return _finalize(scenario, selection, assign, allocations, gains)


def _nearest_then_ao(scenario, selection) -> Schedule:
    gains = scenario.gains()
    d = scenario.distances()
    idx = scenario.graph.index
    assign = AssociationMap()
    for c in selection:
        cov = scenario.covering(c)
        assign.assignment[c] = min(cov, key=lambda k: (d[idx[c], k], k))
    return _finalize(scenario, selection, assign, allocate(scenario, assign, gains), gains)


def _baseline_size(scenario, cfg, rng, candidates):
    """RA/LG client count: fixed, uniform over PEMO's range [L, H], or None for the EDCR prefix rule."""
    if cfg.baseline_m is not None:
        return cfg.baseline_m
    if getattr(cfg, "baseline_rule", "range") == "edcr":
        return None
    b = selection_bounds(scenario, cfg.r_ef0, candidates)
    return int(rng.integers(b.L, b.H + 1))


def schedule_round(algorithm: str, scenario, cfg, rng: np.random.Generator) -> Schedule:
    """Selection, association and allocation for one global round.

    ``cfg`` needs ``r_ef0``, ``xi``, ``baseline_m`` and ``baseline_rule`` attributes.
    """
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    candidates = scenario.admissible()
    if not candidates:
        raise InfeasibleError("no client can meet the deadline on any ES")
    graph = scenario.graph
    if algorithm == "do-snm":
        return _do_snm(scenario, cfg, rng, candidates)
    if algorithm == "full":
        return _greedy_then_ao(scenario, candidates)
    if algorithm in ("ra", "lg"):
        sel = random_selection(graph, rng, _baseline_size(scenario, cfg, rng, candidates), cfg.r_ef0, candidates)
        if algorithm == "ra":
            return _random_allocation(scenario, sel, rng)
        return _nearest_then_ao(scenario, sel)
    if algorithm == "rd":
        return _greedy_then_ao(scenario, redundancy_driven(graph, cfg.r_ef0, candidates))
    bounds = selection_bounds(scenario, min(cfg.r_ef0, 1.0), candidates)
    return _greedy_then_ao(scenario, effectiveness_driven(graph, bounds.H, candidates))
