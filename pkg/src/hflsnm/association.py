"""Edge association (P2): Fast Greedy plus an exhaustive oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .errors import AssociationError, InfeasibleError, OracleSizeError
from .resource import solve_p1


@dataclass
class AssociationMap:
    assignment: dict = field(default_factory=dict)  # client -> ES id

    @property
    def clusters(self) -> dict:
        """ES id -> tuple of clients in assignment order."""
        out: dict = {}
        for c, k in self.assignment.items():
            out.setdefault(k, []).append(c)
        return {k: tuple(v) for k, v in sorted(out.items())}

    def __len__(self):
        return len(self.assignment)

    def as_dict(self) -> dict:
        return {str(c): k for c, k in self.assignment.items()}


class AssociationResult(NamedTuple):
    association: AssociationMap
    energy: float
    allocations: dict  # ES id -> AllocationSolution
    solver_calls: int


def _candidates(scenario, client) -> list:
    cov = scenario.covering(client)
    if not cov:
        raise AssociationError(f"client {client!r} is outside every ES coverage disk", client=client)
    return cov


def greedy_order(selection, scenario) -> list:
    """Clients by data size descending, ties by graph order."""
    idx = scenario.graph.index
    d = scenario.data_sizes
    return sorted(selection, key=lambda c: (-int(d[idx[c]]), idx[c]))


def fast_greedy(selection, scenario, p1_solver: Callable = solve_p1) -> AssociationResult:
    """Assign clients (largest data first) to the ES giving the smallest total energy."""
    selection = list(selection)
    gains = scenario.gains()
    clusters: dict = {}
    energy: dict = {}
    sols: dict = {}
    assignment = AssociationMap()
    calls = 0
    for c in greedy_order(selection, scenario):
        best = None
        for k in _candidates(scenario, c):
            members = clusters.get(k, ()) + (c,)
            calls += 1
            try:
                sol = p1_solver(scenario.p1_instance(k, members, gains))
            except InfeasibleError:
                continue
            delta = sol.energy - energy.get(k, 0.0)
            if best is None or delta < best[0]:
                best = (delta, k, sol, members)
        if best is None:
            raise InfeasibleError(f"client {c!r} cannot be added to any ES without violating t0", client=c)
        _, k, sol, members = best
        clusters[k], energy[k], sols[k] = members, sol.energy, sol
        assignment.assignment[c] = k
    return AssociationResult(assignment, math.fsum(energy.values()), dict(sorted(sols.items())), calls)


def assignment_energies(selection, scenario, p1_solver: Callable = solve_p1, limit: int = 100_000):
    """Yield ``(assignment, energy, allocations)`` for every feasible association."""
    selection = list(selection)
    options = [_candidates(scenario, c) for c in selection]
    total = math.prod(len(o) for o in options)
    if total > limit:
        raise OracleSizeError(f"{total} assignments exceed the oracle limit {limit}")
    gains = scenario.gains()
    cache: dict = {}

    def cluster_solution(k, members):
        key = (k, frozenset(members))
        if key not in cache:
            try:
                cache[key] = p1_solver(scenario.p1_instance(k, members, gains))
            except InfeasibleError:
                cache[key] = None
        return cache[key]

    for combo in itertools.product(*options):
        groups: dict = {}
        for c, k in zip(selection, combo):
            groups.setdefault(k, []).append(c)
        sols = {}
        for k, members in groups.items():
            sol = cluster_solution(k, tuple(members))
            if sol is None:
                break
            sols[k] = sol
        else:
            yield dict(zip(selection, combo)), math.fsum(s.energy for s in sols.values()), sols


def exhaustive_assoc(selection, scenario, p1_solver: Callable = solve_p1) -> AssociationResult:
    """True P2 optimum by enumerating all K^M associations (oracle only)."""
    best = None
    count = 0
    for assign, e, sols in assignment_energies(selection, scenario, p1_solver):
        count += 1
        if best is None or e < best[1]:
            best = (assign, e, sols)
    if not list(selection):
        return AssociationResult(AssociationMap(), 0.0, {}, 0)
    if best is None:
        raise InfeasibleError("no feasible association")
    assign, e, sols = best
    return AssociationResult(AssociationMap(dict(assign)), e, dict(sorted(sols.items())), count)
