"""Latency and energy of local computation and FDMA uplink, per client and per round."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleError


@dataclass(frozen=True)
class ClientRadioCompute:
    tx_power: float = 0.5  # W
    carrier_freq: float = 2.0  # GHz
    cycles_per_sample: float = 90822.0
    local_iters: int = 5
    capacitance: float = 2e-28
    nu_min: float = 1e9  # Hz
    nu_max: float = 10e9  # Hz
    model_bits: float = 0.0

    def __post_init__(self):
        if self.nu_min > self.nu_max:
            raise ValueError("nu_min must not exceed nu_max")


@dataclass(frozen=True)
class CostBreakdown:
    t_cmp: float
    t_com: float
    e_cmp: float
    e_com: float

    @property
    def latency(self) -> float:
        return self.t_cmp + self.t_com

    @property
    def energy(self) -> float:
        return self.e_cmp + self.e_com


@dataclass(frozen=True)
class EnergyBound:
    """Upper bound B_S on the optimal round energy of a selection.

    ``violations`` lists positions whose compute time at nu_max already
    exceeds t0; the bound is meaningless for those clients.
    """

    value: float
    violations: tuple = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __float__(self):
        return self.value


def local_iterations(data_sizes, lambda0: float = 5.0) -> np.ndarray:
    """lambda_n = max(1, round(lambda0 * D_n / mean(D))), half-up rounding."""
    d = np.asarray(data_sizes, dtype=float)
    if d.size == 0:
        return np.zeros(0, dtype=np.int64)
    raw = lambda0 * d / d.mean()
    return np.maximum(1, np.floor(raw + 0.5)).astype(np.int64)


def compute_cost(D_n: float, nu: float, params: ClientRadioCompute):
    """(t_cmp, e_cmp) for ``local_iters`` GD passes over ``D_n`` samples at CPU ``nu``."""
    rel = 1e-12
    if nu < params.nu_min * (1 - rel) or nu > params.nu_max * (1 + rel):
        raise ValueError(f"CPU frequency {nu} outside [{params.nu_min}, {params.nu_max}]")
    cycles = params.local_iters * params.cycles_per_sample * D_n
    t = cycles / nu
    e = 0.5 * params.capacitance * cycles * nu**2
    return t, e


def comm_rate(B: float, h: float, p: float, N0: float) -> float:
    """Shannon rate B log2(1 + h p / (B N0)) in bit/s."""
    if B <= 0:
        raise ValueError("bandwidth must be positive")
    if h <= 0 or N0 <= 0 or p < 0:
        raise ValueError("need h > 0, N0 > 0, p >= 0")
    return B * math.log2(1.0 + h * p / (B * N0))


def comm_cost(z: float, B: float, h: float, p: float, N0: float):
    """(t_com, e_com) of uploading ``z`` bits."""
    if z == 0:
        return 0.0, 0.0
    r = comm_rate(B, h, p, N0)
    if r <= 0:
        raise InfeasibleError("zero uplink rate")
    t = z / r
    return t, p * t


def round_totals(per_client: Sequence[CostBreakdown], tau: int):
    """(t_total, E_total): slowest client's tau-cycle latency, summed energy."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if not per_client:
        return 0.0, 0.0
    t_total = max(tau * (c.t_cmp + c.t_com) for c in per_client)
    e_total = tau * math.fsum(c.e_cmp + c.e_com for c in per_client)
    return t_total, e_total


def energy_upper_bound(
    data_sizes,
    local_iters,
    tx_powers,
    tau: int,
    t0: float,
    nu_max: float,
    cycles_per_sample: float,
    capacitance: float,
) -> EnergyBound:
    """B_S = tau * sum[(alpha/2) lam C nu_max^2 D + p (t0 - lam C D / nu_max)]."""
    d = np.asarray(data_sizes, dtype=float)
    lam = np.asarray(local_iters, dtype=float)
    p = np.asarray(tx_powers, dtype=float)
    if d.size == 0:
        return EnergyBound(0.0)
    cycles = lam * cycles_per_sample * d
    t_cmp = cycles / nu_max
    terms = 0.5 * capacitance * cycles * nu_max**2 + p * (t0 - t_cmp)
    violations = tuple(int(i) for i in np.flatnonzero(t_cmp > t0))
    return EnergyBound(float(tau * math.fsum(terms)), violations)
