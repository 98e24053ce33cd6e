import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hflsnm.costmodel import (
    ClientRadioCompute, CostBreakdown, comm_cost, comm_rate, compute_cost, energy_upper_bound,
    local_iterations, round_totals,
)
from hflsnm.errors import InfeasibleError
from hflsnm.resource import random_p1_instance, solve_p1

N0 = 4e-21


def test_compute_cost_hand():
    t, e = compute_cost(500, 2e9, ClientRadioCompute(local_iters=5))
    assert t == pytest.approx(5 * 90822 * 500 / 2e9, rel=1e-12)
    assert t == pytest.approx(0.1135275, rel=1e-6)
    assert e == pytest.approx(0.5 * 2e-28 * 5 * 90822 * 500 * 4e18, rel=1e-12)
    assert e == pytest.approx(0.0908220, rel=1e-6)


def test_compute_cost_no_iterations():
    assert compute_cost(500, 2e9, ClientRadioCompute(local_iters=0)) == (0.0, 0.0)


def test_compute_cost_bounds():
    with pytest.raises(ValueError):
        compute_cost(10, 0.5e9, ClientRadioCompute())


def test_rate_hand():
    r = comm_rate(1e6, 1e-12, 0.5, N0)
    assert r == pytest.approx(1e6 * math.log2(126.0), rel=1e-12)
    assert r == pytest.approx(6.977e6, rel=1e-4)
    assert comm_rate(1e6, 1e-12, 0.0, N0) == 0.0
    with pytest.raises(ValueError):
        comm_rate(0.0, 1e-12, 0.5, N0)


def test_rate_increasing_in_bandwidth():
    rates = [comm_rate(b, 1e-12, 0.5, N0) for b in np.geomspace(1e3, 1e8, 40)]
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_comm_cost_cancels():
    r = comm_rate(1e6, 1e-12, 0.5, N0)
    t, e = comm_cost(r, 1e6, 1e-12, 0.5, N0)
    assert t == pytest.approx(1.0, rel=1e-12) and e == pytest.approx(0.5, rel=1e-12)
    t2, e2 = comm_cost(r / 2, 1e6, 1e-12, 0.5, N0)
    assert (t2, e2) == pytest.approx((0.5, 0.25), rel=1e-12)
    assert comm_cost(0, 1e6, 1e-12, 0.5, N0) == (0.0, 0.0)
    with pytest.raises(InfeasibleError):
        comm_cost(100, 1e6, 1e-12, 0.0, N0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e3, 1e8), st.floats(1e-15, 1e-8), st.floats(0.1, 1.0), st.floats(1.0, 1e7))
def test_time_times_rate_is_bits(B, h, p, z):
    t, e = comm_cost(z, B, h, p, N0)
    assert t * comm_rate(B, h, p, N0) == pytest.approx(z, rel=1e-12)
    assert e == pytest.approx(p * t, rel=1e-15)


def test_round_totals():
    one = CostBreakdown(0.1, 0.05, 0.15, 0.05)
    assert round_totals([one], 1) == pytest.approx((0.15, 0.2))
    assert round_totals([one, one], 2) == pytest.approx((0.3, 0.8))
    slow = CostBreakdown(0.3, 0.0, 0.0, 0.0)
    assert round_totals([one, slow], 1)[0] == round_totals([slow, one], 1)[0] == 0.3
    assert round_totals([], 3) == (0.0, 0.0)


def test_bound_hand():
    X = 5 * 90822 * 500
    want = 0.5 * 2e-28 * X * 1e20 + 0.5 * (0.2 - X / 1e10)
    b = energy_upper_bound([500], [5], [0.5], 1, 0.2, 10e9, 90822, 2e-28)
    assert b.value == pytest.approx(want, rel=1e-12) and b.feasible
    assert energy_upper_bound([], [], [], 1, 0.2, 10e9, 90822, 2e-28).value == 0.0
    assert energy_upper_bound([500], [5], [0.5], 3, 0.2, 10e9, 90822, 2e-28).value == pytest.approx(3 * want)


def test_bound_flags_overloaded_client():
    b = energy_upper_bound([500, 1e6], [5, 5], [0.5, 0.5], 1, 0.2, 10e9, 90822, 2e-28)
    assert b.violations == (1,) and not b.feasible


def test_bound_dominates_solver():
    rng = np.random.default_rng(1)
    for _ in range(30):
        inst = random_p1_instance(rng, int(rng.integers(1, 6)))
        sol = solve_p1(inst)
        # express the instance's cycles as lambda=1, C=1, D=X
        b = energy_upper_bound(inst.cycles, np.ones(inst.m), inst.powers, inst.tau, inst.deadline,
                               inst.nu_max, 1.0, inst.capacitance)
        assert sol.energy <= b.value + 1e-12


def test_local_iterations_rule():
    assert list(local_iterations([100, 100, 100], 5)) == [5, 5, 5]
    assert list(local_iterations([10, 190], 5)) == [1, 10]  # 0.5 -> clamped to 1, 9.5 -> 10
    assert local_iterations([], 5).size == 0
