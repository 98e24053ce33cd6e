import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hflsnm.errors import ConfigurationError
from hflsnm.mobility import (
    EdgeServerSite, MobilityState, Position, channel_gain, grid_sites, pathloss_db, place_scenario,
    step_mobility,
)

ORIGIN = EdgeServerSite(0, Position(0.0, 0.0))


def test_zero_speed_stays_put():
    s = MobilityState(Position(10.0, 20.0), 0.0, 1.3)
    out = step_mobility(s, 10.0, np.random.default_rng(0))
    assert out.position == s.position


def test_straight_moves():
    rng = np.random.default_rng(0)
    east = step_mobility(MobilityState(Position(400.0, 400.0), 10.0, 0.0), 10.0, rng, (1000.0, 1000.0))
    assert east.position.x == pytest.approx(500.0, abs=1e-12) and east.position.y == 400.0
    north = step_mobility(MobilityState(Position(400.0, 400.0), 10.0, math.pi / 2), 5.0, rng, (1000.0, 1000.0))
    assert north.position.y == pytest.approx(450.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1000), st.floats(0, 1000), st.floats(0, 27.8), st.floats(0, 2 * math.pi), st.integers(0, 1000))
def test_displacement_and_arena(x, y, v, d, seed):
    s = MobilityState(Position(x, y), v, d)
    free = step_mobility(s, 10.0, np.random.default_rng(seed))
    assert free.position.distance(s.position) == pytest.approx(v * 10.0, abs=1e-9)
    boxed = step_mobility(s, 10.0, np.random.default_rng(seed), (1000.0, 1000.0))
    assert 0.0 <= boxed.position.x <= 1000.0 and 0.0 <= boxed.position.y <= 1000.0
    assert 0.0 <= boxed.direction < 2 * math.pi


def test_trajectory_determinism():
    def walk(seed):
        s = MobilityState(Position(500.0, 500.0), 20.0, 0.3)
        rng = np.random.default_rng(seed)
        for _ in range(50):
            s = step_mobility(s, 10.0, rng, (1000.0, 1000.0))
        return s
    assert walk(4) == walk(4)


def test_pathloss_hand_values():
    assert pathloss_db(500.0, 2.0) == pytest.approx(32.4 + 20 * math.log10(2) + 30 * math.log10(500), abs=1e-12)
    assert pathloss_db(500.0, 2.0) == pytest.approx(119.39, abs=5e-3)
    assert channel_gain(Position(500.0, 0.0), ORIGIN, 2.0) == pytest.approx(1.15e-12, rel=1e-2)
    assert pathloss_db(1.0, 1.0) == pytest.approx(32.4)
    assert pathloss_db(0.0, 1.0) == pytest.approx(32.4)  # clamped


def test_doubling_distance_adds_9dB():
    assert pathloss_db(400.0, 3.0) - pathloss_db(200.0, 3.0) == pytest.approx(30 * math.log10(2), abs=1e-12)


def test_gain_decreasing():
    gains = [channel_gain(Position(d, 0.0), ORIGIN, 2.0) for d in (10, 100, 500, 1500)]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    by_f = [channel_gain(Position(300, 0.0), ORIGIN, f) for f in (1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(by_f, by_f[1:]))


def test_four_es_grid():
    sites, states = place_scenario(4, (1000.0, 1000.0), 60, seed=5)
    assert [(s.position.x, s.position.y) for s in sites] == [(250, 250), (250, 750), (750, 250), (750, 750)]
    assert len(states) == 60
    assert all(any(s.covers(st.position) for s in sites) for st in states)
    assert all(0 <= st.speed <= 100 / 3.6 for st in states)


def test_single_cell():
    sites, _ = place_scenario(1, (100.0, 100.0), 1, seed=0)
    assert (sites[0].position.x, sites[0].position.y) == (50.0, 50.0)


def test_placement_determinism():
    assert place_scenario(4, (1000.0, 1000.0), 30, seed=9) == place_scenario(4, (1000.0, 1000.0), 30, seed=9)


def test_tiny_arena_rejected():
    with pytest.raises(ConfigurationError):
        grid_sites(9, (2.0, 2.0))
