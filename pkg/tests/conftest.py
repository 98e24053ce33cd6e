import numpy as np
import pytest

from hflsnm.mobility import EdgeServerSite, MobilityState, Position, place_scenario
from hflsnm.scenario import RadioParams, Scenario, build_scenario
from hflsnm.socialnet import SampleBlock, SocialGraph, example_graph, generate_graph


@pytest.fixture
def fig1():
    return example_graph()


def random_graph(rng, n_max=20):
    """Small random sharing graph, possibly with isolated clients."""
    n = int(rng.integers(1, n_max + 1))
    clients = tuple(range(n))
    blocks = []
    for c in clients:
        if rng.random() < 0.8:
            blocks.append(SampleBlock(f"p{c}", int(rng.integers(1, 50)), (c,)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.25:
                blocks.append(SampleBlock(f"s{i}-{j}", int(rng.integers(1, 50)), (i, j)))
    # every client needs data
    owned = {o for b in blocks for o in b.owners}
    for c in clients:
        if c not in owned:
            blocks.append(SampleBlock(f"q{c}", int(rng.integers(1, 50)), (c,)))
    return SocialGraph(clients, tuple(blocks))


def line_scenario(distances, radio=None, tx_power=0.5, carrier=2.0, local_iters=1, graph=None):
    """Clients on the x axis at the given distances from ES 0 at the origin; ES 1 at x=1000."""
    n = len(distances)
    graph = graph or SocialGraph(tuple(range(n)), tuple(SampleBlock(f"p{i}", 100, (i,)) for i in range(n)))
    sites = [EdgeServerSite(0, Position(0.0, 0.0)), EdgeServerSite(1, Position(1000.0, 0.0))]
    states = [MobilityState(Position(float(d), 0.0), 0.0, 0.0) for d in distances]
    return Scenario(graph, sites, states, np.full(n, tx_power), np.full(n, carrier),
                    np.full(n, local_iters), radio or RadioParams(), arena=(2000.0, 2000.0))


def small_scenario(seed, n_clients=5, n_es=2, model_bits=2e5, avg_degree=1.6):
    rng = np.random.default_rng(seed)
    graph = generate_graph(n_clients, avg_degree, seed=rng)
    sites, states = place_scenario(n_es, (1000.0, 1000.0), n_clients, rng)
    return build_scenario(graph, sites, states, rng, RadioParams(model_bits=model_bits))


# acceptance lines collected by test_acceptance.py, printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
