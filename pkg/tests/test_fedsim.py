import numpy as np
import pytest

from hflsnm.config import ExperimentConfig
from hflsnm.costmodel import comm_cost
from hflsnm.fedsim import (
    LinearSoftmaxLearner, build_state, coverage_study, edge_aggregate, fixed_coverage_graph,
    global_aggregate, make_task, run_experiment, run_global_round, state_for,
)
from hflsnm.privacy import DpConfig
from hflsnm.scenario import Scenario
from hflsnm.socialnet import SampleBlock, SocialGraph, coverage


def reference_gd(X, y, n_classes, lr, steps):
    """Plain softmax regression GD with the bias as an extra input column."""
    Xb = np.hstack([X, np.ones((len(X), 1))])
    W = np.zeros((Xb.shape[1], n_classes))
    onehot = np.eye(n_classes)[y]
    for _ in range(steps):
        z = Xb @ W
        z = z - z.max(axis=1, keepdims=True)
        p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        W = W - lr * Xb.T @ (p - onehot) / len(y)
    return W


def as_flat(W, n_features):
    return np.concatenate([W[:n_features].ravel(), W[n_features]])


def test_edge_aggregate_examples():
    assert edge_aggregate([np.array([1.0]), np.array([3.0])], [100, 300])[0] == pytest.approx(2.5)
    w = np.array([0.2, -1.0, 3.0])
    assert np.array_equal(edge_aggregate([w, w, w], [5, 7, 11]), w)
    a = edge_aggregate([np.array([1.0]), np.array([4.0])], [30, 10])
    b = edge_aggregate([np.array([4.0]), np.array([1.0])], [10, 30])
    assert a == pytest.approx(b, rel=1e-15)
    with pytest.raises(ValueError):
        edge_aggregate([], [])


def test_global_aggregate_examples():
    m = np.array([1.5, 2.0])
    assert np.array_equal(global_aggregate([m], [40]), m)
    assert global_aggregate([np.array([0.0]), np.array([4.0])], [300, 100])[0] == pytest.approx(1.0)


def test_aggregate_in_convex_hull():
    rng = np.random.default_rng(0)
    models = [rng.normal(size=6) for _ in range(4)]
    out = edge_aggregate(models, [3, 9, 1, 4])
    stack = np.stack(models)
    assert np.all(out >= stack.min(axis=0) - 1e-12) and np.all(out <= stack.max(axis=0) + 1e-12)


def test_noisy_edge_aggregate_records_scales():
    from hflsnm.privacy import NoiseRecord
    rec = NoiseRecord()
    dp = DpConfig(10.0, 0.01, 5.0)
    rngs = [np.random.default_rng(i) for i in range(2)]
    edge_aggregate([np.zeros(4), np.ones(4)], [50, 80], dp, rngs, np.random.default_rng(9),
                   record=rec, es_id=0, client_ids=["a", "b"])
    assert set(rec.sigma_up) == {"a", "b"} and all(v > 0 for v in rec.sigma_up.values())
    assert rec.sigma_down[0] == 0.0 and rec.q[0] <= 0


def test_learner_contract():
    lrn = LinearSoftmaxLearner(3, 4)
    rng = np.random.default_rng(1)
    X, y = rng.normal(size=(30, 3)), rng.integers(0, 4, 30)
    w = rng.normal(size=lrn.param_count)
    assert np.array_equal(lrn.local_train(w, X, y, 0, 0.1), w)
    g = lrn.gradient(w, X, y)
    h = 1e-6
    num = np.array([(lrn.loss(w + h * e, X, y) - lrn.loss(w - h * e, X, y)) / (2 * h) for e in np.eye(w.size)])
    assert np.allclose(g, num, atol=1e-7)
    assert 0.0 <= lrn.evaluate(w, X, y) <= 1.0


def test_learner_matches_reference():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(40, 5)), rng.integers(0, 3, 40)
    lrn = LinearSoftmaxLearner(5, 3)
    ours = lrn.local_train(lrn.init(), X, y, 25, 0.3)
    assert np.allclose(ours, as_flat(reference_gd(X, y, 3, 0.3, 25), 5), atol=1e-12)


def test_shared_blocks_identical_on_both_owners(fig1):
    task = make_task(fig1, 4, 3, seed=0)
    XA, yA = task.client_data("A")
    XB, yB = task.client_data("B")
    XAB, yAB = task.blocks["AB"]
    def contains(X, sub):
        return any(np.array_equal(X[i:i + len(sub)], sub) for i in range(len(X) - len(sub) + 1))
    assert contains(XA, XAB) and contains(XB, XAB)
    assert len(yA) == 460 and len(yB) == 400


def _central_cfg(**kw):
    base = dict(n_es=1, n_clients=6, algorithm="full", local_iters=1, tau=1, dp_epsilon=None,
                deadline=1.0, lr=0.2, rounds=100, seed=3, n_features=6, n_classes=4)
    base.update(kw)
    return ExperimentConfig(**base)


def test_centralized_equivalence():
    cfg = _central_cfg()
    state = build_state(cfg)
    reports = [run_global_round(state) for _ in range(cfg.rounds)]
    assert all(len(r.selection) == cfg.n_clients for r in reports)
    X, y = state.task.pooled(state.scenario.clients)
    ref = as_flat(reference_gd(X, y, cfg.n_classes, cfg.lr, cfg.rounds), cfg.n_features)
    assert np.max(np.abs(state.model - ref)) < 1e-9


def test_redundant_block_weighs_twice():
    g = SocialGraph(("a", "b"), (SampleBlock("pa", 20, ("a",)), SampleBlock("pb", 20, ("b",)),
                                 SampleBlock("ab", 30, ("a", "b"))))
    task = make_task(g, 3, 2, seed=1)
    lrn = LinearSoftmaxLearner(3, 2)
    w0 = np.zeros(lrn.param_count)
    locals_ = [lrn.local_train(w0, *task.client_data(c), 1, 1.0) for c in g.clients]
    agg = edge_aggregate(locals_, [50, 50])
    blocks = [task.blocks[b] for b in ("pa", "pb", "ab", "ab")]
    dup = np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])
    assert np.allclose(agg, w0 - lrn.gradient(w0, *dup), atol=1e-14)
    union = [task.blocks[b] for b in ("pa", "pb", "ab")]
    once = np.concatenate([b[0] for b in union]), np.concatenate([b[1] for b in union])
    assert not np.allclose(agg, w0 - lrn.gradient(w0, *once))


def test_single_client_round_is_one_gd_step():
    cfg = _central_cfg(n_clients=1, rounds=1)
    state = build_state(cfg)
    X, y = state.task.client_data(state.scenario.clients[0])
    want = state.learner.local_train(state.learner.init(), X, y, 1, cfg.lr)
    run_global_round(state)
    assert np.array_equal(state.model, want)


def test_energy_double_entry():
    cfg = ExperimentConfig(n_clients=20, rounds=3, seed=2)
    state = build_state(cfg)
    for _ in range(cfg.rounds):
        gains = state.scenario.gains()
        sc = state.scenario
        rep = run_global_round(state)
        total = 0.0
        for k, alloc in rep.allocations.items():
            for n, c in enumerate(alloc.client_ids):
                i = sc.graph.index[c]
                X = sc.local_iters[i] * sc.radio.cycles_per_sample * sc.data_sizes[i]
                e_cmp = 0.5 * sc.radio.capacitance * X * alloc.nu[n] ** 2
                _, e_com = comm_cost(sc.radio.model_bits, alloc.bandwidth[n], gains[i, k], sc.tx_power[i], sc.radio.noise_psd)
                total += sc.radio.tau * (e_cmp + e_com)
        assert rep.E_total == pytest.approx(total, rel=1e-9)
        assert rep.E_total <= rep.B_S + 1e-9


def test_reports_deterministic():
    cfg = ExperimentConfig(n_clients=20, rounds=3, seed=5)
    a, _ = run_experiment(cfg)
    b, _ = run_experiment(cfg)
    for x, y in zip(a, b):
        assert (x.selection, x.E_total, x.accuracy, x.association) == (y.selection, y.E_total, y.accuracy, y.association)


def test_zero_rounds():
    reports, summary = run_experiment(ExperimentConfig(n_clients=10, rounds=0))
    assert reports == [] and summary["rounds"] == 0


def test_snapshot_reproduces_run():
    cfg = ExperimentConfig(n_clients=15, rounds=2, seed=8)
    state = build_state(cfg)
    snap = Scenario.from_dict(state.scenario.to_dict())
    a, _ = run_experiment(cfg, state)
    b, _ = run_experiment(cfg, state_for(cfg, snap))
    assert [r.accuracy for r in a] == [r.accuracy for r in b]


@pytest.mark.parametrize("eff, red", [(8000, 1000), (8000, 5000), (12000, 3000), (400, 0)])
def test_fixed_coverage_graph(eff, red):
    g = fixed_coverage_graph(10, eff, red, seed=1)
    rep = coverage(g, g.clients)
    assert (rep.effective_size, rep.redundant_size) == (eff, red)


def test_coverage_study_shape():
    accs = coverage_study(300, 100, seed=0, rounds=3)
    assert len(accs) == 3 and all(0 <= a <= 1 for a in accs)
