import numpy as np
import pytest

import neighbor_xai as nx


@pytest.fixture(scope="module")
def trained():
    g = nx.random_graph(num_nodes=30, num_features=5, num_classes=3, self_loops=True, seed=1)
    model = nx.train(g, arch="gcn", self_loops=True, epochs=20, seed=2)
    return g, model


def test_auc_examples():
    assert nx.auc([0, 100], [1, 1]) == 1.0
    assert nx.auc([0, 100], [1, 0]) == 0.5
    assert nx.auc([0, 50, 100], [1, 1, 0]) == 0.75


def test_relu_backward_modes():
    assert nx.relu_backward("standard", 1.0, -2.0) == -2.0
    assert nx.relu_backward("deconvnet", -1.0, 3.0) == 3.0
    assert nx.relu_backward("guided", 1.0, -2.0) == 0.0
    with pytest.raises(nx.ConfigError):
        nx.relu_backward("bogus", 1.0, 1.0)


def test_graph_round_trip(tmp_path):
    g = nx.random_graph(num_nodes=8, seed=3)
    nx.save_graph(g, tmp_path / "g")
    back = nx.load_graph(tmp_path / "g")
    assert back.num_nodes == 8
    assert back.edges == g.edges
    np.testing.assert_array_equal(back.features, g.features)
    assert nx.set_self_loops(g, True).has_self_loops
    with pytest.raises(nx.GraphError):
        nx.load_graph(tmp_path / "missing")


def test_train_rejects_loop_mismatch():
    g = nx.random_graph(num_nodes=6, self_loops=False)
    with pytest.raises(nx.ConfigError):
        nx.train(g, self_loops=True, epochs=1)


def test_explanations_cover_receptive_field(trained):
    g, model = trained
    targets = list(range(g.num_nodes))
    for method in ("saliency", "deconvnet", "guided"):
        for e in nx.explain(method, model, g, targets):
            assert sorted(e.importance) == sorted(g.receptive_field(e.target))
            if e.importance:
                assert max(e.importance.values()) == pytest.approx(1.0)
    pg = nx.train_pgexplainer(model, g, targets, epochs=2)
    assert len(nx.explain("pgexplainer", model, g, targets, pgexplainer=pg)) == g.num_nodes


def test_metrics_and_baselines(trained):
    g, model = trained
    targets = list(range(g.num_nodes))
    explanations = nx.explain("saliency", model, g, targets)
    for metric in nx.METRICS:
        curve = nx.evaluate(metric, model, g, explanations)
        assert curve["percents"][0] == 0 and curve["percents"][-1] == 100
        assert 0.0 <= curve["auc"] <= 1.0
    full = nx.all_deleted(model, g, explanations)
    base = nx.without_neighbors(model, g, targets)
    assert full["loyalty"] == base["loyalty"]


def test_gadget_pendant_has_zero_gradient():
    g, classified, pendant = nx.gadget()
    model = nx.train(g, self_loops=False, epochs=5)
    (e,) = nx.explain("saliency", model, g, [classified])
    assert pendant in e.importance
    assert e.raw[pendant] == 0.0


def test_nonzero_neighbor_order(trained):
    g, model = trained
    (e,) = nx.explain("saliency", model, g, [0])
    desc = e.nonzero_neighbors()
    assert e.nonzero_neighbors("asc") == sorted(desc, key=lambda v: (e.importance[v], v))
    assert all(abs(e.raw[v]) > 1e-12 for v in desc)
