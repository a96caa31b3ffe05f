import numpy as np
import pytest
from sklearn.base import clone

from conftest import random_graph
from snrgraph.benchmarks import fnn_classifier, snr_classifier
from snrgraph.classifier import GCNClassifier, Split, accuracy, confusion_matrix, random_split, softmax
from snrgraph.ensemble import planted_partition, sample_sbm
from snrgraph.exceptions import TrainingDivergedError
from snrgraph.features import FeatureParams, sample_features
from snrgraph.graph import SYM, build_graph, shift_operator
from snrgraph.sensitivity import gcn_forward


def _instance(seed, n=20, d_in=3, k=2):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, 0.25, k=k)
    X = rng.standard_normal((n, d_in))
    return g, X


def test_separable_features():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 200)
    X = np.column_stack([2.0 * y - 1 + 0.1 * rng.standard_normal(200), rng.standard_normal(200)])
    clf = GCNClassifier(arch="sgc", depth=0, random_state=0).fit(X, y)
    assert clf.score(X, y) >= 0.99


def test_zero_variance_features_give_chance_accuracy():
    params = planted_partition(2, 10, 1.0, 200)
    g = sample_sbm(params, labels=np.arange(200) % 2, seed=0)
    X = np.zeros((200, 3))
    split = random_split(200, seed=0)
    clf = GCNClassifier(arch="sgc", depth=2, operator=SYM, random_state=0).fit(X, g.labels, g, split.train, split.val)
    assert accuracy(clf.predict(X, g), g.labels) == pytest.approx(0.5)


def test_gcn_beats_fnn_on_homophilous_graphs():
    p = FeatureParams.paper_default()
    wins = 0
    for seed in range(20):
        ss = np.random.SeedSequence(seed).spawn(3)
        g = sample_sbm(planted_partition(2, 10, 0.75, 500), seed=ss[0])
        X = sample_features(g, p, seed=ss[1]).X
        split = random_split(g.n, seed=ss[2])
        gcn = snr_classifier(random_state=seed).fit(X, g.labels, g, split.train, split.val)
        fnn = fnn_classifier(random_state=seed).fit(X, g.labels, g, split.train, split.val)
        wins += gcn.score(X, g.labels, g, split.test) > fnn.score(X, g.labels, g, split.test)
    assert wins >= 18


@pytest.mark.parametrize("arch", ["gcn2", "sgc"])
def test_probabilities_and_forward_oracle(arch):
    g, X = _instance(1)
    clf = GCNClassifier(arch=arch, hidden=4, epochs=20, random_state=0).fit(X, g.labels, g)
    proba = clf.predict_proba(X, g)
    assert np.allclose(proba.sum(axis=1), 1, atol=1e-9)
    assert np.array_equal(proba.argmax(axis=1), clf.predict(X, g))
    S = shift_operator(g, SYM, isolated="zero").matrix.toarray()
    p = clf.params_
    Xs = X / clf.scale_
    if arch == "gcn2":
        logits = S @ np.maximum(S @ Xs @ p["W1"] + p["b1"], 0) @ p["W2"] + p["b2"]
    else:
        logits = S @ S @ Xs @ p["W"] + p["b"]
    assert np.allclose(clf.decision_function(X, g), logits, atol=1e-10)


def test_uniform_weights_give_uniform_probabilities():
    g, X = _instance(2, k=3)
    clf = GCNClassifier(hidden=4, epochs=1, random_state=0).fit(X, g.labels, g)
    clf.params_ = {key: np.full_like(v, 0.3) for key, v in clf.params_.items()}
    assert np.allclose(clf.predict_proba(X, g), 1 / 3)


def test_softmax_shift_invariance():
    z = np.random.default_rng(3).standard_normal((5, 4))
    assert np.allclose(softmax(z), softmax(z + 7.5))
    assert np.array_equal(softmax(z).argmax(axis=1), softmax(z - 100).argmax(axis=1))


@pytest.mark.parametrize("arch", ["gcn2", "sgc"])
@pytest.mark.parametrize("seed", range(3))
def test_gradient_vs_finite_differences(arch, seed):
    g, X = _instance(10 + seed, n=18, k=3)
    clf = GCNClassifier(arch=arch, hidden=5, depth=2, weight_decay=1e-2, epochs=1, scale_features=False, random_state=seed)
    clf.fit(X, g.labels, g)
    s = clf.operator_for(g)
    P = clf._propagate(s, X)
    rng = np.random.default_rng(seed)
    params = {key: v + 0.1 * rng.standard_normal(v.shape) for key, v in clf.params_.items()}
    idx = np.arange(0, 18, 2)
    _, grads = clf._loss_grad(params, s, P, g.labels, idx)
    step = 1e-6
    for key, value in params.items():
        num = np.zeros_like(value)
        for pos in np.ndindex(value.shape):
            up = {k: v.copy() for k, v in params.items()}
            down = {k: v.copy() for k, v in params.items()}
            up[key][pos] += step
            down[key][pos] -= step
            num[pos] = (clf._loss_grad(up, s, P, g.labels, idx)[0] - clf._loss_grad(down, s, P, g.labels, idx)[0]) / (2 * step)
        assert np.allclose(grads[key], num, rtol=1e-4, atol=1e-8), key


@pytest.mark.parametrize("arch", ["gcn2", "sgc"])
def test_loss_non_increasing_for_small_lr(arch):
    g, X = _instance(20, n=20)
    clf = GCNClassifier(arch=arch, hidden=6, lr=1e-3, momentum=0.0, epochs=50, random_state=0)
    clf.fit(X, g.labels, g)
    losses = [h[1] for h in clf.history_]
    assert np.all(np.diff(losses) <= 1e-12)


def test_deterministic_under_seed():
    g, X = _instance(4)
    a = GCNClassifier(hidden=4, epochs=30, dropout=0.3, random_state=5).fit(X, g.labels, g)
    b = GCNClassifier(hidden=4, epochs=30, dropout=0.3, random_state=5).fit(X, g.labels, g)
    assert all(np.array_equal(a.params_[k], b.params_[k]) for k in a.params_)


def test_adam_and_final_weights():
    g, X = _instance(5)
    clf = GCNClassifier(hidden=4, optimizer="adam", lr=0.01, epochs=30, random_state=0).fit(X, g.labels, g)
    assert set(clf.final_params_) == {"W1", "b1", "W2", "b2"}
    assert clf.predict(X, g, final=True).shape == (g.n,)
    assert clf.params_["W1"].shape == (3, 4) and clf.params_["W2"].shape == (4, 2)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    g, X = _instance(6)
    with pytest.raises(TrainingDivergedError, match="lr"):
        GCNClassifier(arch="sgc", lr=1e300, epochs=5, random_state=0).fit(1e10 * X, g.labels, g)


@pytest.mark.parametrize(
    "kw", [{"lr": 0}, {"epochs": 0}, {"hidden": 0}, {"arch": "mlp"}, {"optimizer": "sgd"}, {"dropout": 1.0}]
)
def test_invalid_hyperparameters(kw):
    g, X = _instance(7)
    with pytest.raises(ValueError):
        GCNClassifier(**kw).fit(X, g.labels, g)


def test_graph_required_for_propagation():
    g, X = _instance(8)
    with pytest.raises(ValueError):
        GCNClassifier().fit(X, g.labels)


def test_batch_outputs_match_single_calls():
    g, X = _instance(9)
    clf = GCNClassifier(hidden=4, epochs=10, random_state=0).fit(X, g.labels, g)
    Xs = np.stack([X, 2 * X, X - 1])
    batch = clf.decision_function_batch(Xs, g)
    for b in range(3):
        assert np.allclose(batch[b], clf.decision_function(Xs[b], g))
    sgc = GCNClassifier(arch="sgc", depth=2, epochs=10, random_state=0).fit(X, g.labels, g)
    assert np.allclose(sgc.decision_function_batch(Xs, g)[1], sgc.decision_function(2 * X, g))


def test_folded_weights_reproduce_logits():
    g, X = _instance(11)
    clf = GCNClassifier(hidden=4, epochs=10, random_state=0).fit(X, g.labels, g)
    op = clf.operator_for(g)
    assert np.allclose(gcn_forward(op, clf.gcn_weights(), X), clf.decision_function(X, g))
    sgc = GCNClassifier(arch="sgc", depth=1, epochs=10, random_state=0).fit(X, g.labels, g)
    W, b = sgc.sgc_weights()
    assert np.allclose(op.matrix @ X @ W + b, sgc.decision_function(X, g))


def test_sklearn_protocol():
    clf = GCNClassifier(hidden=7)
    twin = clone(clf)
    assert twin.get_params()["hidden"] == 7
    assert twin.set_params(lr=0.1).lr == 0.1


def test_accuracy_and_confusion_examples():
    y = np.array([0, 1, 1, 0, 1])
    assert accuracy(y, y) == 1.0
    C = confusion_matrix(y, y, 2)
    assert np.allclose(C, np.diag([0.4, 0.6]))
    C0 = confusion_matrix(np.zeros(5, dtype=int), y, 2)
    assert np.allclose(C0[1], 0) and C0.sum() == pytest.approx(1)
    assert np.allclose(C0.sum(axis=0), [0.4, 0.6])
    assert accuracy(y, y, [1, 2]) == 1.0
    with pytest.raises(ValueError):
        confusion_matrix([0, 2], [0, 1], 2)
    with pytest.raises(ValueError):
        accuracy([0, 1], [0])


def test_random_predictions_near_half():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 20000)
    pred = rng.integers(0, 2, 20000)
    assert abs(accuracy(pred, y) - 0.5) < 3 * 0.5 / np.sqrt(20000)
    C = confusion_matrix(pred, y, 2)
    assert C.sum() == pytest.approx(1.0, abs=1e-15)


def test_split_invariants():
    s = random_split(100, seed=0)
    allidx = np.concatenate([s.train, s.val, s.test])
    assert np.unique(allidx).size == allidx.size == 100
    assert (s.train.size, s.val.size, s.test.size) == (60, 20, 20)
    with pytest.raises(ValueError):
        Split([0, 1], [1], [2])
    with pytest.raises(ValueError):
        Split([0], [1], [5]).check(3)
    with pytest.raises(ValueError):
        random_split(10, fractions=(0.8, 0.3, 0.0))


def test_shape_mismatch_on_predict():
    g, X = _instance(12)
    clf = GCNClassifier(hidden=3, epochs=2, random_state=0).fit(X, g.labels, g)
    with pytest.raises(ValueError):
        clf.predict(X[:, :2], g)
    small = build_graph([(0, 1)], [0, 1])
    with pytest.raises(ValueError):
        clf.predict(X, small)
