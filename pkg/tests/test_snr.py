import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import graphs, path_graph_fig1b, random_graph
from snrgraph.benchmarks import fnn_classifier
from snrgraph.classifier import GCNClassifier
from snrgraph.features import FeatureParams, sample_feature_blocks
from snrgraph.graph import SYM, SYM_RAW, build_graph, shift_operator
from snrgraph.sensitivity import GCNWeights, SensitivityTriple, gcn_jacobian_sensitivities, sgc_sensitivities
from snrgraph.snr import (
    SnrReport,
    condition_prediction_accuracy,
    empirical_snr,
    mc_snr,
    node_accuracy_runs,
    predict_snr,
    sensitivity_condition,
)

PAPER = FeatureParams.paper_default()


def _triple(signal, noise, glob):
    arr = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
    return SensitivityTriple(arr(signal), arr(noise), arr(glob), "exact-sgc", 1, "single")


def test_fnn_sensitivities_give_fnn_level():
    s = _triple([1.0, 2.5], [1.0, 2.5], [1.0, 2.5])
    assert predict_snr(s, PAPER) == pytest.approx([0.05, 0.05])


def test_fig1b_target_snr_and_condition():
    g, T = path_graph_fig1b()
    sens = sgc_sensitivities(shift_operator(g, SYM_RAW), g.labels, 1)
    p = FeatureParams.iid(1, 2e-5, 0.0, 1e-4)  # rho = 1
    assert predict_snr(sens, p)[T] == pytest.approx(p.fnn_snr, rel=1e-12)
    for rho in np.linspace(0, 1, 11):
        assert not sensitivity_condition(sens, rho)[T]


def test_zero_signal_variance():
    g = random_graph(np.random.default_rng(0), 10, 0.3)
    sens = sgc_sensitivities(shift_operator(g, SYM), g.labels, 2)
    assert np.all(predict_snr(sens, FeatureParams.iid(1, 0.0, 1, 1)) == 0)


def test_zero_denominator_sentinels():
    s = _triple([1.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    out = predict_snr(s, FeatureParams.iid(1, 1.0, 1.0, 1.0))
    assert out[0] == np.inf and out[1] == 0.0


def test_condition_boundary_and_cliques():
    assert not sensitivity_condition(_triple(1.0, 1.0, 1.0), 0.3)[0]
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    g = build_graph(edges, [0] * 6, k=2)
    sens = sgc_sensitivities(shift_operator(g, SYM), g.labels, 1)
    assert np.allclose(sens.signal, sens.global_) and np.all(sens.signal > sens.noise)
    assert sensitivity_condition(sens, 1.0).all()
    with pytest.raises(ValueError):
        sensitivity_condition(sens, 1.5)


@given(graphs(max_n=30), st.integers(1, 3), st.floats(0.01, 100))
def test_sgc_weight_scaling_cancels(g, ell, w):
    op = shift_operator(g, SYM)
    a = predict_snr(sgc_sensitivities(op, g.labels, ell, weight=w), PAPER)
    b = predict_snr(sgc_sensitivities(op, g.labels, ell, weight=10 * w), PAPER)
    assert np.allclose(a, b, rtol=1e-12)


def test_monotone_in_variances():
    g = random_graph(np.random.default_rng(1), 20, 0.2)
    sens = sgc_sensitivities(shift_operator(g, SYM), g.labels, 1)
    base = predict_snr(sens, FeatureParams.iid(1, 1e-5, 1e-4, 1e-4))
    assert np.all(predict_snr(sens, FeatureParams.iid(1, 2e-5, 1e-4, 1e-4)) > base)
    assert np.all(predict_snr(sens, FeatureParams.iid(1, 1e-5, 2e-4, 1e-4)) < base)
    assert np.all(predict_snr(sens, FeatureParams.iid(1, 1e-5, 1e-4, 2e-4)) < base)
    assert np.all(base >= 0)


def test_full_mode_matches_iid_form():
    rng = np.random.default_rng(2)
    g = random_graph(rng, 12, 0.3)
    w = GCNWeights(rng.standard_normal((3, 4)), rng.standard_normal((4, 2)))
    sens = gcn_jacobian_sensitivities(shift_operator(g, SYM), w, g.labels)
    iid = FeatureParams.iid(3, 1e-5, 2e-4, 1e-4)
    full = FeatureParams.full(1e-5 * np.eye(3), 2e-4 * np.eye(3), 1e-4 * np.eye(3))
    assert np.allclose(predict_snr(sens, full), predict_snr(sens.summed(), iid))
    assert np.allclose(predict_snr(sens, iid), predict_snr(sens, full))
    with pytest.raises(ValueError):
        predict_snr(sens.summed(), full)


def test_constant_model_has_zero_snr():
    signal, nuisance = sample_feature_blocks([0, 1, 0], PAPER, 5, 4, seed=0)
    snr = mc_snr(lambda Xs: np.ones(Xs.shape[:2] + (1,)), signal, nuisance)
    assert np.all(snr == 0)
    with pytest.raises(ValueError):
        mc_snr(lambda Xs: Xs, signal[:1], nuisance)


def test_identity_model_converges_to_fnn_level():
    y = np.arange(40) % 2
    signal, nuisance = sample_feature_blocks(y, PAPER, 300, 300, seed=1)
    snr = mc_snr(lambda Xs: Xs, signal, nuisance)
    assert snr.mean() == pytest.approx(0.05, rel=0.15)


def test_fnn_empirical_snr_within_mc_error():
    g = random_graph(np.random.default_rng(3), 60, 0.1)
    snr, model = empirical_snr(g, PAPER, fnn_classifier(random_state=0), n_mu=200, n_ge=50, seed=4)
    assert snr.shape == (60, 2)
    # a linear read-out of IID features has SNR exactly sigma^2 / (phi^2 + psi^2)
    assert snr.mean() == pytest.approx(0.05, rel=3 * np.sqrt(2 / 199))
    # a fitted model is reused as is
    again, same = empirical_snr(g, PAPER, model, n_mu=3, n_ge=3, seed=5)
    assert same is model


def test_linear_gcn_empirical_matches_prediction():
    # a ReLU GCN whose units stay active is linear, so its SNR is the prediction
    rng = np.random.default_rng(6)
    g = random_graph(rng, 30, 0.15)
    clf = GCNClassifier(hidden=3, epochs=1, scale_features=False, random_state=0)
    clf.fit(np.zeros((30, 5)), g.labels, g)
    clf.params_ = {"W1": 0.1 * rng.standard_normal((5, 3)), "b1": np.full(3, 5.0),
                   "W2": rng.standard_normal((3, 2)), "b2": np.zeros(2)}
    snr, _ = empirical_snr(g, PAPER, clf, n_mu=400, n_ge=20, seed=7)
    op = clf.operator_for(g)
    pred = predict_snr(gcn_jacobian_sensitivities(op, clf.gcn_weights(), g.labels, p=0), PAPER)
    keep = np.isfinite(pred) & (pred > 0)
    ratio = snr[keep, 0].mean() / pred[keep].mean()
    assert ratio == pytest.approx(1.0, abs=3 * np.sqrt(2 / 399))


def test_condition_prediction_accuracy():
    assert condition_prediction_accuracy([True, True], [0.9, 0.8], [0.1, 0.2]) == 1.0
    assert condition_prediction_accuracy([False, False], [0.9, 0.8], [0.1, 0.2]) == 0.0
    assert condition_prediction_accuracy([True, False], [0.5, 0.5], [0.5, 0.4]) == 0.0
    with pytest.raises(ValueError):
        condition_prediction_accuracy([True], [0.1, 0.2], [0.3, 0.4])


def test_node_accuracy_runs_shapes_and_determinism():
    g = random_graph(np.random.default_rng(8), 40, 0.1)
    gcn = GCNClassifier(hidden=4, epochs=5)
    fnn = fnn_classifier(epochs=5)
    a = node_accuracy_runs(g, PAPER, gcn, fnn, n_runs=3, seed=1)
    b = node_accuracy_runs(g, PAPER, gcn, fnn, n_runs=3, seed=1)
    assert a[0].shape == (40,) and np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.all((a[0] >= 0) & (a[0] <= 1))


def test_report_means():
    r = SnrReport(np.array([1.0, 3.0]), np.array([True, False]))
    assert r.mean_predicted == 2.0 and r.mean_empirical is None
