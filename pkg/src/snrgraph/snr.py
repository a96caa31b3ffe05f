"""Predicted and Monte-Carlo signal-to-noise ratios of node representations.

Near the origin of feature space the SNR of output ``H_ip`` is

    sum_qr Sigma_qr S_pqr / (sum_qr Phi_qr G_pqr + sum_qr Psi_qr N_pqr)

with S, N, G the signal, noise and global sensitivities. For IID feature
dimensions this is ``sigma^2 / (phi^2 + psi^2) * S / (rho N + (1 - rho) G)``
and an MPNN beats a graph-agnostic model exactly when
``S > rho N + (1 - rho) G``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import clone

from .classifier import GCNClassifier, random_split
from .features import IID, sample_feature_blocks, sample_features
from .validation import as_rng, as_seed_sequence


@dataclass
class SnrReport:
    predicted_snr: np.ndarray
    condition_satisfied: np.ndarray
    empirical_snr: Optional[np.ndarray] = None
    mc_config: dict = field(default_factory=dict)

    @property
    def mean_predicted(self):
        return float(np.mean(self.predicted_snr))

    @property
    def mean_empirical(self):
        return None if self.empirical_snr is None else float(np.mean(self.empirical_snr))


def _ratio(num, den):
    """num / den with +inf for positive signal over zero noise and 0 for 0/0."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros(np.broadcast(num, den).shape)
    pos = den > 0
    np.divide(num, den, out=out, where=pos)
    out = np.where(~pos & (num > 0), np.inf, out)
    return out


def predict_snr(sens, p):
    """Per-node SNR predicted from sensitivities and feature covariances.

    Single-pair and q-summed triples need IID parameters; full (q, r)
    tensors work with either mode.
    """
    if sens.form == "full":
        Sigma, Phi, Psi = p.covariances()
        num = np.einsum("qr,iqr->i", Sigma, sens.signal)
        den = np.einsum("qr,iqr->i", Phi, sens.global_) + np.einsum("qr,iqr->i", Psi, sens.noise)
        return _ratio(num, den)
    if p.mode != IID:
        raise ValueError("full-matrix feature parameters need full (q, r) sensitivity tensors")
    num = p.sigma2 * sens.signal
    den = p.phi2 * sens.global_ + p.psi2 * sens.noise
    return _ratio(num, den)


def sensitivity_condition(sens, rho):
    """True where signal > rho * noise + (1 - rho) * global (q-summed forms)."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    s = sens.summed()
    return np.asarray(s.signal > rho * s.noise + (1 - rho) * s.global_)


def mc_snr(outputs_fn, signal, nuisance, batch=None):
    """Monte-Carlo SNR of a model from factored feature draws.

    ``outputs_fn`` maps a stack of feature matrices (B, n, d_in) to outputs
    (B, n, d_out). Sample (m, s) is ``signal[m] + nuisance[s]``. For every
    class-mean draw m the outputs are averaged over s (conditional mean)
    and their variance over s is taken with an N_ge - 1 denominator; the
    SNR is the variance of the conditional means over m (N_mu - 1
    denominator) divided by the mean conditional variance.
    """
    n_mu, n_ge = signal.shape[0], nuisance.shape[0]
    if n_mu < 2 or n_ge < 2:
        raise ValueError("N_mu and N_ge must both be at least 2")
    cond_mean = None
    cond_var_sum = None
    for m in range(n_mu):
        H = outputs_fn(signal[m][None] + nuisance)
        mean = H.mean(axis=0)
        var = H.var(axis=0, ddof=1)
        if cond_mean is None:
            cond_mean = np.empty((n_mu,) + mean.shape)
            cond_var_sum = np.zeros(mean.shape)
        cond_mean[m] = mean
        cond_var_sum += var
    numerator = cond_mean.var(axis=0, ddof=1)
    denominator = cond_var_sum / n_mu
    return _ratio(numerator, denominator)


def empirical_snr(g, p, model=None, n_mu=100, n_ge=100, seed=None, split=None):
    """Per-node, per-output Monte-Carlo SNR of a GCN on graph ``g``.

    An unfitted ``model`` (a :class:`GCNClassifier`, default settings when
    None) is trained once on the first feature draw; a fitted one is used
    as is. Returns (snr of shape (n, d_out), fitted model).
    """
    seeds = as_seed_sequence(seed).spawn(3)
    signal, nuisance = sample_feature_blocks(g, p, n_mu, n_ge, seed=seeds[0])
    model = GCNClassifier() if model is None else model
    if not hasattr(model, "params_"):
        split = random_split(g.n, seed=seeds[1]) if split is None else split
        model = clone(model).fit(signal[0] + nuisance[0], g.labels, g, split.train, split.val)
    op = model.operator_for(g)
    return mc_snr(lambda Xs: model.decision_function_batch(Xs, op), signal, nuisance), model


def condition_prediction_accuracy(condition, gcn_acc, fnn_acc):
    """Fraction of nodes where the condition agrees with 'GCN beats FNN'."""
    condition = np.asarray(condition, dtype=bool)
    better = np.asarray(gcn_acc) > np.asarray(fnn_acc)
    if condition.shape != better.shape:
        raise ValueError("condition and accuracy vectors must have equal shapes")
    return float(np.mean(condition == better))


def node_accuracy_runs(g, p, gcn, fnn, n_runs=20, seed=None):
    """Per-node accuracy of two classifiers over repeated feature draws and splits.

    Each run samples fresh features and a fresh 60/20/20 split, trains both
    models and scores every node. Returns (gcn_acc, fnn_acc) of length n.
    """
    ss = as_seed_sequence(seed)
    gcn_hits = np.zeros(g.n)
    fnn_hits = np.zeros(g.n)
    for child in ss.spawn(int(n_runs)):
        s_feat, s_split, s_gcn, s_fnn = child.spawn(4)
        X = sample_features(g, p, seed=as_rng(s_feat)).X
        split = random_split(g.n, seed=as_rng(s_split))
        a = clone(gcn).set_params(random_state=int(s_gcn.generate_state(1)[0]))
        b = clone(fnn).set_params(random_state=int(s_fnn.generate_state(1)[0]))
        a.fit(X, g.labels, g, split.train, split.val)
        b.fit(X, g.labels, g, split.train, split.val)
        gcn_hits += a.predict(X, g) == g.labels
        fnn_hits += b.predict(X, g) == g.labels
    return gcn_hits / n_runs, fnn_hits / n_runs
