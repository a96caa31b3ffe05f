"""Full-batch node classifiers: SGC and a 2-layer ReLU GCN.

Both are trained by gradient descent on the softmax cross-entropy of the
training nodes. ``SGC`` with ``depth=0`` is plain logistic regression on the
raw features and serves as the graph-agnostic baseline.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import TrainingDivergedError
from .graph import Graph, ShiftOperator, apply_power, shift_operator
from .sensitivity import GCNWeights
from .validation import as_rng, check_index_set, check_labels

ARCHS = ("sgc", "gcn2")
OPTIMIZERS = ("gd", "adam")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        parts = [np.asarray(a, dtype=np.int64) for a in (self.train, self.val, self.test)]
        allidx = np.concatenate(parts)
        if np.unique(allidx).size != allidx.size:
            raise ValueError("train/val/test index sets must be disjoint")
        for name, a in zip(("train", "val", "test"), parts):
            object.__setattr__(self, name, a)

    def check(self, n):
        for name in ("train", "val", "test"):
            check_index_set(getattr(self, name), n, name)
        return self


def random_split(n, fractions=(0.6, 0.2, 0.2), seed=None):
    """Random train/val/test split of ``range(n)``."""
    f = np.asarray(fractions, dtype=np.float64)
    if f.shape != (3,) or np.any(f < 0) or f.sum() > 1 + 1e-12:
        raise ValueError("fractions must be three non-negative numbers summing to at most 1")
    perm = as_rng(seed).permutation(n)
    n_train = int(round(f[0] * n))
    n_val = int(round(f[1] * n))
    n_test = min(int(round(f[2] * n)), n - n_train - n_val)
    return Split(
        np.sort(perm[:n_train]),
        np.sort(perm[n_train : n_train + n_val]),
        np.sort(perm[n_train + n_val : n_train + n_val + n_test]),
    )


def accuracy(pred, truth, index_set=None):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if index_set is not None:
        idx = np.asarray(index_set, dtype=np.int64)
        pred, truth = pred[idx], truth[idx]
    if pred.size == 0:
        return float("nan")
    return float(np.mean(pred == truth))


def confusion_matrix(pred_labels, true_labels, k):
    """Joint proportions C[u, v] = (1/n) #{i : pred_i = u, true_i = v}."""
    pred, _ = check_labels(pred_labels, k=k)
    true, _ = check_labels(true_labels, n=pred.size, k=k)
    c = np.zeros((k, k))
    np.add.at(c, (pred, true), 1.0)
    return c / pred.size


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _glorot(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class GCNClassifier(ClassifierMixin, BaseEstimator):
    """Node classifier trained by full-batch gradient descent.

    Parameters
    ----------
    arch : {"gcn2", "sgc"}
        ``gcn2`` is ``S relu(S X W1 + b1) W2 + b2``; ``sgc`` is
        ``S^depth X W + b``.
    hidden : int
        Hidden width of ``gcn2``.
    depth : int
        Propagation depth of ``sgc``; 0 gives logistic regression.
    operator : str
        Shift-operator kind built from the graph passed to ``fit``/``predict``.
    lr, momentum, optimizer
        Step size, heavy-ball momentum for ``"gd"``, or ``"adam"``.
    weight_decay : float
        L2 coefficient on the weight matrices (not the biases).
    epochs : int
    dropout : float
        Inverted dropout on the hidden layer of ``gcn2`` during training.
    scale_features : bool
        Divide each input column by its root mean square over training
        nodes. No centering, so the origin of feature space is preserved.
    random_state : int or None
    """

    def __init__(
        self,
        arch="gcn2",
        hidden=32,
        depth=2,
        operator="sym",
        lr=0.5,
        momentum=0.9,
        weight_decay=5e-4,
        epochs=200,
        dropout=0.0,
        optimizer="gd",
        scale_features=True,
        random_state=None,
    ):
        self.arch = arch
        self.hidden = hidden
        self.depth = depth
        self.operator = operator
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.dropout = dropout
        self.optimizer = optimizer
        self.scale_features = scale_features
        self.random_state = random_state

    def _check_params(self):
        if self.arch not in ARCHS:
            raise ValueError(f"arch must be one of {ARCHS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if int(self.epochs) < 1:
            raise ValueError("epochs must be at least 1")
        if self.arch == "gcn2" and int(self.hidden) < 1:
            raise ValueError("hidden must be at least 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")

    def operator_for(self, graph):
        """Shift operator used for ``graph`` (pass-through for ShiftOperator)."""
        if isinstance(graph, ShiftOperator):
            return graph
        if isinstance(graph, Graph):
            return shift_operator(graph, self.operator, isolated="zero")
        if self.arch == "sgc" and self.depth == 0:
            return None
        raise ValueError("a Graph or ShiftOperator is required")

    def _propagate(self, s, X):
        Xs = X / self.scale_
        if self.arch == "sgc":
            return Xs if self.depth == 0 else apply_power(s, Xs, self.depth)
        return np.asarray(s.matrix @ Xs)

    def _init_params(self, rng, d_in):
        if self.arch == "sgc":
            return {"W": _glorot(rng, d_in, self.n_classes_), "b": np.zeros(self.n_classes_)}
        h = int(self.hidden)
        return {
            "W1": _glorot(rng, d_in, h),
            "b1": np.zeros(h),
            "W2": _glorot(rng, h, self.n_classes_),
            "b2": np.zeros(self.n_classes_),
        }

    def _forward(self, params, s, P, drop=None):
        if self.arch == "sgc":
            return P @ params["W"] + params["b"], None
        z1 = P @ params["W1"] + params["b1"]
        h1 = np.maximum(z1, 0.0)
        if drop is not None:
            h1 = h1 * drop
        logits = s.matrix @ (h1 @ params["W2"]) + params["b2"]
        return logits, (z1, h1)

    def _loss_grad(self, params, s, P, Y, idx, drop=None):
        logits, cache = self._forward(params, s, P, drop)
        probs = softmax(logits[idx])
        ce = -np.mean(np.log(np.clip(probs[np.arange(idx.size), Y[idx]], 1e-300, None)))
        wkeys = ("W",) if self.arch == "sgc" else ("W1", "W2")
        loss = ce + 0.5 * self.weight_decay * sum(np.sum(params[w] ** 2) for w in wkeys)
        g = np.zeros_like(logits)
        onehot = np.zeros_like(probs)
        onehot[np.arange(idx.size), Y[idx]] = 1.0
        g[idx] = (probs - onehot) / idx.size
        grads = {}
        if self.arch == "sgc":
            grads["W"] = P.T @ g + self.weight_decay * params["W"]
            grads["b"] = g.sum(axis=0)
            return loss, grads
        z1, h1 = cache
        sg = s.matrix.T @ g
        grads["W2"] = h1.T @ sg + self.weight_decay * params["W2"]
        grads["b2"] = g.sum(axis=0)
        dh = sg @ params["W2"].T
        if drop is not None:
            dh = dh * drop
        dz = dh * (z1 >= 0)
        grads["W1"] = P.T @ dz + self.weight_decay * params["W1"]
        grads["b1"] = dz.sum(axis=0)
        return loss, grads

    def fit(self, X, y, graph=None, train_idx=None, val_idx=None):
        """Train on ``train_idx`` (all nodes if None), keeping the best-validation weights.

        ``y`` holds a label for every node; only training (and validation)
        entries are read.
        """
        self._check_params()
        X = check_array(X, dtype=np.float64)
        n, d_in = X.shape
        yv, k = check_labels(y, n=n)
        self.n_classes_ = max(k, 2)
        self.classes_ = np.arange(self.n_classes_)
        train = np.arange(n) if train_idx is None else check_index_set(train_idx, n, "train_idx")
        val = None if val_idx is None or len(val_idx) == 0 else check_index_set(val_idx, n, "val_idx")
        rng = as_rng(self.random_state)
        s = self.operator_for(graph)
        self.operator_kind_ = None if s is None else s.kind
        if self.scale_features:
            rms = np.sqrt(np.mean(X[train] ** 2, axis=0))
            self.scale_ = np.where(rms > 0, rms, 1.0)
        else:
            self.scale_ = np.ones(d_in)
        P = self._propagate(s, X)
        params = self._init_params(rng, d_in)
        state = {key: np.zeros_like(v) for key, v in params.items()}
        second = {key: np.zeros_like(v) for key, v in params.items()}
        history = []
        best_val = -np.inf
        best = {key: v.copy() for key, v in params.items()}
        b1, b2, eps = 0.9, 0.999, 1e-8
        for epoch in range(int(self.epochs)):
            drop = None
            if self.arch == "gcn2" and self.dropout > 0:
                keep = 1.0 - self.dropout
                drop = (rng.random((n, int(self.hidden))) < keep) / keep
            loss, grads = self._loss_grad(params, s, P, yv, train, drop)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, self.lr)
            for key in params:
                if self.optimizer == "adam":
                    state[key] = b1 * state[key] + (1 - b1) * grads[key]
                    second[key] = b2 * second[key] + (1 - b2) * grads[key] ** 2
                    mhat = state[key] / (1 - b1 ** (epoch + 1))
                    vhat = second[key] / (1 - b2 ** (epoch + 1))
                    params[key] = params[key] - self.lr * mhat / (np.sqrt(vhat) + eps)
                else:
                    state[key] = self.momentum * state[key] + grads[key]
                    params[key] = params[key] - self.lr * state[key]
            logits, _ = self._forward(params, s, P)
            pred = logits.argmax(axis=1)
            train_acc = float(np.mean(pred[train] == yv[train]))
            val_acc = float(np.mean(pred[val] == yv[val])) if val is not None else train_acc
            history.append((epoch, float(loss), train_acc, val_acc))
            if val_acc > best_val:
                best_val = val_acc
                best = {key: v.copy() for key, v in params.items()}
        self.params_ = best
        self.final_params_ = params
        self.best_val_accuracy_ = best_val
        self.history_ = history
        return self

    def decision_function(self, X, graph=None, final=False):
        """Logits (pre-softmax outputs) for every node."""
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.scale_.size:
            raise ValueError(f"expected {self.scale_.size} feature columns, got {X.shape[1]}")
        s = self.operator_for(graph)
        if s is not None and s.n != X.shape[0]:
            raise ValueError("feature rows do not match the graph size")
        params = self.final_params_ if final else self.params_
        return self._forward(params, s, self._propagate(s, X))[0]

    def predict_proba(self, X, graph=None, final=False):
        return softmax(self.decision_function(X, graph, final))

    def predict(self, X, graph=None, final=False):
        return self.decision_function(X, graph, final).argmax(axis=1)

    def score(self, X, y, graph=None, index_set=None):
        return accuracy(self.predict(X, graph), np.asarray(y), index_set)

    def decision_function_batch(self, Xs, graph=None):
        """Logits for a stack of feature matrices of shape (B, n, d_in)."""
        check_is_fitted(self, "params_")
        Xs = np.asarray(Xs, dtype=np.float64) / self.scale_
        B, n, d = Xs.shape
        s = self.operator_for(graph)
        p = self.params_
        flat = np.transpose(Xs, (1, 0, 2)).reshape(n, B * d)
        if self.arch == "sgc":
            P = flat if self.depth == 0 else apply_power(s, flat, self.depth)
            P = P.reshape(n, B, d)
            return np.transpose(P @ p["W"] + p["b"], (1, 0, 2))
        P = np.asarray(s.matrix @ flat).reshape(n, B, d)
        h = np.maximum(P @ p["W1"] + p["b1"], 0.0)  # (n, B, hidden)
        hw = (h @ p["W2"]).reshape(n, -1)
        out = np.asarray(s.matrix @ hw).reshape(n, B, -1) + p["b2"]
        return np.transpose(out, (1, 0, 2))

    def gcn_weights(self):
        """Weights of the equivalent GCN on unscaled features (``gcn2`` only)."""
        check_is_fitted(self, "params_")
        if self.arch != "gcn2":
            raise ValueError("gcn_weights is only defined for arch='gcn2'")
        p = self.params_
        return GCNWeights(p["W1"] / self.scale_[:, None], p["W2"], p["b1"], p["b2"])

    def sgc_weights(self):
        """Weight matrix of the equivalent SGC on unscaled features (``sgc`` only)."""
        check_is_fitted(self, "params_")
        if self.arch != "sgc":
            raise ValueError("sgc_weights is only defined for arch='sgc'")
        return self.params_["W"] / self.scale_[:, None], self.params_["b"]
