"""Signal, noise and global sensitivities of node representations.

For an output ``H_ip`` and input dims ``q, r``, with ``J_j = dH_ip / dX_jq``
and ``K_k = dH_ip / dX_kr``::

    signal = sum_{j,k} J_j K_k delta(y_j, y_k)
    noise  = sum_j J_j K_j
    global = (sum_j J_j) (sum_k K_k)

Exact values are available for SGC (closed form through bottlenecking
scores) and for a 2-layer ReLU GCN (analytic Jacobian). Upper bounds for
general MPNNs follow from Lipschitz constants of the update and message
functions.
"""

from dataclasses import dataclass, replace
from math import comb

import numpy as np
import scipy.sparse as sp

from .bottleneck import bottleneck_scores, order_metrics, self_scores
from .graph import DENSE_THRESHOLD, _one_hot, apply_power
from .validation import as_operator_matrix, check_labels, check_nonneg, check_order

EXACT_SGC = "exact-sgc"
EXACT_JACOBIAN = "exact-jacobian"
ISOTROPIC_BOUND = "isotropic-bound"
ANISOTROPIC_BOUND = "anisotropic-bound"


@dataclass(frozen=True)
class SensitivityTriple:
    """Per-node sensitivities.

    Arrays have shape (n,) for a single (q, r) pair or a q-summed diagonal,
    and (n, d_in, d_in) when the full (q, r) tensor is kept (``form="full"``).
    """

    signal: np.ndarray
    noise: np.ndarray
    global_: np.ndarray
    mode: str
    order: int
    form: str = "summed"

    def summed(self):
        """Diagonal (q = r) forms summed over q."""
        if self.form != "full":
            return self
        tr = lambda a: np.trace(a, axis1=1, axis2=2)
        return replace(self, signal=tr(self.signal), noise=tr(self.noise), global_=tr(self.global_), form="summed")

    def scaled(self, factor):
        return replace(self, signal=self.signal * factor, noise=self.noise * factor, global_=self.global_ * factor)


@dataclass(frozen=True)
class LipschitzParams:
    """Derivative bounds of the update (alpha1, alpha2) and message (beta) functions.

    ``beta1`` and ``beta2`` bound the message derivative in the receiver and
    sender argument; they default to ``beta``.
    """

    alpha1: float
    alpha2: float
    beta: float
    beta1: float = None
    beta2: float = None

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta"):
            check_nonneg(getattr(self, name), name)
        for name in ("beta1", "beta2"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, self.beta)
            check_nonneg(getattr(self, name), name)

    @classmethod
    def gcn(cls, beta):
        """GCN layer: no separate update path, unit aggregation slope."""
        return cls(0.0, 1.0, beta)


def sgc_sensitivities(s, labels, order, weight=1.0, k=None):
    """Exact sensitivities of ``H = S^order X W``.

    ``weight`` is the product ``W_qp W_rp`` of the relevant weight entries;
    the default of 1 yields the graph-only part.
    """
    order = check_order(order)
    b = bottleneck_scores(s, labels, order, order, k=k)
    w = float(weight)
    return SensitivityTriple(w * b.b_class, w * b.b_self, w * b.b_total, EXACT_SGC, order, "single")


@dataclass
class GCNWeights:
    """Parameters of ``H = S relu(S X W1 + b1) W2 + b2``."""

    W1: np.ndarray
    W2: np.ndarray
    b1: np.ndarray = None
    b2: np.ndarray = None

    def __post_init__(self):
        self.W1 = np.atleast_2d(np.asarray(self.W1, dtype=np.float64))
        self.W2 = np.atleast_2d(np.asarray(self.W2, dtype=np.float64))
        if self.W1.shape[1] != self.W2.shape[0]:
            raise ValueError(f"W1 {self.W1.shape} and W2 {self.W2.shape} do not conform")
        self.b1 = np.zeros(self.W1.shape[1]) if self.b1 is None else np.asarray(self.b1, dtype=np.float64)
        self.b2 = np.zeros(self.W2.shape[1]) if self.b2 is None else np.asarray(self.b2, dtype=np.float64)


def gcn_forward(s, weights, X, activation="relu"):
    """Output of the 2-layer GCN used for Jacobian sensitivities."""
    m = as_operator_matrix(s)
    z = m @ (np.asarray(X, dtype=np.float64) @ weights.W1) + weights.b1
    h = np.maximum(z, 0.0) if activation == "relu" else z
    return m @ (h @ weights.W2) + weights.b2


def _activation_mask(m, weights, X0, activation):
    n = m.shape[0]
    if activation == "linear":
        return np.ones((n, weights.W1.shape[1]))
    if X0 is None:
        z = np.broadcast_to(weights.b1, (n, weights.W1.shape[1]))
    else:
        z = m @ (np.asarray(X0, dtype=np.float64) @ weights.W1) + weights.b1
    # relu'(0) := 1, so at X0 = 0 with zero bias the network is its linear skeleton
    return (z >= 0).astype(np.float64)


def gcn_jacobian(s, weights, X0=None, p=0, activation="relu"):
    """Dense Jacobian ``J[q, i, j] = dH_ip / dX_jq`` of the 2-layer GCN.

    ``J_q = S diag(M[:, q]) S`` with ``M[l, q] = sum_h W1[q, h] mask[l, h] W2[h, p]``.
    Intended for n up to a few thousand nodes.
    """
    m = as_operator_matrix(s)
    mask = _activation_mask(m, weights, X0, activation)
    coeff = mask * weights.W2[:, p][None, :]  # (n, hidden)
    M = coeff @ weights.W1.T  # (n, d_in)
    out = []
    for q in range(weights.W1.shape[0]):
        jq = m @ sp.diags(M[:, q]) @ m
        out.append(jq.toarray() if m.shape[0] <= DENSE_THRESHOLD else sp.csr_matrix(jq))
    return out


def gcn_jacobian_sensitivities(s, weights, labels, X0=None, p=0, activation="relu", k=None, full=True):
    """Exact sensitivities of a 2-layer GCN at ``X0`` (default: the origin).

    Returns the full (q, r) tensors when ``full`` is True; call
    :meth:`SensitivityTriple.summed` for the q-summed diagonal form.
    ``p`` may be an output index or ``"sum"`` to add the tensors over all
    output dimensions.
    """
    m = as_operator_matrix(s)
    y, k = check_labels(labels, n=m.shape[0], k=k)
    if p == "sum":
        parts = [
            gcn_jacobian_sensitivities(m, weights, y, X0, q, activation, k, full)
            for q in range(weights.W2.shape[1])
        ]
        return replace(
            parts[0],
            signal=sum(t.signal for t in parts),
            noise=sum(t.noise for t in parts),
            global_=sum(t.global_ for t in parts),
        )
    jac = gcn_jacobian(m, weights, X0, p, activation)
    onehot = _one_hot(y, k)
    d = len(jac)
    n = m.shape[0]
    cls = np.stack([np.asarray(jq @ onehot) for jq in jac], axis=1)  # (n, d, k)
    tot = cls.sum(axis=2)  # (n, d)
    signal = np.einsum("iqc,irc->iqr", cls, cls)
    glob = np.einsum("iq,ir->iqr", tot, tot)
    noise = np.empty((n, d, d))
    for q in range(d):
        for r in range(q, d):
            if sp.issparse(jac[q]):
                val = np.asarray(jac[q].multiply(jac[r]).sum(axis=1)).ravel()
            else:
                val = np.einsum("ij,ij->i", jac[q], jac[r])
            noise[:, q, r] = val
            noise[:, r, q] = val
    out = SensitivityTriple(signal, noise, glob, EXACT_JACOBIAN, 2, "full")
    return out if full else out.summed()


def anisotropic_operator(s):
    """S + diag(S 1), the operator appearing in the anisotropic bound."""
    m = as_operator_matrix(s)
    return (m + sp.diags(np.asarray(m.sum(axis=1)).ravel())).tocsr()


def _bound_coefficients(order, lip):
    a1 = lip.alpha1
    a2b = lip.alpha2 * lip.beta
    return [comb(order, s) * a1 ** (order - s) * a2b**s for s in range(order + 1)]


def sensitivity_bounds(s, labels, order, lip, isotropic=True, k=None):
    """Node-level upper bounds on the sensitivities of an MPNN of depth ``order``.

    Each bound is sum_{s,t} C(l,s) C(l,t) a1^(2l-s-t) (a2 beta)^(s+t) b^{s,t}.
    """
    order = check_order(order)
    m = as_operator_matrix(s) if isotropic else anisotropic_operator(s)
    y, k = check_labels(labels, n=m.shape[0], k=k)
    coef = _bound_coefficients(order, lip)
    onehot = _one_hot(y, k)
    vecs = [onehot]
    for _ in range(order):
        vecs.append(m @ vecs[-1])
    noise = np.zeros(m.shape[0])
    weighted = sum(c * v for c, v in zip(coef, vecs))
    sig = np.einsum("ic,ic->i", weighted, weighted)
    tot = weighted.sum(axis=1)
    glob = tot * tot
    for a in range(order + 1):
        for b in range(a, order + 1):
            w = coef[a] * coef[b]
            if w == 0:
                continue
            term = self_scores(m, a, b)
            noise += w * term if a == b else 2 * w * term
    mode = ISOTROPIC_BOUND if isotropic else ANISOTROPIC_BOUND
    return SensitivityTriple(sig, noise, glob, mode, order, "single")


def averaged_bounds(s, labels, order, lip, general=False, k=None):
    """Graph-level (node-averaged) bounds on (signal, noise, global).

    For symmetric operators the double sum collapses by Vandermonde's
    identity to sum_u C(2l,u) a1^(2l-u) (a2 beta)^u {h, t, c}^(u). Set
    ``general=True`` for non-symmetric operators to evaluate the
    ``(S^a)^T S^b`` double sum instead.
    """
    order = check_order(order)
    m = as_operator_matrix(s)
    symmetric = getattr(s, "symmetric", None)
    if symmetric is None:
        symmetric = abs(m - m.T).max() <= 1e-12 if m.nnz else True
    if not symmetric and not general:
        raise ValueError("operator is not symmetric; pass general=True to use the (S^a)^T S^b form")
    a1 = lip.alpha1
    a2b = lip.alpha2 * lip.beta
    if symmetric:
        sig = noise = glob = 0.0
        for u in range(2 * order + 1):
            w = comb(2 * order, u) * a1 ** (2 * order - u) * a2b**u
            if w == 0:
                continue
            om = order_metrics(m, labels, u, k=k)
            sig += w * om.h
            noise += w * om.t
            glob += w * om.c
        return float(sig), float(noise), float(glob)
    b = sensitivity_bounds(m, labels, order, lip, True, k=k)
    return float(b.signal.mean()), float(b.noise.mean()), float(b.global_.mean())


def jacobian_norm_bound(s, order, lip, rows=None, dense_threshold=DENSE_THRESHOLD):
    """Entrywise bound K^l on the Jacobian norms ||dH_i / dX_j||.

    ``K = a2 beta2 S + a2 beta1 diag(S 1) + a1 I``. Dense output is limited
    to n <= ``dense_threshold``; for larger graphs pass ``rows`` to get only
    those rows.
    """
    order = check_order(order)
    m = as_operator_matrix(s)
    n = m.shape[0]
    deg = np.asarray(m.sum(axis=1)).ravel()
    K = (lip.alpha2 * lip.beta2 * m + sp.diags(lip.alpha2 * lip.beta1 * deg + lip.alpha1)).tocsr()
    if rows is None:
        if n > dense_threshold:
            raise ValueError(f"n={n} exceeds the dense threshold {dense_threshold}; pass rows=")
        return np.linalg.matrix_power(K.toarray(), order)
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    e = np.zeros((n, rows.size))
    e[rows, np.arange(rows.size)] = 1.0
    return apply_power(K.T.tocsr(), e, order).T
