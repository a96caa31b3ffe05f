"""Bottlenecking scores and higher-order homophily.

For target node ``i`` and path orders ``r, s``::

    b_class[i] = sum_{j,k} [S^r]_ij [S^s]_ik delta(y_j, y_k)
    b_total[i] = sum_{j,k} [S^r]_ij [S^s]_ik
    b_self[i]  = sum_j     [S^r]_ij [S^s]_ij

The double sums are evaluated per class, ``b_class = sum_c (S^r 1_c)(S^s 1_c)``,
so the cost is O(k (r + s) nnz) rather than O(n^2). Node averages of the
three scores are the weighted homophily, self-connectivity and total
connectivity of ``(S^r)^T S^s``, which is ``S^{r+s}`` for symmetric S.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import _one_hot, apply_power, operator_power
from .validation import as_operator_matrix, check_labels, check_order


@dataclass(frozen=True)
class BottleneckScores:
    r: int
    s: int
    b_class: np.ndarray
    b_self: np.ndarray
    b_total: np.ndarray


@dataclass(frozen=True)
class OrderMetrics:
    order: int
    h: float
    t: float
    c: float

    def to_dict(self, operator=None):
        out = {"operator": operator, "order": self.order, "h": self.h, "t": self.t, "c": self.c}
        return out if operator is not None else {k: v for k, v in out.items() if k != "operator"}


def _rowwise_dot(a, b):
    """sum_j a_ij b_ij for dense or sparse a, b."""
    if sp.issparse(a) or sp.issparse(b):
        prod = sp.csr_matrix(a).multiply(sp.csr_matrix(b))
        return np.asarray(prod.sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", a, b)


def self_scores(s, r, s_order):
    """b_self for orders (r, s_order): row-wise products of the two powers."""
    pr = operator_power(s, r)
    ps = pr if s_order == r else operator_power(s, s_order)
    return _rowwise_dot(pr, ps)


def class_vectors(s, labels, r, k=None):
    """S^r applied to the class indicator matrix, shape (n, k)."""
    m = as_operator_matrix(s)
    y, k = check_labels(labels, n=m.shape[0], k=k)
    return apply_power(m, _one_hot(y, k), r)


def bottleneck_scores(s, labels, r, s_order, k=None):
    """Per-node class, self and total bottlenecking scores."""
    r = check_order(r, "r")
    s_order = check_order(s_order, "s_order")
    m = as_operator_matrix(s)
    y, k = check_labels(labels, n=m.shape[0], k=k)
    onehot = _one_hot(y, k)
    v = apply_power(m, onehot, r)
    w = v if s_order == r else apply_power(m, onehot, s_order)
    b_class = np.einsum("ic,ic->i", v, w)
    # class indicators sum to the all-ones vector
    u_r = v.sum(axis=1)
    u_s = w.sum(axis=1)
    b_total = u_r * u_s
    b_self = self_scores(m, r, s_order)
    return BottleneckScores(r, s_order, b_class, b_self, b_total)


def order_metrics(s, labels, order, split=None, k=None):
    """Higher-order homophily h, self-connectivity t and total connectivity c.

    By default the metrics are those of ``S^order``. Passing ``split=(r, s)``
    with ``r + s == order`` evaluates them for ``(S^r)^T S^s`` instead, which
    is the form whose value equals the node average of the bottlenecking
    scores for non-symmetric operators.
    """
    order = check_order(order)
    m = as_operator_matrix(s)
    n = m.shape[0]
    y, k = check_labels(labels, n=n, k=k)
    if split is not None:
        r, q = (check_order(v) for v in split)
        if r + q != order:
            raise ValueError(f"split {split} does not add up to order {order}")
        b = bottleneck_scores(m, y, r, q, k=k)
        return OrderMetrics(order, float(b.b_class.mean()), float(b.b_self.mean()), float(b.b_total.mean()))
    onehot = _one_hot(y, k)
    v = apply_power(m, onehot, order)
    h = float(np.sum(onehot * v) / n)
    c = float(v.sum() / n)
    a = order // 2
    left = operator_power(m, a)
    right = left if order - a == a else operator_power(m, order - a)
    right_t = right.T
    t = float(_rowwise_dot(left, right_t).sum() / n)
    return OrderMetrics(order, h, t, c)


def homophily_profile(s, labels, orders, k=None):
    """h^(l) for each order in ``orders`` without recomputing shared powers."""
    m = as_operator_matrix(s)
    y, k = check_labels(labels, n=m.shape[0], k=k)
    onehot = _one_hot(y, k)
    orders = [check_order(o) for o in orders]
    out = {}
    v = onehot
    for step in range(max(orders) + 1):
        if step in orders:
            out[step] = float(np.sum(onehot * v) / y.size)
        v = m @ v
    return [out[o] for o in orders]
