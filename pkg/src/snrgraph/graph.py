"""Sparse graphs, shift operators and first-order homophily."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateDegreeError, GraphDataError
from .validation import as_operator_matrix, check_labels, check_order, check_square

SYM = "sym-normalized-with-self-loops"
SYM_RAW = "sym-normalized-raw"
RANDOM_WALK = "random-walk"
MEAN_DEGREE = "mean-degree-scaled"
OPERATOR_KINDS = (SYM, SYM_RAW, RANDOM_WALK, MEAN_DEGREE)

_ALIASES = {
    "sym": SYM,
    "gcn": SYM,
    "sym-raw": SYM_RAW,
    "sym_raw": SYM_RAW,
    "rw": RANDOM_WALK,
    "random_walk": RANDOM_WALK,
    "mean": MEAN_DEGREE,
    "mean-degree": MEAN_DEGREE,
    "mean_degree": MEAN_DEGREE,
}

DENSE_THRESHOLD = 512


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with class labels.

    ``adjacency`` is a symmetric CSR matrix of ones with sorted indices and an
    empty diagonal. Build instances with :func:`build_graph`.
    """

    adjacency: sp.csr_matrix
    labels: np.ndarray
    k: int
    features: Optional[np.ndarray] = None
    _degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        deg = np.diff(self.adjacency.indptr).astype(np.float64)
        object.__setattr__(self, "_degrees", deg)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def degrees(self):
        return self._degrees

    @property
    def n_edges(self):
        return self.adjacency.nnz // 2

    @property
    def mean_degree(self):
        return self.adjacency.nnz / self.n if self.n else 0.0

    def edges(self):
        """Edge array of shape (m, 2) with u < v, sorted."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)

    def with_features(self, features):
        return build_graph(self.edges(), self.labels, features=features, k=self.k)

    def isolated_nodes(self):
        return np.flatnonzero(self._degrees == 0)


def build_graph(edges, labels, features=None, k=None, n=None):
    """Build a :class:`Graph` from an edge list.

    Duplicate pairs, reversed duplicates and self-loops are dropped; the
    result is stored symmetrically.
    """
    y, k = check_labels(labels, n=n, k=k)
    n = y.shape[0]
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2) if len(edges) else np.zeros((0, 2), np.int64)
    if e.size and (e.min() < 0 or e.max() >= n):
        bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
        raise GraphDataError(f"edge {tuple(int(v) for v in bad)} has a node id outside [0, {n})")
    e = e[e[:, 0] != e[:, 1]]
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1.0
    adj.sort_indices()
    x = None
    if features is not None:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != n:
            raise GraphDataError(f"features have {x.shape[0]} rows, expected {n}")
    return Graph(adj, y, k, x)


@dataclass(frozen=True)
class ShiftOperator:
    kind: str
    matrix: sp.csr_matrix
    symmetric: bool
    self_loops: bool = False

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def T(self):
        return ShiftOperator(self.kind, self.matrix.T.tocsr(), self.symmetric, self.self_loops)


def canonical_kind(kind):
    name = _ALIASES.get(kind, kind)
    if name not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; choose from {OPERATOR_KINDS}")
    return name


def shift_operator(g, kind=SYM, add_self_loops=None, isolated="raise"):
    """Construct a shift operator from a graph.

    ``kind`` is one of :data:`OPERATOR_KINDS` (short aliases ``sym``,
    ``sym-raw``, ``rw`` and ``mean`` are accepted). The symmetric kinds fix
    the self-loop choice by name; for the others ``add_self_loops`` adds the
    identity before scaling. With ``isolated="zero"`` zero-degree nodes get
    zero rows and columns instead of raising :class:`DegenerateDegreeError`.
    """
    name = canonical_kind(kind)
    if name in (SYM, SYM_RAW):
        implied = name == SYM
        if add_self_loops is not None and bool(add_self_loops) != implied:
            raise ValueError(f"add_self_loops={add_self_loops} conflicts with kind {name!r}")
        loops = implied
    else:
        loops = bool(add_self_loops)
    if isolated not in ("raise", "zero"):
        raise ValueError("isolated must be 'raise' or 'zero'")
    if g.n == 0:
        raise GraphDataError("graph has no nodes")

    a = g.adjacency
    if loops:
        a = (a + sp.identity(g.n, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()

    if name == MEAN_DEGREE:
        mean = deg.mean()
        if mean == 0:
            raise GraphDataError("mean-degree scaling needs at least one edge")
        m = (a / mean).tocsr()
        return ShiftOperator(name, m, True, loops)

    zero = deg == 0
    if zero.any() and isolated == "raise":
        raise DegenerateDegreeError(np.flatnonzero(zero))
    with np.errstate(divide="ignore"):
        if name == RANDOM_WALK:
            inv = np.where(zero, 0.0, 1.0 / deg)
            m = sp.diags(inv) @ a
        else:
            inv_sqrt = np.where(zero, 0.0, 1.0 / np.sqrt(deg))
            d = sp.diags(inv_sqrt)
            m = d @ a @ d
    m = sp.csr_matrix(m)
    m.sort_indices()
    if name != RANDOM_WALK:
        # exact symmetry: both triangles hold bit-identical values
        upper = sp.triu(m, k=1)
        m = (upper + upper.T + sp.diags(m.diagonal())).tocsr()
        m.sort_indices()
    return ShiftOperator(name, m, name != RANDOM_WALK, loops)


def apply_power(s, v, r):
    """Compute ``S^r v`` with ``r`` sparse multiplications."""
    r = check_order(r, "r")
    m = as_operator_matrix(s)
    out = np.asarray(v, dtype=np.float64)
    if out.shape[0] != m.shape[1]:
        raise ValueError(f"operator is {m.shape[0]}x{m.shape[1]} but vector has {out.shape[0]} rows")
    out = out.copy()
    for _ in range(r):
        out = m @ out
    return out


def operator_power(s, r, dense_threshold=DENSE_THRESHOLD):
    """Return ``S^r``: dense for n up to ``dense_threshold``, sparse otherwise."""
    r = check_order(r, "r")
    m = as_operator_matrix(s)
    n = m.shape[0]
    if n <= dense_threshold:
        return np.linalg.matrix_power(m.toarray(), r)
    out = sp.identity(n, format="csr")
    for _ in range(r):
        out = (out @ m).tocsr()
    return out


def _one_hot(labels, k=None):
    y = np.asarray(labels, dtype=np.int64)
    k = int(y.max()) + 1 if k is None else k
    out = np.zeros((y.size, k))
    out[np.arange(y.size), y] = 1.0
    return out


def weighted_homophily(s_matrix, labels):
    """Weighted homophily of a matrix.

    .. math:: h(S) = \\frac{1}{n} \\sum_{i,j} S_{ij} \\delta_{y_i y_j}

    The sum is left unnormalized, so ``h(D^{-1}A)`` is node homophily and
    ``h(A / <d>)`` is edge homophily.
    """
    m = getattr(s_matrix, "matrix", s_matrix)
    check_square(m, name="S")
    y, _ = check_labels(labels, n=m.shape[0])
    if sp.issparse(m):
        coo = m.tocoo()
        same = y[coo.row] == y[coo.col]
        return float(coo.data[same].sum() / y.size)
    m = np.asarray(m, dtype=np.float64)
    onehot = _one_hot(y)
    return float(np.sum(onehot * (m @ onehot)) / y.size)


def edge_homophily(g):
    """Fraction of edges joining nodes of the same class."""
    if g.n_edges == 0:
        raise GraphDataError("edge homophily is undefined for a graph without edges")
    coo = g.adjacency.tocoo()
    return float(np.mean(g.labels[coo.row] == g.labels[coo.col]))


def node_homophily(g):
    """Mean same-class neighbour fraction over non-isolated nodes."""
    if g.n_edges == 0:
        raise GraphDataError("node homophily is undefined for a graph without edges")
    coo = g.adjacency.tocoo()
    same = np.bincount(coo.row, weights=(g.labels[coo.row] == g.labels[coo.col]).astype(float), minlength=g.n)
    deg = g.degrees
    keep = deg > 0
    return float(np.mean(same[keep] / deg[keep]))
