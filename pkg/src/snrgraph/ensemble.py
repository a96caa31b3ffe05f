"""Stochastic block model ensembles and their expected diagnostics.

An SBM is given by a symmetric block matrix ``B``, class proportions ``pi``
and node count ``n``; edges are independent with probability
``B[y_i, y_j] / n``. Expected quantities are computed on the k x k block
level with

    Pi = diag(pi),  D = diag(B pi),  B_hat = D^{-1/2} Pi^{1/2} B Pi^{1/2} D^{-1/2}.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import build_graph
from .validation import as_rng, check_labels, check_order, check_simplex


@dataclass(frozen=True)
class SbmParams:
    B: np.ndarray
    pi: np.ndarray
    n: int

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        if B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if not np.allclose(B, B.T, rtol=1e-12, atol=1e-12):
            raise ValueError("B must be symmetric")
        if np.any(B < 0) or not np.all(np.isfinite(B)):
            raise ValueError("B entries must be finite and non-negative")
        pi = check_simplex(self.pi, atol=1e-9)
        if pi.size != B.shape[0]:
            raise ValueError("pi and B disagree on k")
        if int(self.n) < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "n", int(self.n))

    @property
    def k(self):
        return self.pi.size

    @property
    def class_degrees(self):
        """Expected degree of a node in each class, B pi."""
        return self.B @ self.pi

    @property
    def mean_degree(self):
        return float(self.pi @ self.B @ self.pi)

    @property
    def B_hat(self):
        ds = 1.0 / np.sqrt(self.class_degrees)
        ps = np.sqrt(self.pi)
        return (ds * ps)[:, None] * self.B * (ps * ds)[None, :]

    def with_pi(self, pi):
        return SbmParams(self.B, pi, self.n)

    def to_dict(self):
        return {"B": self.B.tolist(), "pi": self.pi.tolist(), "n": self.n}


@dataclass(frozen=True)
class EnsembleMetrics:
    order: int
    expected_h: float
    expected_c: float
    expected_t: float
    band: float
    t_band: float

    def to_dict(self):
        return {
            "ell": self.order,
            "expected_h": self.expected_h,
            "expected_c": self.expected_c,
            "expected_t": self.expected_t,
            "band": self.band,
        }


def planted_partition(k, d, h, n):
    """k equal classes, mean degree d, expected edge homophily h."""
    if int(k) < 2:
        raise ValueError("k must be at least 2")
    if not 0 <= h <= 1:
        raise ValueError("h must lie in [0, 1]")
    if not d > 0:
        raise ValueError("d must be positive")
    k = int(k)
    diag = k * d * h
    off = k * d * (1 - h) / (k - 1)
    if max(diag, off) > n:
        raise ValueError(f"edge probability {max(diag, off) / n:g} exceeds 1 for n={n}")
    B = np.full((k, k), off)
    np.fill_diagonal(B, diag)
    return SbmParams(B, np.full(k, 1.0 / k), n)


def estimate_sbm(g):
    """Maximum-likelihood block matrix of ``g`` given its labels.

    ``B_uv = n * e_uv / (n_u n_v)`` between classes and
    ``n * 2 e_uu / (n_u (n_u - 1))`` within a class.
    """
    n, k = g.n, g.k
    sizes = np.bincount(g.labels, minlength=k).astype(np.float64)
    if np.any(sizes == 0):
        raise ValueError("every class needs at least one node")
    Y = np.zeros((n, k))
    Y[np.arange(n), g.labels] = 1.0
    counts = np.asarray(Y.T @ (g.adjacency @ Y))
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1))
    B = np.divide(n * counts, pairs, out=np.zeros_like(counts), where=pairs > 0)
    return SbmParams((B + B.T) / 2, sizes / n, n)


def _pair_from_triangular(t, m):
    """Map linear indices over {(a, b): 0 <= a < b < m} (row-major) to pairs."""
    t = np.asarray(t, dtype=np.int64)
    start = lambda a: a * m - a * (a + 1) // 2
    a = np.floor(m - 0.5 - np.sqrt((m - 0.5) ** 2 - 2.0 * t)).astype(np.int64)
    a = np.clip(a, 0, m - 2)
    for _ in range(3):
        a = np.where(start(a + 1) <= t, a + 1, a)
        a = np.where(start(a) > t, a - 1, a)
    b = t - start(a) + a + 1
    return a, b


def sample_sbm(params, labels=None, seed=None, clip=False):
    """Sample a graph from the ensemble.

    Without ``labels`` every node draws its class from Categorical(pi).
    Edge counts per block pair are drawn from the binomial and the edges
    placed uniformly, which is equivalent to independent Bernoulli trials.
    Probabilities above 1 raise unless ``clip`` is set.
    """
    rng = as_rng(seed)
    n, k = params.n, params.k
    if labels is None:
        y = rng.choice(k, size=n, p=params.pi)
    else:
        y, _ = check_labels(labels, n=n, k=k)
    prob = params.B / n
    if prob.max(initial=0.0) > 1:
        if not clip:
            raise ValueError(f"edge probability {prob.max():g} exceeds 1")
        warnings.warn("edge probabilities above 1 clipped", RuntimeWarning, stacklevel=2)
        prob = np.minimum(prob, 1.0)
    members = [np.flatnonzero(y == u) for u in range(k)]
    chunks = []
    for u in range(k):
        for v in range(u, k):
            p = prob[u, v]
            mu, mv = members[u], members[v]
            total = mu.size * (mu.size - 1) // 2 if u == v else mu.size * mv.size
            if p <= 0 or total == 0:
                continue
            count = rng.binomial(total, p)
            if count == 0:
                continue
            idx = rng.choice(total, size=count, replace=False)
            if u == v:
                a, b = _pair_from_triangular(idx, mu.size)
                chunks.append(np.column_stack([mu[a], mu[b]]))
            else:
                chunks.append(np.column_stack([mu[idx // mv.size], mv[idx % mv.size]]))
    edges = np.concatenate(chunks) if chunks else np.zeros((0, 2), np.int64)
    return build_graph(edges, y, k=k)


def _sparsity_guard(params):
    if params.mean_degree > params.n / 10:
        warnings.warn(
            f"mean degree {params.mean_degree:g} exceeds n/10; the sparse-ensemble approximation may be poor",
            RuntimeWarning,
            stacklevel=3,
        )


def expected_adjacency_power(params, r, pi=None):
    """Block form of E[A]^r: entry (u, v) times 1/n gives [E[A]^r]_ij."""
    r = check_order(r, "r")
    if r == 0:
        raise ValueError("r must be at least 1")
    pi = params.pi if pi is None else np.asarray(pi, dtype=np.float64)
    out = params.B.copy()
    for _ in range(r - 1):
        out = out @ (pi[:, None] * params.B)
    return out


def underreaching(params, u, v, r):
    """Approximate P(shortest-path length = r) between a class-u and a class-v node.

    ``[E[A]^r]_ij = (1/n) [B (Pi B)^(r-1)]_{uv}``.
    """
    _sparsity_guard(params)
    return float(expected_adjacency_power(params, r)[u, v] / params.n)


def oversquashing_factor(params, u, v, r, bound=False):
    """Expected r-step normalized-walk weight per shortest path of length r.

    The leading-order value is ``[(D^-1/2 E[A] D^-1/2)^r]_ij / [E[A]^r]_ij``.
    With ``bound=True`` the middle degree factors become
    ``D^-1 - D^-2 (I - e^-D)``, the mean inverse degree of an intermediate
    node that is known to have two path neighbours.
    """
    r = check_order(r, "r")
    if r == 0:
        raise ValueError("r must be at least 1")
    deg = params.class_degrees
    if bound:
        mid = 1.0 / deg - (1.0 - np.exp(-deg)) / deg**2
    else:
        mid = 1.0 / deg
    num = params.B.copy()
    for _ in range(r - 1):
        num = num @ ((params.pi * mid)[:, None] * params.B)
    num = num[u, v] / np.sqrt(deg[u] * deg[v])
    den = expected_adjacency_power(params, r)[u, v]
    if den <= 0:
        raise ValueError(f"classes {u} and {v} are not connected by paths of length {r}")
    return float(num / den)


def _check_confusion(C, params):
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    if C.shape != (params.k, params.k):
        raise ValueError(f"C must be {params.k}x{params.k}")
    if np.any(C < -1e-15) or abs(C.sum() - 1) > 1e-9:
        raise ValueError("C must be non-negative and sum to 1")
    if not np.allclose(C.sum(axis=1), params.pi, atol=1e-9):
        raise ValueError("row sums of C (predicted-class proportions) must equal pi")
    return C


def expected_order_metrics(params, order, C=None):
    """Expected h, c and t of ``S^order`` for the sym-normalized operator of a sampled graph.

    ``h = tr(C^T Pi^-1/2 B_hat^l Pi^-1/2 C)`` and
    ``c = 1^T Pi^1/2 B_hat^l Pi^1/2 1``, accurate up to O(1/<d>). ``C`` is the
    confusion matrix of the labels that generated the graph (rows) against
    the labels being scored (columns); None means the same labels (C = Pi).
    ``t`` is only known to be O(<d>^-l) and is reported as 0 with that band.
    """
    order = check_order(order)
    _sparsity_guard(params)
    pi = params.pi
    C = np.diag(pi) if C is None else _check_confusion(C, params)
    bl = np.linalg.matrix_power(params.B_hat, order)
    isq = 1.0 / np.sqrt(pi)
    h = float(np.trace(C.T @ (isq[:, None] * bl * isq[None, :]) @ C))
    sq = np.sqrt(pi)
    c = float(sq @ bl @ sq)
    md = params.mean_degree
    return EnsembleMetrics(order, h, c, 0.0, 1.0 / md, md ** (-order))


def first_second_order_bounds(params, C=None):
    """Sparse-SBM bounds on the expected first- and second-order homophily."""
    pi = params.pi
    C = np.diag(pi) if C is None else _check_confusion(C, params)
    deg = params.class_degrees
    B = params.B
    isq = 1.0 / np.sqrt(deg)
    h1 = float(np.trace(C.T @ (isq[:, None] * B * isq[None, :]) @ C))
    mid = 1.0 / deg - (1.0 - np.exp(-deg)) / deg**2
    inv = 1.0 / deg
    first = float(pi @ (inv[:, None] * B * inv[None, :]) @ pi)
    inner = (inv[:, None] * B) @ ((mid * pi)[:, None] * B)
    h2 = first + float(np.trace(C.T @ inner @ C))
    return h1, h2


@dataclass(frozen=True)
class PoissonMoments:
    lam: float
    inv_x1: float
    inv_x2: float
    inv_sqrt_lower: float
    inv_sqrt_upper: float

    def inv_power_bound(self, k):
        """Leading term lambda^-k of the bound on E[1/(X+1)^k]."""
        return self.lam ** (-float(k))


def poisson_moments(lam):
    """Closed forms for inverse moments of X ~ Poisson(lam)."""
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    inv_x1 = -np.expm1(-lam) / lam
    if lam < 1e-4:
        inv_x2 = 0.5 - lam / 6 + lam**2 / 24
    else:
        inv_x2 = (lam + np.expm1(-lam)) / lam**2
    lower_sq = 1.0 / lam - 1.0 / (2 * lam**2)
    lower = float(np.sqrt(lower_sq)) if lower_sq > 0 else 0.0
    return PoissonMoments(lam, float(inv_x1), float(inv_x2), lower, float(1.0 / np.sqrt(lam)))


def shortest_path_histogram(g, max_r, sources=None):
    """Count ordered node pairs by (class of i, class of j, distance).

    Returns ``counts`` of shape (k, k, max_r + 1), where ``counts[u, v, r - 1]``
    holds pairs at distance r and the last slice collects distances beyond
    ``max_r`` (including unreachable pairs), and
    ``totals`` of shape (k, k) with the number of pairs examined. Pairs
    with i == j are skipped.
    """
    k = g.k
    src = np.arange(g.n) if sources is None else np.asarray(sources, dtype=np.int64)
    dist = shortest_path(g.adjacency, method="D", unweighted=True, indices=src)
    dist = np.where(np.isfinite(dist), dist, max_r + 1)
    dist = np.minimum(dist, max_r + 1).astype(np.int64)
    yi = g.labels[src][:, None]
    yj = g.labels[None, :]
    same_node = src[:, None] == np.arange(g.n)[None, :]
    keep = ~same_node
    cell = (np.broadcast_to(yi, dist.shape) * k + np.broadcast_to(yj, dist.shape))[keep]
    d = dist[keep]
    counts = np.bincount(cell * (max_r + 2) + d, minlength=k * k * (max_r + 2)).reshape(k, k, max_r + 2)
    totals = counts.sum(axis=2)
    return counts[:, :, 1:], totals
