"""Acceptance criteria, each at its stated scale and tolerance.

Every test records a PASS/FAIL verdict that is printed in the terminal
summary. The BRIDGE runs at h = 0.5 are shared between criteria 9 and 10.
"""

import itertools
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy import stats

from conftest import random_graph, record
from snrgraph.benchmarks import (
    baseline_accuracy,
    condition_benchmark,
    homophily_sweep,
    run_bridge,
    snr_concordance,
)
from snrgraph.bottleneck import bottleneck_scores
from snrgraph.bridge import enumerate_involutions, optimal_block_matrix
from snrgraph.ensemble import SbmParams, planted_partition, poisson_moments, sample_sbm, shortest_path_histogram, underreaching
from snrgraph.graph import RANDOM_WALK, SYM, SYM_RAW, apply_power, shift_operator, weighted_homophily
from snrgraph.sensitivity import sgc_sensitivities

pytestmark = pytest.mark.acceptance

BRIDGE_HS = (0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65)


@lru_cache(maxsize=None)
def _bridge(h, seed):
    return run_bridge(h, seed)


def test_c1_averaging_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(10, 201))
        g = random_graph(rng, n, p=float(rng.uniform(2, 12)) / n, k=int(rng.integers(2, 5)))
        for kind in (SYM, SYM_RAW):
            op = shift_operator(g, kind, isolated="zero")
            dense = op.matrix.toarray()
            for ell in (1, 2, 3):
                b = bottleneck_scores(op, g.labels, ell, ell)
                power = np.linalg.matrix_power(dense, 2 * ell)
                worst = max(
                    worst,
                    abs(b.b_class.mean() - weighted_homophily(power, g.labels)),
                    abs(b.b_self.mean() - np.trace(power) / n),
                    abs(b.b_total.mean() - power.sum() / n),
                )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10
    record(1, ok, f"max deviation {worst:.1e} over 50 graphs, {elapsed:.1f}s")
    assert ok


def _fd_jacobian(f, X, q, step=1e-3):
    J = np.zeros((X.shape[0], X.shape[0]))
    for j in range(X.shape[0]):
        up, down = X.copy(), X.copy()
        up[j, q] += step
        down[j, q] -= step
        J[:, j] = (f(up) - f(down)) / (2 * step)
    return J


def test_c2_sgc_sensitivities_match_finite_differences():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(6):
        g = random_graph(rng, 32, 0.12, k=3)
        W = rng.standard_normal((2, 1))
        X = rng.standard_normal((32, 2))
        same = g.labels[:, None] == g.labels[None, :]
        for kind in (SYM, SYM_RAW, RANDOM_WALK):
            op = shift_operator(g, kind, isolated="zero")
            for ell in (1, 2, 3):
                out = lambda Z: (apply_power(op, Z, ell) @ W)[:, 0]  # noqa: E731
                J = [_fd_jacobian(out, X, q) for q in range(2)]
                for q, r in itertools.product(range(2), repeat=2):
                    want = (
                        np.einsum("ij,jk,ik->i", J[q], same, J[r]),
                        np.einsum("ij,ij->i", J[q], J[r]),
                        J[q].sum(axis=1) * J[r].sum(axis=1),
                    )
                    got = sgc_sensitivities(op, g.labels, ell, weight=W[q, 0] * W[r, 0])
                    for a, b in zip((got.signal, got.noise, got.global_), want):
                        scale = np.maximum(np.abs(b), 1e-12)
                        worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 30
    record(2, ok, f"max relative error {worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_c3_planted_partition_higher_order_homophily():
    start = time.perf_counter()
    rows = homophily_sweep([0.0, 0.25, 0.5, 0.75, 1.0], [1, 2, 3, 4], n=3000, d=30, samples=10, seed=0)
    cells = {}
    for h, ell, _, emp, _, band in rows:
        target = 0.5 + 0.5 * (2 * h - 1) ** ell
        cells.setdefault((h, ell), []).append(abs(emp - target) <= band)
    # a cell counts only when all of its samples lie in the band
    share = np.mean([all(v) for v in cells.values()])
    elapsed = time.perf_counter() - start
    ok = share >= 0.9 and elapsed < 300
    record(3, ok, f"{share:.0%} of 20 cells inside +-1/d on every sample, {elapsed:.0f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="first-order walk approximation is off by many binomial sigmas for r >= 2")
def test_c4_underreaching_approximation():
    start = time.perf_counter()
    params = planted_partition(2, 10, 0.5, 1000)
    counts, totals = 0, 0
    sources = np.arange(0, 1000, 20)
    for child in np.random.SeedSequence(4).spawn(200):
        c, t = shortest_path_histogram(sample_sbm(params, seed=child), 3, sources=sources)
        counts, totals = counts + c, totals + t
    zs = {}
    for r in (1, 2, 3):
        for u, v in ((0, 0), (0, 1), (1, 0), (1, 1)):
            q = underreaching(params, u, v, r)
            emp = counts[u, v, r - 1] / totals[u, v]
            # a first-order value at or above 1 is not a probability; its z is infinite
            z = (emp - q) / np.sqrt(q * (1 - q) / totals[u, v]) if q < 1 else np.inf
            zs[(r, u, v)] = (z, emp, q)
    elapsed = time.perf_counter() - start
    worst = {r: max((v for key, v in zs.items() if key[0] == r), key=lambda v: abs(v[0])) for r in (1, 2, 3)}
    ok = all(abs(w[0]) <= 3 for w in worst.values()) and elapsed < 300
    record(
        4,
        ok,
        "worst cell by r: "
        + ", ".join(f"r={r} {emp:.4f} vs {q:.4f} (|z| {abs(z):.1f})" for r, (z, emp, q) in worst.items())
        + f", {elapsed:.0f}s",
    )
    assert ok


def test_c5_poisson_moments():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_z, bounds_ok = 0.0, True
    for lam in (1, 5, 10, 50):
        x = rng.poisson(lam, 1_000_000)
        m = poisson_moments(lam)
        for vals, want in ((1 / (x + 1), m.inv_x1), (1 / (x + 2), m.inv_x2)):
            worst_z = max(worst_z, abs(vals.mean() - want) / (vals.std() / 1000))
        est = np.mean(1 / np.sqrt(x + 1))
        bounds_ok &= m.inv_sqrt_lower <= est <= m.inv_sqrt_upper
    elapsed = time.perf_counter() - start
    ok = worst_z <= 3 and bounds_ok and elapsed < 60
    record(5, ok, f"max |z| {worst_z:.2f}, bracketing {'holds' if bounds_ok else 'broken'}, {elapsed:.1f}s")
    assert ok


def test_c6_snr_concordance():
    start = time.perf_counter()
    details, ok = [], True
    for h in (0.1, 0.5, 0.9):
        emp, pred = snr_concordance(n_graphs=20, h=h, seed=0)
        half = stats.t.ppf(0.975, len(emp) - 1) * emp.std(ddof=1) / np.sqrt(len(emp))
        diff = emp.mean() - pred.mean()
        ok &= abs(diff) <= half
        details.append(f"h={h} diff {diff:+.4f} ci {half:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1200
    record(6, ok, "; ".join(details) + f", {elapsed:.0f}s")
    assert ok


def test_c7_condition_predictiveness():
    start = time.perf_counter()
    per_h, pooled = condition_benchmark([i / 10 for i in range(11)], n_runs=20, seed=0)
    elapsed = time.perf_counter() - start
    ok = pooled >= 0.7 and elapsed < 1800
    record(7, ok, f"pooled agreement {pooled:.3f} (per h {min(per_h):.2f}..{max(per_h):.2f}), {elapsed:.0f}s")
    assert ok


def _brute_force_involutions(k):
    return sum(all(p[p[i]] == i for i in range(k)) for p in itertools.permutations(range(k)))


def test_c8_permutation_structure_is_optimal():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    d, n = 10.0, 1000
    worst = 0.0
    for k in (2, 3):
        for _ in range(1000):
            pi = rng.dirichlet(np.ones(k))
            raw = rng.uniform(0, 1, (k, k)) * (rng.random((k, k)) < 0.7)
            B = raw + raw.T + 1e-9
            B *= d / (pi @ B @ pi)
            Bh = SbmParams(B, pi, n).B_hat
            sq = np.sqrt(pi)
            for ell in (1, 2):
                value = np.trace(sq[:, None] * np.linalg.matrix_power(Bh, 2 * ell) * sq[None, :])
                worst = max(worst, value - 1.0)
        pi = rng.dirichlet(np.ones(k))
        for perm in enumerate_involutions(k):
            Bh = optimal_block_matrix(pi, perm, d, n).B_hat
            sq = np.sqrt(pi)
            assert np.trace(sq[:, None] * (Bh @ Bh) * sq[None, :]) == pytest.approx(1.0)
    counts = [len(enumerate_involutions(k)) for k in (2, 3, 4)]
    brute = [_brute_force_involutions(k) for k in (2, 3, 4)]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and counts == brute == [2, 4, 10] and elapsed < 60
    record(8, ok, f"max excess over 1: {worst:.1e}; T(2..4) = {counts}, {elapsed:.1f}s")
    assert ok


def test_c9_bridge_end_to_end():
    start = time.perf_counter()
    runs = [_bridge(0.5, seed) for seed in range(10)]
    base = np.mean([r.baseline for r in runs])
    hits = sum(r.post >= 0.95 for r in runs)
    h2_up = all(r.h2_after > r.h2_before for r in runs)
    elapsed = time.perf_counter() - start
    ok = 0.78 <= base <= 0.92 and hits >= 8 and h2_up and elapsed < 1800
    record(
        9,
        ok,
        f"baseline {base:.3f}, post >= 0.95 on {hits}/10 seeds (mean {np.mean([r.post for r in runs]):.3f}), "
        f"h2 rose on {'every' if h2_up else 'not every'} seed, {elapsed:.0f}s",
    )
    assert ok


def test_c10_mid_homophily_pitfall():
    start = time.perf_counter()
    base = [np.mean([baseline_accuracy(h, seed) for seed in range(30)]) for h in BRIDGE_HS]
    post = [np.mean([_bridge(h, seed).post for seed in range(10)]) for h in BRIDGE_HS]
    nearest = int(np.argmin([abs(h - 0.5) for h in BRIDGE_HS]))
    spread = max(post) - min(post)
    elapsed = time.perf_counter() - start
    ok = int(np.argmin(base)) == nearest and spread <= 0.02 and elapsed < 2700
    record(
        10,
        ok,
        f"baseline minimum at h={BRIDGE_HS[int(np.argmin(base))]} ({min(base):.3f}), "
        f"post-BRIDGE spread {spread:.4f}, {elapsed:.0f}s",
    )
    assert ok
