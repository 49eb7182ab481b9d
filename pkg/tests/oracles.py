"""Independent reference implementations used to check the library.

Everything here is intentionally naive (counting, enumeration, prefix sums,
power iteration) and shares no code with the package under test.
"""

from __future__ import annotations

import numpy as np


def counting_ranks(x) -> list[float]:
    """Fractional ranks by direct counting: 1 + #smaller + (#equal - 1)/2."""
    x = list(x)
    out = []
    for v in x:
        smaller = sum(1 for u in x if u < v)
        equal = sum(1 for u in x if u == v)
        out.append(1.0 + smaller + (equal - 1) / 2.0)
    return out


def pearson_two_pass(a, b) -> float:
    """Textbook two-pass Pearson correlation."""
    a = list(map(float, a))
    b = list(map(float, b))
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / (va**0.5 * vb**0.5)


def spearman_oracle(m: np.ndarray) -> np.ndarray:
    """Definitional rank-Pearson correlation matrix."""
    n = m.shape[1]
    ranked = [counting_ranks(m[:, i]) for i in range(n)]
    c = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            c[i, j] = c[j, i] = pearson_two_pass(ranked[i], ranked[j])
    return c


def brute_force_maximal_cliques(adjacency: np.ndarray) -> set[frozenset[int]]:
    """Enumerate all subsets of size >= 2; keep complete, non-extendable ones."""
    n = adjacency.shape[0]
    neighbor_bits = [0] * n
    for i in range(n):
        for j in range(n):
            if adjacency[i, j]:
                neighbor_bits[i] |= 1 << j
    cliques = set()
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        if len(members) < 2:
            continue
        if any(
            not adjacency[a, b] for k, a in enumerate(members) for b in members[k + 1 :]
        ):
            continue
        extendable = any(
            (neighbor_bits[v] & mask) == mask for v in range(n) if not mask >> v & 1
        )
        if not extendable:
            cliques.add(frozenset(members))
    return cliques


def exact_two_means(values) -> tuple[np.ndarray, tuple[float, float]]:
    """Globally optimal 1-D 2-means via prefix sums over the sorted values.

    Returns (labels aligned with the input order, (low centroid, high
    centroid)).
    """
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    s = v[order]
    n = s.shape[0]
    p1 = np.concatenate(([0.0], np.cumsum(s)))
    p2 = np.concatenate(([0.0], np.cumsum(s**2)))

    def sse(i, j):  # inclusive slice [i, j] of the sorted array
        cnt = j - i + 1
        tot = p1[j + 1] - p1[i]
        sq = p2[j + 1] - p2[i]
        return sq - tot * tot / cnt

    best_cut, best_cost = 0, np.inf
    for cut in range(n - 1):  # low cluster = sorted[: cut + 1]
        cost = sse(0, cut) + sse(cut + 1, n - 1)
        if cost < best_cost - 1e-15:
            best_cut, best_cost = cut, cost
    labels_sorted = np.zeros(n, dtype=int)
    labels_sorted[best_cut + 1 :] = 1
    labels = np.empty(n, dtype=int)
    labels[order] = labels_sorted
    low = float(s[: best_cut + 1].mean())
    high = float(s[best_cut + 1 :].mean())
    return labels, (low, high)


def stationary_distribution(p: np.ndarray, iters: int = 200000, tol: float = 1e-14):
    """Stationary distribution of a row-stochastic matrix by power iteration."""
    pi = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(iters):
        nxt = pi @ p
        if np.abs(nxt - pi).max() < tol:
            return nxt
        pi = nxt
    return pi


def random_graph(n: int, edge_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric 0-1 adjacency matrix with zero diagonal."""
    upper = rng.random((n, n)) < edge_prob
    adj = np.triu(upper, 1)
    return (adj | adj.T).astype(np.int8)
