"""Interference-graph construction and maximal-clique enumeration.

Edges are decided by 2-means clustering of the upper-triangle correlation
coefficients: pairs whose coefficient lands in the higher cluster are
declared interfering.  Negative coefficients are clustered as-is; strong
negative correlation belongs in the low cluster.  Cliques are enumerated
with Bron-Kerbosch pivoting over a degeneracy ordering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisWarning, DegenerateSplitError
from .model import CliqueList, CorrelationMatrix, InterferenceGraph


@dataclass(frozen=True)
class ClusterSplit:
    """Two-cluster partition of scalar values.

    ``labels[i] == 1`` marks membership in the higher cluster; the split
    threshold is the midpoint between the two centroids.
    """

    labels: np.ndarray
    centroids: tuple[float, float]

    def __post_init__(self):
        low, high = self.centroids
        if high < low:
            raise ValueError("centroids must be ordered (low, high)")
        lab = np.asarray(self.labels, dtype=np.int8)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def threshold(self) -> float:
        return 0.5 * (self.centroids[0] + self.centroids[1])


def _within_cluster_sse(v: np.ndarray, labels: np.ndarray) -> float:
    total = 0.0
    for c in (0, 1):
        members = v[labels == c]
        if members.size:
            total += float(((members - members.mean()) ** 2).sum())
    return total


def _exact_split(v: np.ndarray) -> np.ndarray:
    # optimal 1-D 2-means: scan every cut point of the sorted values
    order = np.argsort(v, kind="stable")
    s = v[order]
    n = s.shape[0]
    p1 = np.concatenate(([0.0], np.cumsum(s)))
    p2 = np.concatenate(([0.0], np.cumsum(s * s)))
    counts = np.arange(1, n, dtype=float)
    low_sse = p2[1:n] - p1[1:n] ** 2 / counts
    hi_tot = p1[n] - p1[1:n]
    hi_sq = p2[n] - p2[1:n]
    high_sse = hi_sq - hi_tot**2 / (n - counts)
    cut = int(np.argmin(low_sse + high_sse))
    labels = np.zeros(n, dtype=np.int8)
    labels[order[cut + 1 :]] = 1
    return labels


def kmeans_1d(values: np.ndarray, max_iter: int = 200) -> ClusterSplit:
    """Two-means on scalars, deterministic and globally optimal.

    Runs Lloyd iteration from (min, max) until the assignment stops changing
    (or ``max_iter``); because Lloyd can stall in a suboptimal local minimum
    even in one dimension, the result is checked against the exact
    sorted-cut optimum and replaced by it when that is strictly better.
    Raises :class:`DegenerateSplitError` when all values coincide, since no
    two-cluster split exists.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ValueError("need at least two values to cluster")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        raise DegenerateSplitError("all values identical; no split exists")
    centroids = np.array([lo, hi])
    labels = None
    for _ in range(max_iter):
        new_labels = (np.abs(v - centroids[1]) < np.abs(v - centroids[0])).astype(
            np.int8
        )
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in (0, 1):
            members = v[labels == c]
            if members.size:
                centroids[c] = members.mean()
    best = _exact_split(v)
    if _within_cluster_sse(v, best) < _within_cluster_sse(v, labels) - 1e-15:
        labels = best
    low = float(v[labels == 0].mean())
    high = float(v[labels == 1].mean())
    return ClusterSplit(labels=labels, centroids=(low, high))


def build_interference_graph(c: CorrelationMatrix) -> InterferenceGraph:
    """Threshold the correlation matrix into a 0-1 interference graph.

    Clusters the N(N-1)/2 upper-triangle coefficients; an edge (i, j) exists
    iff its coefficient lands in the higher cluster.  A degenerate split
    (all coefficients equal) yields the empty graph and a warning.
    """
    n = c.n_slices
    iu, ju = np.triu_indices(n, k=1)
    adjacency = np.zeros((n, n), dtype=np.int8)
    try:
        split = kmeans_1d(c.entries[iu, ju])
    except DegenerateSplitError:
        warnings.warn(
            "no variation among correlation coefficients; "
            "no interference detected",
            AnalysisWarning,
            stacklevel=2,
        )
        return InterferenceGraph(adjacency)
    high = split.labels == 1
    adjacency[iu[high], ju[high]] = 1
    adjacency[ju[high], iu[high]] = 1
    return InterferenceGraph(adjacency)


def degeneracy_order(g: InterferenceGraph) -> tuple[list[int], int]:
    """Repeated minimum-degree removal; returns (removal order, degeneracy)."""
    remaining = {i: g.neighbors(i) for i in range(g.n_slices)}
    order: list[int] = []
    degeneracy = 0
    while remaining:
        node = min(remaining, key=lambda i: (len(remaining[i]), i))
        degeneracy = max(degeneracy, len(remaining[node]))
        order.append(node)
        for other in remaining[node]:
            remaining[other].discard(node)
        del remaining[node]
    return order, degeneracy


def _bron_kerbosch_pivot(
    adj: list[set[int]],
    r: set[int],
    p: set[int],
    x: set[int],
    out: list[frozenset[int]],
) -> None:
    if not p and not x:
        if len(r) >= 2:
            out.append(frozenset(r))
        return
    pivot = max(p | x, key=lambda u: len(adj[u] & p))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch_pivot(adj, r | {v}, p & adj[v], x & adj[v], out)
        p = p - {v}
        x = x | {v}


def maximal_cliques(g: InterferenceGraph) -> CliqueList:
    """All maximal cliques of size >= 2, via pivoted Bron-Kerbosch.

    The outer loop follows the degeneracy ordering, so isolated vertices and
    size-1 cliques never appear: a slice with no edges interferes with
    nothing.  Output order is deterministic (sorted member tuples).
    """
    adj = [g.neighbors(i) for i in range(g.n_slices)]
    order, _ = degeneracy_order(g)
    position = {v: i for i, v in enumerate(order)}
    out: list[frozenset[int]] = []
    for v in order:
        later = {u for u in adj[v] if position[u] > position[v]}
        earlier = {u for u in adj[v] if position[u] < position[v]}
        _bron_kerbosch_pivot(adj, {v}, later, earlier, out)
    out.sort(key=lambda c: tuple(sorted(c)))
    return CliqueList(tuple(out))
