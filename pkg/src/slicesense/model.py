"""Core domain types: measurement, assignment, correlation and graph matrices.

All types are immutable after construction (the wrapped arrays are marked
read-only), so they can be shared freely between threads and processes.
Slice and resource indices are 0-based everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class KpiMatrix:
    """T x N matrix of per-period, per-slice end-to-end KPI measurements.

    Rows are measurement periods, columns are slices.  Entries must be
    finite and nonnegative (delays are clamped at zero when generated).
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("measurements must be a 2-D matrix")
        t, n = v.shape
        if t < 2 or n < 2:
            raise ValueError(f"need at least 2 periods and 2 slices, got {t}x{n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("measurements must be finite")
        if np.any(v < 0):
            raise ValueError("measurements must be nonnegative")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_slices(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class AssignmentMatrix:
    """R x N binary matrix mapping shared resources (rows) to slices (columns).

    The constructor only enforces shape and binaryness; the semantic
    constraints (each slice uses >= 1 resource, each resource is shared by
    >= 2 slices, no duplicate resources) are checked by
    :func:`validate_assignment`, which reports violations as data rather
    than raising.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2:
            raise ValueError("assignment must be a 2-D matrix")
        if not np.all(np.isin(e, (0, 1))):
            raise ValueError("assignment entries must be 0 or 1")
        object.__setattr__(self, "entries", _readonly(e.astype(np.int8)))

    @property
    def n_resources(self) -> int:
        return self.entries.shape[0]

    @property
    def n_slices(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class CorrelationMatrix:
    """N x N symmetric matrix of pairwise correlation coefficients."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("correlation matrix must be square")
        if np.any(np.abs(e) > 1 + 1e-12):
            raise ValueError("correlation entries must lie in [-1, 1]")
        if not np.allclose(e, e.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(e), 1.0, atol=1e-12):
            raise ValueError("correlation matrix diagonal must be 1")
        object.__setattr__(self, "entries", _readonly(e))

    @property
    def n_slices(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class InterferenceGraph:
    """Undirected interference graph as an N x N binary adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if not np.all(np.isin(a, (0, 1))):
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be 0")
        if np.any(a != a.T):
            raise ValueError("adjacency matrix must be symmetric")
        object.__setattr__(self, "adjacency", _readonly(a.astype(np.int8)))

    @property
    def n_slices(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> set[tuple[int, int]]:
        """Edge set as (i, j) pairs with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return {(int(a), int(b)) for a, b in zip(i, j)}

    def neighbors(self, i: int) -> set[int]:
        return {int(j) for j in np.nonzero(self.adjacency[i])[0]}


@dataclass(frozen=True)
class CliqueList:
    """Maximal cliques of an interference graph, as frozensets of slices.

    Every clique has size >= 2, induces a complete subgraph and is not a
    subset of any other clique in the list.
    """

    cliques: tuple[frozenset[int], ...]

    def __post_init__(self):
        cl = tuple(frozenset(c) for c in self.cliques)
        for c in cl:
            if len(c) < 2:
                raise ValueError("cliques must have size >= 2")
        for c in cl:
            for d in cl:
                if c is not d and c <= d:
                    raise ValueError("no clique may be a subset of another")
        object.__setattr__(self, "cliques", cl)

    def __len__(self) -> int:
        return len(self.cliques)

    def __iter__(self):
        return iter(self.cliques)


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of an assignment-matrix check: ok, or a list of violations."""

    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_assignment(a: AssignmentMatrix) -> ValidationResult:
    """Check the three structural constraints on an assignment matrix.

    Violations are returned as data (one message per failed constraint with
    the offending row/column indices), never raised.
    """
    e = a.entries
    problems = []
    thin_cols = [int(i) for i in np.nonzero(e.sum(axis=0) < 1)[0]]
    if thin_cols:
        problems.append(f"slices used by no resource: columns {thin_cols}")
    thin_rows = [int(j) for j in np.nonzero(e.sum(axis=1) < 2)[0]]
    if thin_rows:
        problems.append(f"resources shared by fewer than two slices: rows {thin_rows}")
    seen: dict[bytes, int] = {}
    for j in range(a.n_resources):
        key = e[j].tobytes()
        if key in seen:
            problems.append(f"duplicate resource rows: {seen[key]} and {j}")
        else:
            seen[key] = j
    return ValidationResult(tuple(problems))


def slices_of_resource(a: AssignmentMatrix, j: int) -> set[int]:
    """Set of slices that utilize resource ``j``."""
    if not 0 <= j < a.n_resources:
        raise IndexError(f"resource index {j} out of range [0, {a.n_resources})")
    return {int(i) for i in np.nonzero(a.entries[j])[0]}


def resources_of_slice(a: AssignmentMatrix, i: int) -> set[int]:
    """Set of resources utilized by slice ``i``."""
    if not 0 <= i < a.n_slices:
        raise IndexError(f"slice index {i} out of range [0, {a.n_slices})")
    return {int(j) for j in np.nonzero(a.entries[:, i])[0]}


def cosharing_pairs(a: AssignmentMatrix) -> set[tuple[int, int]]:
    """All slice pairs (i, j), i < j, that share at least one resource."""
    pairs = set()
    for j in range(a.n_resources):
        members = sorted(slices_of_resource(a, j))
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                pairs.add((members[x], members[y]))
    return pairs
