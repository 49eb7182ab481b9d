"""Pairwise similarity matrices from the measurement matrix.

Rank correlation uses average (fractional) ranks for ties and the
Pearson-of-ranks formula; simulated delay series contain many exact zeros,
so the tie-free 1 - 6*sum(d^2)/(n(n^2-1)) shortcut would be wrong here.
A constant column carries no interference signal: its coefficients are set
to 0 and a warning is recorded instead of raising.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import AnalysisWarning
from .model import CorrelationMatrix, KpiMatrix


def rank_transform(x: np.ndarray) -> np.ndarray:
    """Fractional ranks 1..T; tied values get the mean of their positions."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("rank_transform expects a vector of length >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("rank_transform expects finite values")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    boundaries = np.nonzero(np.diff(xs) != 0)[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [x.shape[0]]))
    ranks = np.empty(x.shape[0])
    for a, b in zip(starts, ends):
        ranks[order[a:b]] = 0.5 * (a + 1 + b)
    return ranks


def _corr_of(columns: np.ndarray, what: str) -> CorrelationMatrix:
    n = columns.shape[1]
    centered = columns - columns.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    constant = norms == 0.0
    if np.any(constant):
        cols = [int(i) for i in np.nonzero(constant)[0]]
        warnings.warn(
            f"constant column(s) {cols}: {what} coefficients set to 0",
            AnalysisWarning,
            stacklevel=3,
        )
        norms = np.where(constant, 1.0, norms)
    c = (centered / norms).T @ (centered / norms)
    c[constant, :] = 0.0
    c[:, constant] = 0.0
    c = np.clip((c + c.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    return CorrelationMatrix(c)


def spearman_matrix(m: KpiMatrix) -> CorrelationMatrix:
    """Spearman rank correlation of every column pair."""
    ranked = np.column_stack(
        [rank_transform(m.values[:, i]) for i in range(m.n_slices)]
    )
    return _corr_of(ranked, "rank correlation")


def pearson_matrix(m: KpiMatrix) -> CorrelationMatrix:
    """Pearson correlation of every column pair on the raw values."""
    return _corr_of(m.values.astype(float), "correlation")


def max_combine(c1: CorrelationMatrix, c2: CorrelationMatrix) -> CorrelationMatrix:
    """Entrywise maximum of two correlation matrices of equal size."""
    if c1.entries.shape != c2.entries.shape:
        raise ValueError(
            f"dimension mismatch: {c1.entries.shape} vs {c2.entries.shape}"
        )
    return CorrelationMatrix(np.maximum(c1.entries, c2.entries))
