"""End-to-end detector: correlation -> graph -> cliques -> factor subsets."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlation import max_combine, pearson_matrix, spearman_matrix
from .factor_analysis import CliqueFit, FaOptions, stage3_detailed
from .graph import build_interference_graph, maximal_cliques
from .model import CliqueList, CorrelationMatrix, InterferenceGraph, KpiMatrix


class Variant(enum.Enum):
    """Correlation coefficient feeding stage 1."""

    SRCC = "fa"
    MAX_PCC_SRCC = "fa-max"
    PCC = "pcc"

    @classmethod
    def from_cli(cls, name: str) -> "Variant":
        for v in cls:
            if v.value == name:
                return v
        raise ValueError(f"unknown variant {name!r}; expected fa, fa-max or pcc")


@dataclass(frozen=True)
class DetectorOptions:
    variant: Variant = Variant.SRCC
    theta: float = 0.5
    fa: FaOptions = field(default_factory=FaOptions)
    record_intermediates: bool = False

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")


@dataclass(frozen=True)
class Intermediates:
    correlation: CorrelationMatrix
    graph: InterferenceGraph
    cliques: CliqueList
    clique_fits: tuple[CliqueFit, ...]


@dataclass(frozen=True)
class DetectionReport:
    """Detector output: estimated assignment matrix plus provenance.

    ``estimate`` is a J x N binary matrix whose rows (distinct, each with at
    least two ones, in lexicographic order) are the detected co-sharing
    sets.  J = 0 when nothing was detected.
    """

    estimate: np.ndarray
    variant: Variant
    theta: float
    warnings: tuple[str, ...] = ()
    intermediates: Intermediates | None = None

    @property
    def estimated_count(self) -> int:
        return self.estimate.shape[0]


def _correlation_for(m: KpiMatrix, variant: Variant) -> CorrelationMatrix:
    if variant is Variant.SRCC:
        return spearman_matrix(m)
    if variant is Variant.PCC:
        return pearson_matrix(m)
    return max_combine(pearson_matrix(m), spearman_matrix(m))


def _as_rows(subsets, n_slices: int) -> np.ndarray:
    rows = np.zeros((len(subsets), n_slices), dtype=np.int8)
    for idx, members in enumerate(sorted(tuple(sorted(s)) for s in subsets)):
        rows[idx, list(members)] = 1
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def detect(m: KpiMatrix, opts: DetectorOptions = DetectorOptions()) -> DetectionReport:
    """Run the three-stage detector on a measurement matrix.

    Deterministic given (measurements, options).  Degenerate clustering or
    per-clique fit failures produce warnings and a smaller (possibly empty)
    estimate, never an exception.
    """
    collected: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        corr = _correlation_for(m, opts.variant)
        graph = build_interference_graph(corr)
        cliques = maximal_cliques(graph)
        family, fits = stage3_detailed(m, cliques, opts.fa, opts.theta)
    collected.extend(str(w.message) for w in caught)

    estimate = _as_rows(list(family), m.n_slices)
    inter = None
    if opts.record_intermediates:
        inter = Intermediates(
            correlation=corr,
            graph=graph,
            cliques=cliques,
            clique_fits=tuple(fits),
        )
    return DetectionReport(
        estimate=estimate,
        variant=opts.variant,
        theta=opts.theta,
        warnings=tuple(collected),
        intermediates=inter,
    )
