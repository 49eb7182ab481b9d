"""Scoring of detection reports against ground truth and parameter sweeps."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .correlation import pearson_matrix, spearman_matrix
from .factor_analysis import FaOptions
from .graph import build_interference_graph
from .model import AssignmentMatrix, InterferenceGraph, cosharing_pairs
from .pipeline import DetectionReport, DetectorOptions, Variant, detect
from .simulator import SimConfig, simulate


@dataclass(frozen=True)
class ScoreCard:
    """Detection quality for one (truth, estimate) pair.

    ``exact_fraction`` counts truth rows reproduced verbatim by some
    estimate row; ``covered_fraction`` counts truth rows dominated
    elementwise by some estimate row, so it is never smaller.
    """

    exact_fraction: float
    covered_fraction: float
    estimated_count: int
    stage1_missed: int | None = None
    stage1_false_pos: int | None = None


def exact_fraction(truth: AssignmentMatrix, estimate: np.ndarray) -> float:
    """Fraction of truth rows appearing verbatim among the estimate rows."""
    estimate = np.asarray(estimate)
    _check_width(truth, estimate)
    have = {row.tobytes() for row in estimate.astype(np.int8)}
    hits = sum(1 for row in truth.entries if row.tobytes() in have)
    return hits / truth.n_resources


def covered_fraction(truth: AssignmentMatrix, estimate: np.ndarray) -> float:
    """Fraction of truth rows elementwise dominated by some estimate row."""
    estimate = np.asarray(estimate, dtype=np.int8)
    _check_width(truth, estimate)
    if estimate.shape[0] == 0:
        return 0.0
    hits = 0
    for row in truth.entries:
        if np.any(np.all(estimate - row >= 0, axis=1)):
            hits += 1
    return hits / truth.n_resources


def _check_width(truth: AssignmentMatrix, estimate: np.ndarray) -> None:
    if estimate.ndim != 2 or estimate.shape[1] != truth.n_slices:
        raise ValueError(
            f"estimate width {estimate.shape} does not match "
            f"{truth.n_slices} slices"
        )


def stage1_errors(
    truth: AssignmentMatrix, graph: InterferenceGraph
) -> tuple[int, int]:
    """(missed, false positive) edge counts of the interference graph.

    The ground-truth edge set contains every slice pair co-appearing in some
    truth row.
    """
    if graph.n_slices != truth.n_slices:
        raise ValueError("graph and truth disagree on the number of slices")
    true_edges = cosharing_pairs(truth)
    got_edges = graph.edges()
    missed = len(true_edges - got_edges)
    false_pos = len(got_edges - true_edges)
    return missed, false_pos


def score(
    truth: AssignmentMatrix,
    report: DetectionReport,
) -> ScoreCard:
    """Build a scorecard; stage-1 error counts need recorded intermediates."""
    missed = false_pos = None
    if report.intermediates is not None:
        missed, false_pos = stage1_errors(truth, report.intermediates.graph)
    return ScoreCard(
        exact_fraction=exact_fraction(truth, report.estimate),
        covered_fraction=covered_fraction(truth, report.estimate),
        estimated_count=report.estimated_count,
        stage1_missed=missed,
        stage1_false_pos=false_pos,
    )


@dataclass(frozen=True)
class SweepSpec:
    """Grid of simulation/detection parameters with a replicate count.

    ``base`` supplies everything not on the grid (network size, utilization
    levels, the base seed).  Every replicate of every cell draws a fresh
    assignment matrix and fresh chain dynamics from its own derived seed.
    """

    base: SimConfig
    t_values: tuple[int, ...]
    ws_values: tuple[float, ...]
    sigma2_values: tuple[float, ...]
    variants: tuple[Variant, ...] = (Variant.SRCC,)
    alpha_values: tuple[float | None, ...] = (None,)
    replicates: int = 25
    theta: float = 0.5
    fa: FaOptions = field(default_factory=FaOptions)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for name in ("t_values", "ws_values", "sigma2_values"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")


@dataclass(frozen=True)
class CellResult:
    """Replicate-averaged metrics for one grid cell."""

    t: int
    w_s: float
    sigma2: float
    variant: Variant
    alpha: float | None
    replicates: int
    failures: int
    exact_fraction: float
    covered_fraction: float
    estimated_count: float
    stage1_missed: float
    stage1_false_pos: float

    @property
    def status(self) -> str:
        return "partial" if self.failures else "ok"


def cell_seed(
    base_seed: int,
    t: int,
    w_s: float,
    sigma2: float,
    variant: Variant,
    alpha: float | None,
    replicate: int,
) -> int:
    """Derived seed making every (cell, replicate) independently re-runnable."""
    key = (
        base_seed,
        t,
        round(w_s * 10**9),
        round(sigma2 * 10**9),
        list(Variant).index(variant),
        -1 if alpha is None else round(alpha * 10**9),
        replicate,
    )
    ss = np.random.SeedSequence([abs(int(k)) for k in key])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_cell(
    spec: SweepSpec,
    t: int,
    w_s: float,
    sigma2: float,
    variant: Variant,
    alpha: float | None,
) -> CellResult:
    """Simulate, detect and score all replicates of one grid cell."""
    cards: list[ScoreCard] = []
    failures = 0
    opts = DetectorOptions(
        variant=variant, theta=spec.theta, fa=spec.fa, record_intermediates=True
    )
    for rep in range(spec.replicates):
        seed = cell_seed(spec.base.seed, t, w_s, sigma2, variant, alpha, rep)
        config = replace(
            spec.base,
            n_periods=t,
            weight_shared=w_s,
            noise_variance=sigma2,
            exp_averaging=alpha,
            seed=seed,
        )
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = simulate(config)
                report = detect(out.measurements, opts)
            cards.append(score(out.truth, report))
        except Exception:
            failures += 1
    def mean(vals):
        return float(np.mean(vals)) if vals else float("nan")

    return CellResult(
        t=t,
        w_s=w_s,
        sigma2=sigma2,
        variant=variant,
        alpha=alpha,
        replicates=spec.replicates,
        failures=failures,
        exact_fraction=mean([c.exact_fraction for c in cards]),
        covered_fraction=mean([c.covered_fraction for c in cards]),
        estimated_count=mean([c.estimated_count for c in cards]),
        stage1_missed=mean([c.stage1_missed for c in cards]),
        stage1_false_pos=mean([c.stage1_false_pos for c in cards]),
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[CellResult]:
    """Evaluate the whole grid; rows come back sorted by grid keys.

    Cells are independent (each derives its own seeds), so they may run in
    parallel; the result is identical either way.
    """
    cells = list(
        product(
            spec.t_values,
            spec.ws_values,
            spec.sigma2_values,
            spec.variants,
            spec.alpha_values,
        )
    )
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_star, [(spec, *c) for c in cells]))
    else:
        results = [run_cell(spec, *c) for c in cells]
    results.sort(
        key=lambda r: (
            r.t,
            r.w_s,
            r.sigma2,
            list(Variant).index(r.variant),
            -1 if r.alpha is None else r.alpha,
        )
    )
    return results


def _run_cell_star(args):
    return run_cell(*args)


@dataclass(frozen=True)
class PairRecord:
    """One slice pair's coefficients and stage-1 outcomes for one run."""

    slice_i: int
    slice_j: int
    sharing: bool
    srcc: float
    pcc: float
    srcc_outcome: str
    pcc_outcome: str


def _outcome(sharing: bool, edge: bool) -> str:
    if sharing:
        return "correct" if edge else "missed"
    return "false_positive" if edge else "correct"


def correlation_study(config: SimConfig) -> list[PairRecord]:
    """Label every pairwise SRCC and PCC of one simulated run.

    Each pair is tagged with ground truth (does it co-share a resource) and
    with the stage-1 outcome of the graph built from each coefficient kind.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = simulate(config)
        srcc = spearman_matrix(out.measurements)
        pcc = pearson_matrix(out.measurements)
        srcc_graph = build_interference_graph(srcc)
        pcc_graph = build_interference_graph(pcc)
    sharing = cosharing_pairs(out.truth)
    srcc_edges = srcc_graph.edges()
    pcc_edges = pcc_graph.edges()
    records = []
    n = config.n_slices
    for i in range(n):
        for j in range(i + 1, n):
            share = (i, j) in sharing
            records.append(
                PairRecord(
                    slice_i=i,
                    slice_j=j,
                    sharing=share,
                    srcc=float(srcc.entries[i, j]),
                    pcc=float(pcc.entries[i, j]),
                    srcc_outcome=_outcome(share, (i, j) in srcc_edges),
                    pcc_outcome=_outcome(share, (i, j) in pcc_edges),
                )
            )
    return records
