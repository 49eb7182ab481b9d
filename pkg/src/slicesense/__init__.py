"""Detection of performance interference among network slices from E2E KPIs."""

from .correlation import max_combine, pearson_matrix, rank_transform, spearman_matrix
from .evaluation import (
    CellResult,
    PairRecord,
    ScoreCard,
    SweepSpec,
    correlation_study,
    covered_fraction,
    exact_fraction,
    run_sweep,
    score,
    stage1_errors,
)
from .factor_analysis import (
    FactorModel,
    FaOptions,
    SubsetFamily,
    fit_fa,
    ledermann_bound,
    loadings_to_subsets,
    select_q,
    stage3,
    varimax,
)
from .graph import (
    ClusterSplit,
    build_interference_graph,
    degeneracy_order,
    kmeans_1d,
    maximal_cliques,
)
from .model import (
    AssignmentMatrix,
    CliqueList,
    CorrelationMatrix,
    InterferenceGraph,
    KpiMatrix,
    ValidationResult,
    resources_of_slice,
    slices_of_resource,
    validate_assignment,
)
from .pipeline import DetectionReport, DetectorOptions, Variant, detect
from .simulator import (
    SimConfig,
    SimOutput,
    TransitionMatrix,
    delay_g,
    delay_h,
    e2e_delay,
    gen_assignment,
    gen_transition_matrix,
    resource_utilization,
    simulate,
)

__version__ = "0.1.0"
