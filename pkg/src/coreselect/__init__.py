"""coreselect: informative subset selection with a quadratic objective.

Selects a budgeted subset of samples that maximizes total importance
while penalizing pairwise similarity, via an iterative softmax solver
over the simplex.  Ships exact k-NN graph construction, a built-in
cluster-distance scorer, classical baselines, a brute-force oracle for
small instances, and a CLI with reporting.
"""

from .baselines import METHODS, BaselineSpec, baseline_select, greedy_kcenter
from .core import (
    EmbeddingMatrix,
    ScoreVector,
    SelectionProblem,
    SelectionResult,
    SparseSimilarity,
    evaluate_objective,
)
from .errors import CapacityError, FormatError, InputError, NumericDomainError
from .oracle import OracleLimit, brute_force_optimum
from .pipeline import (
    MetricsReport,
    PipelineConfig,
    evaluate_selection,
    partition_budgets,
    partition_dataset,
    resolve_budget,
    run_pipeline,
)
from .scoring import KMeansParams, load_scores, lloyd_kmeans, normalize_scores, ssp_scores
from .simgraph import KnnParams, build_knn_similarity, l2_normalize, topk_neighbors
from .solver import (
    GeneralizedParams,
    SolverParams,
    SolverState,
    alpha_from_lambda,
    generalized_step,
    softmax,
    softmax_step,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BaselineSpec",
    "CapacityError",
    "EmbeddingMatrix",
    "FormatError",
    "GeneralizedParams",
    "InputError",
    "KMeansParams",
    "KnnParams",
    "METHODS",
    "MetricsReport",
    "NumericDomainError",
    "OracleLimit",
    "PipelineConfig",
    "ScoreVector",
    "SelectionProblem",
    "SelectionResult",
    "SolverParams",
    "SolverState",
    "SparseSimilarity",
    "alpha_from_lambda",
    "baseline_select",
    "brute_force_optimum",
    "build_knn_similarity",
    "evaluate_objective",
    "evaluate_selection",
    "generalized_step",
    "greedy_kcenter",
    "l2_normalize",
    "lloyd_kmeans",
    "load_scores",
    "normalize_scores",
    "partition_budgets",
    "partition_dataset",
    "resolve_budget",
    "run_pipeline",
    "softmax",
    "softmax_step",
    "solve",
    "ssp_scores",
    "topk_neighbors",
]
