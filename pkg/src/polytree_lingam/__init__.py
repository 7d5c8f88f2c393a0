"""Learning linear non-Gaussian polytree causal models.

The pipeline recovers the undirected skeleton as the maximum-|correlation|
spanning tree, then orients edges through algebraic rank-one tests on
matrices of second- and higher-order pair cumulants, optionally combined
with marginal independence checks.  A population oracle evaluates the same
quantities exactly from a ground-truth model, and a simulation harness
reproduces the synthetic-experiment protocol end to end.
"""

__version__ = "0.1.0"

from .cumulants import (
    CorrelationMatrix,
    Dataset,
    PairCumulantTable,
    SampleCumulantProvider,
    cumulant_from_moments,
    k_statistic,
    pair_cumulant_table,
    sample_correlation_matrix,
    standardize_dataset,
)
from .errors import DataError, DegeneracyError
from .metrics import ShdReport, structural_hamming
from .model import (
    PolytreeModel,
    PopulationCumulantProvider,
    Trek,
    genericity_check,
    load_model,
    population_covariance,
    population_pair_cumulants,
    save_model,
    simple_trek,
    valid_threshold_interval,
)
from .orient import (
    EdgeDecision,
    EdgeMomentMatrix,
    LearnedGraph,
    MinorVector,
    build_a_matrix,
    default_threshold,
    minor_vector,
    pairwise_orientation,
    pto,
    rank_orient,
    tpo,
)
from .pipeline import ALGORITHMS, LearnResult, learn_polytree, run_orientation
from .simulate import (
    DEFAULT_THRESHOLD_GRID,
    ErrorSpec,
    ExperimentConfig,
    NodeError,
    ResultRow,
    draw_node_errors,
    generate_case,
    model_with_errors,
    random_polytree,
    random_tree,
    rng_stream,
    run_experiment,
    sample_dataset,
)
from .skeleton import UndirectedTree, UnionFind, chow_liu

__all__ = [
    "__version__",
    "ALGORITHMS",
    "CorrelationMatrix",
    "Dataset",
    "DataError",
    "DegeneracyError",
    "DEFAULT_THRESHOLD_GRID",
    "EdgeDecision",
    "EdgeMomentMatrix",
    "ErrorSpec",
    "ExperimentConfig",
    "LearnResult",
    "LearnedGraph",
    "MinorVector",
    "NodeError",
    "PairCumulantTable",
    "PolytreeModel",
    "PopulationCumulantProvider",
    "ResultRow",
    "SampleCumulantProvider",
    "ShdReport",
    "Trek",
    "UndirectedTree",
    "UnionFind",
    "build_a_matrix",
    "chow_liu",
    "cumulant_from_moments",
    "default_threshold",
    "draw_node_errors",
    "generate_case",
    "genericity_check",
    "k_statistic",
    "learn_polytree",
    "load_model",
    "minor_vector",
    "model_with_errors",
    "pair_cumulant_table",
    "pairwise_orientation",
    "population_covariance",
    "population_pair_cumulants",
    "pto",
    "random_polytree",
    "random_tree",
    "rank_orient",
    "rng_stream",
    "run_experiment",
    "run_orientation",
    "sample_correlation_matrix",
    "sample_dataset",
    "save_model",
    "standardize_dataset",
    "simple_trek",
    "structural_hamming",
    "tpo",
    "valid_threshold_interval",
]
