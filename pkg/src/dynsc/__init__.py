"""Spectral clustering for dynamic stochastic block models.

Simulate static and dynamic SBMs, smooth adjacency snapshots in time (sliding
window or exponential forgetting), cluster with the spectral algorithm on the
smoothed adjacency or its normalized Laplacian, and verify the concentration
theory empirically at desk scale.
"""

from .bounds import (
    DegreeDeviationStats,
    LaplacianPerturbationCheck,
    RateCard,
    RegimeInputs,
    SmoothingBiasCheck,
    degree_deviation_stats,
    frobenius_diff_sq,
    frobenius_trajectory,
    laplacian_perturbation_check,
    rate_card,
    smoothing_bias_check,
)
from .dynamics import (
    DeterministicDsbmConfig,
    MarkovDsbmConfig,
    MembershipSequence,
    SnapshotSequence,
    gen_deterministic_sequence,
    gen_markov_sequence,
    load_sequence,
    sample_snapshot_sequence,
    save_sequence,
)
from .errors import (
    DynscError,
    EigenSolverError,
    GenerationError,
    InvalidInputError,
    ZeroDegreeError,
)
from .experiments import ExperimentConfig, RunRecord, run_sweep, summarize
from .metrics import (
    ErrorReport,
    adjusted_rand_index,
    confusion_matrix,
    misclassification_error,
    misclassification_error_bruteforce,
)
from .sbm import (
    AdjacencySnapshot,
    CommunityLabels,
    ConnectivityModel,
    SizeProfile,
    build_probability_matrix,
    degrees,
    effective_sizes,
    expected_degrees,
    load_matrix_csv,
    load_snapshot,
    normalized_laplacian,
    sample_adjacency,
    save_matrix_csv,
    save_snapshot,
)
from .smoothing import (
    Exponential,
    SmoothingWeights,
    TuningProfile,
    Uniform,
    WeightReport,
    exp_smooth_run,
    exp_smooth_update,
    t_min_regime,
    t_min_weight_bound,
    t_min_weights,
    tuning_profile,
    uniform_smooth,
    validate_weights,
    weighted_smooth,
    weights_of,
)
from .spectral import (
    EigenBasis,
    KMeansResult,
    SpectralClusteringResult,
    kmeans,
    spectral_cluster,
    spectral_norm,
    top_k_eigenpairs,
)

__version__ = "0.1.0"
