"""Structure recovery for Gaussian graphical models observed under unknown
diagonal measurement noise, up to the noise-induced equivalence class."""

from __future__ import annotations

from .ggm import (
    DistanceMatrix,
    ModelMargins,
    NoiseSpec,
    PrecisionMatrix,
    empirical_distances,
    information_distances,
    joint_distances,
    measure_margins,
    noisy_covariance,
    sample,
    sample_bound,
    synthesize_precision,
)
from .graphs import (
    ArticulatedSetTree,
    BlockDecomposition,
    UndirectedGraph,
    apply_leaf_swap,
    ast_from_json,
    ast_representative_graph,
    ast_to_json,
    block_decomposition,
    build_ast,
    connected_components,
    equivalence_signature,
    graph_from_json,
    graph_to_json,
    is_separator,
    joint_graph,
    minimal_mutual_separators,
    remote_leaf_sets,
    same_equivalence_class,
    star_ancestor,
)
from .experiments import (
    ExperimentConfig,
    TRIAL_COLUMNS,
    TrialRecord,
    generate_graph,
    resolve_graph,
    run_sweep,
    run_trial,
    score_external,
    write_records,
)
from .identifiability import (
    ConfounderReport,
    ConfounderSplit,
    demo_report,
    split_noise,
    support_graph,
    verify_confounder,
)
from .pipeline import (
    AncestorCatalog,
    AncestorCollection,
    InternalCluster,
    LeafCluster,
    PipelineError,
    Tolerances,
    edge_set_ast,
    eps_mode,
    identify_ancestors,
    learn_clusters,
    non_block_neighbors,
    non_cut_test,
    pale,
    run_nomad,
    tia,
    triplet_distance,
)

__all__ = [
    "AncestorCatalog",
    "AncestorCollection",
    "ArticulatedSetTree",
    "BlockDecomposition",
    "ConfounderReport",
    "ConfounderSplit",
    "DistanceMatrix",
    "ExperimentConfig",
    "InternalCluster",
    "LeafCluster",
    "ModelMargins",
    "NoiseSpec",
    "PipelineError",
    "PrecisionMatrix",
    "TRIAL_COLUMNS",
    "Tolerances",
    "TrialRecord",
    "UndirectedGraph",
    "apply_leaf_swap",
    "ast_from_json",
    "ast_representative_graph",
    "ast_to_json",
    "block_decomposition",
    "build_ast",
    "connected_components",
    "demo_report",
    "edge_set_ast",
    "empirical_distances",
    "eps_mode",
    "equivalence_signature",
    "generate_graph",
    "graph_from_json",
    "graph_to_json",
    "identify_ancestors",
    "information_distances",
    "is_separator",
    "joint_distances",
    "joint_graph",
    "learn_clusters",
    "measure_margins",
    "minimal_mutual_separators",
    "non_block_neighbors",
    "non_cut_test",
    "noisy_covariance",
    "pale",
    "remote_leaf_sets",
    "resolve_graph",
    "run_nomad",
    "run_sweep",
    "run_trial",
    "same_equivalence_class",
    "sample",
    "sample_bound",
    "score_external",
    "split_noise",
    "star_ancestor",
    "support_graph",
    "synthesize_precision",
    "tia",
    "triplet_distance",
    "verify_confounder",
    "write_records",
]

__version__ = "0.1.0"
