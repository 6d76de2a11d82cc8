"""treetomo: boundary-layer tomography for killed walks on rooted trees.

Build a rooted tree, augment it so every branch reaches two detector layers,
attach a nearest-neighbor chain, and either compute the joint laws of first
boundary contact exactly or sample them.  The tomography module inverts the
map: the two boundary laws determine every transition probability, exactly
from analytic laws and consistently from simulated probes.
"""

from .chain_model import (
    FLOAT,
    KNOWN,
    RATIONAL,
    RECOVERED,
    UNKNOWN,
    TransitionKernel,
    default_augmented_kernel,
    random_kernel,
    validate_kernel,
)
from .errors import TreetomoError
from .estimation import (
    SampleBatch,
    WalkSample,
    WalkStream,
    collect_batch,
    consistency_curve,
    empirical_joint,
    estimate_kernel,
    sample_walk,
)
from .forward_solver import (
    INNER,
    OUTER,
    HittingDistribution,
    PathClassQuery,
    brute_force_hitting,
    first_hitting_joint,
    path_class_prob,
)
from .tomography import (
    EdgeRecoveryPlan,
    RecoveryReport,
    kernel_max_error,
    make_plan,
    recover_all,
    recover_edge,
    recover_star,
    tail_passage_probs,
    unknown_edge_coefficient,
)
from .tree_model import (
    AugmentedTree,
    RootedTree,
    build_tree,
    l_augment_at,
    radii,
    random_tree,
    segment,
    spherical_augmentation,
    star,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedTree",
    "EdgeRecoveryPlan",
    "FLOAT",
    "HittingDistribution",
    "INNER",
    "KNOWN",
    "OUTER",
    "PathClassQuery",
    "RATIONAL",
    "RECOVERED",
    "RecoveryReport",
    "RootedTree",
    "SampleBatch",
    "TransitionKernel",
    "TreetomoError",
    "UNKNOWN",
    "WalkSample",
    "WalkStream",
    "brute_force_hitting",
    "build_tree",
    "collect_batch",
    "consistency_curve",
    "default_augmented_kernel",
    "empirical_joint",
    "estimate_kernel",
    "first_hitting_joint",
    "kernel_max_error",
    "l_augment_at",
    "make_plan",
    "path_class_prob",
    "radii",
    "random_kernel",
    "random_tree",
    "recover_all",
    "recover_edge",
    "recover_star",
    "sample_walk",
    "segment",
    "spherical_augmentation",
    "star",
    "tail_passage_probs",
    "unknown_edge_coefficient",
    "validate_kernel",
]
