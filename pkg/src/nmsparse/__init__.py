"""N:M fine-grained sparsity: masks, transposable solvers, analytics, calibration."""

from .analytics import (
    mask_diversity,
    phase_curve,
    select_n_for_budget,
    sparse_probability,
    violation_probability,
)
from .calibrate import adaprune, convert_mask, mean_absorb
from .estimators import AdaPruneRegressor, NMPruner
from .exceptions import (
    DimensionError,
    DivisibilityError,
    FormatError,
    InfeasibleError,
    InvalidMask,
    NMSparseError,
    ShapeError,
    ShapeMismatch,
    SingularSystem,
    TooLargeError,
)
from .flow import build_network, optimal_transposable_mask, solve_min_cost
from .greedy import greedy_prune_set, greedy_transposable_mask, repair_surplus, tightness_instance
from .io import load_tensor, save_tensor
from .masks import count_violations, enforce_structured, sequential_mask, structured_mask, unstructured_mask
from .oracle import exact_transposable_count, exhaustive_transposable_optimum
from .tensor_core import NmConfig, iter_row_blocks, iter_square_blocks, masked_l1, pruned_l1

__version__ = "0.1.0"
