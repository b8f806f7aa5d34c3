"""Inner (laminate) and outer (nuclear-norm) estimates for the relaxed ideal MHD constraint set."""

from .bounds import (
    BoundaryKind,
    GapReport,
    Kind,
    Verdict,
    ViolationReport,
    check_h_convexity,
    check_lambda_convexity_U,
    classify,
    gamma_star,
    gap_probe,
    h_gamma,
    in_upper,
)
from .laminates import (
    SECOND_ORDER,
    LaminateTree,
    Leaf,
    NotDecomposable,
    Reason,
    Split,
    TreeReport,
    WitnessPair,
    decompose,
    first_order_split,
    first_order_witness,
    in_lower_hull,
    recombine,
    second_order_path,
    third_order_split,
    third_order_witness,
    verify_tree,
)
from .linalg import SingularTriple, kernel_basis, nuclear_norm, rank_one_factor, singular_values, solve_quadratic
from .sampler import (
    ClassificationReport,
    child_stream,
    forward_laminate,
    monte_carlo_classify,
    sample_boundary,
    sample_K,
    sample_rank_one_lower,
    sample_upper,
)
from .state import Direction, Params, State, f0, g_defect, in_K, m0, ohm_defect, ohm_defect_matrix_form
from .wave_cone import direction_from_vectors, in_lambda, lambda_matrix, move_direction

__version__ = "0.1.0"
