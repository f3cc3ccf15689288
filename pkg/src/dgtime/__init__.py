"""DG time stepping with continuous reconstruction and compactness diagnostics."""

__version__ = "0.1.0"

from .time_mesh import (
    TimePartition,
    PartitionFamily,
    build_uniform,
    build_geometric,
    build_geometric_capped,
    build_random,
    step_ratio_constant,
    merge,
    parse_family,
)
from .legendre import (
    PiecewisePoly,
    QuadratureRule,
    gauss_rule,
    mapped_legendre_eval,
    project_time,
    constant_poly,
    random_poly,
)
from .spaces import (
    SpaceTriplet,
    SubspaceSelector,
    spectral_triplet,
    laplace_triplet,
    matrix_triplet,
    interpolation_ratio,
    b_project,
    parse_triplet,
)
from .reconstruction import (
    LiftedJump,
    lift,
    reconstruct,
    defect,
    defect_norm,
    jump_functional,
    h3_jump_sum,
    dt_reconstruction_norm,
    verify_derivative_identity,
    estimate_CR,
    inverse_trace_check,
    trace_constant,
)
from .bochner import (
    NormSpec,
    bochner_norm,
    bochner_norm_fn,
    bochner_distance,
    shift_difference,
    restrict,
    holder_step_check,
    vector_norm_step_check,
)
from .parabolic import (
    ParabolicProblem,
    TimeSource,
    StateSource,
    StabilityLedger,
    solve_linear,
    solve_semilinear,
    stability_ledger,
    exact_heat_reference,
    exact_heat_mode,
)
from .harness import (
    RefinementReport,
    run_refinement_study,
    fit_rate,
    shift_exponent_study,
    admissible_q_max,
    check_bounded,
)
