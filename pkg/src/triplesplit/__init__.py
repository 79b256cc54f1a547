"""Three-operator splitting solvers, baselines, diagnostics, and benchmarks."""

from .operators import (
    AffineProjector,
    CocoerciveOperator,
    InvalidBoundsError,
    LinearCompositeResolvent,
    MonotoneOperator,
    SingularConstraintError,
    SingularOperatorError,
    affine_operator,
    as_point,
    box_operator,
    grad_quadratic,
    linear_composite_operator,
    prox_affine,
    prox_box,
    prox_quadratic,
    quadratic_cocoercive,
    quadratic_operator,
    reflect,
    resolvent_linear_composite,
    zero_cocoercive,
    zero_operator,
)
from .splitting import (
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    NumericalBlowupError,
    RateReport,
    SplitConfig,
    StepOutput,
    Trace,
    admissible_relaxation_bound,
    averaged_parameter,
    composite_smooth_step,
    drs_step,
    dys_step,
    fbs_variant_step,
    km_iterate,
    km_tau,
    step_identity_diagnostics,
    proposed_step,
    rate_report,
    solution_from_fixed_point,
)
from .multiblock import (
    MultiblockScheme,
    SmoothBlock,
    multiblock_certificate,
    multiblock_step,
)
from .problems import (
    BoundProjectionInstance,
    CompositeInstance,
    InfeasibleInstanceError,
    KktCertificate,
    QuadraticSumInstance,
    assemble_splitting_operators,
    build_composite_instance,
    build_figure2_instance,
    build_quadratic_sum_instance,
    explicit_figure2_stepper,
    kkt_oracle,
    load_instance,
    save_instance,
)
from .admm import (
    AdmmState,
    AffineBlock,
    BoxBlock,
    DualFunctions,
    DualWitness,
    QuadraticBlock,
    SeparableProblem,
    UnsupportedBlockError,
    admm3_step,
    build_dual,
    consensus_dual_optimum,
    consensus_dual_problem,
    equivalence_harness,
    initial_state,
    objective_gap_trace,
    dual_step_identities,
    objective_gap_sandwich,
    random_quadratic_problem,
    run_dual_splitting,
    scaled_gap_trace,
    solve_kkt,
)

__version__ = "0.1.0"
