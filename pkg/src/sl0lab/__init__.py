"""sl0lab: smoothed-l0 sparse recovery with a phase-transition benchmark lab."""

from .ensembles import (
    InvalidDimsError,
    InvalidSparsityError,
    NonzeroDist,
    ProblemInstance,
    Suite,
    generate_sparse_signal,
    generate_use_matrix,
    make_instance,
)
from .linalg import (
    FactorizationMode,
    FlopModel,
    MatrixFactorization,
    MissingNullBasisError,
    ProjectionForm,
    RankDeficientError,
    apply_pseudo_inverse,
    factorize,
    least_norm_solution,
    preferred_form,
    project_null_space,
)
from .phase import (
    FitMethod,
    PhaseCell,
    PhaseGridSpec,
    TransitionCurve,
    ZeroTruthError,
    fit_logistic,
    run_cell,
    run_phase_grid,
    success_criterion,
    transition_location,
)
from .solvers import (
    Algorithm,
    MssImplementation,
    ReconstructionResult,
    SolverSchedule,
    descent_direction,
    gaussian_kernel,
    iht_solve,
    reconstruct,
    sl0_min_solve,
    sl0_mss_solve,
    sl0_std_solve,
    smoothed_zero_count,
)
from .timing import EmptyEligibleSetError, TimingSpec, eligible_points, run_timing

__version__ = "0.1.0"
