"""Data-driven dead-beat unknown-input-observer residual generators for
actuator fault detection and identification in discrete-time LTI plants."""

from .dd_design import (
    AlgorithmOneTrace,
    DataMatrices,
    DdSolvabilityReport,
    build_data_matrices,
    check_dd_solvability,
    compress_columns,
    estimate_disturbance_dim,
    run_algorithm_one,
    solve_t4,
)
from .fdi_runtime import (
    FaultTrace,
    MarkovStack,
    RecursiveFaultEstimator,
    build_markov_stack,
    detect,
    identify_fault_recursive,
    identify_fault_window,
    monitor,
)
from .lti_model import (
    SignalTrace,
    StackedVector,
    SystemRealization,
    UioMatrices,
    estimation_error,
    run_residual_generator,
    simulate_plant,
    stack,
)
from .mb_design import (
    ExistenceVerdict,
    check_fault_identifiability,
    check_strong_star_reconstructability,
    constraint_residuals,
    deadbeat_gain,
    solve_disturbance_decoupler,
    synthesize_uio,
)
from .numkit import Tolerance, is_nilpotent, null_space_basis, numerical_rank, pbh_rank_at, pseudo_inverse

__version__ = "0.1.0"
