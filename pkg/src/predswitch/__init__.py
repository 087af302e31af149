"""Robust predictive min-switching control for uncertain discrete-time
switched affine systems with a one-step input delay.

Pipeline: discretize continuous modes into a vertex-form uncertain system,
compute the nominal limit cycle along a given mode cycle, certify nominal
decay (P_i, mu), certify robustness (R, Q, gamma) by LMI feasibility, then
simulate the predictive closed loop and project the invariant attractor to
per-index ellipsoids.
"""

from .control import (
    AttractorEllipsoid,
    ClosedLoopState,
    PredictionPair,
    Trace,
    attractor_projection,
    check_robust_invariance_mc,
    control_law,
    ellipsoids_disjoint,
    initial_state,
    lyapunov,
    predict,
    simulate,
    step,
)
from .errors import (
    ConfigError,
    Diverged,
    Infeasible,
    InvalidCertificatePair,
    InvalidInput,
    MuInfeasible,
    MuTooLarge,
    NoUniqueLimitCycle,
    NotSchurStable,
    PredswitchError,
)
from .lmi import FeasibilityOptions, FeasibilityResult, LmiProblem, solve_feasibility
from .model import (
    Cycle,
    ModePolytope,
    NominalSelection,
    SwitchedAffineSystem,
    UncertaintyRealization,
    build_example_system,
    mod_index,
    realize,
    sample_uncertainty,
)
from .nominal import (
    LimitCycle,
    MonodromyReport,
    NominalCertificate,
    NominalMarginReport,
    compute_limit_cycle,
    limit_cycle_residual,
    max_mu,
    monodromy,
    synthesize_nominal_certificate,
    verify_nominal_certificate,
)
from .numerics import (
    EigenReport,
    expm_affine,
    is_positive_definite,
    solve_discrete_lyapunov,
    spectral_radius,
    sym_eigs,
)
from .robust import (
    RobustCertificate,
    RobustMarginReport,
    assemble_theorem,
    delta_vector,
    gamma_sweep,
    pack_rq,
    psi_block,
    closed_form_certificate,
    synthesize_robust_certificate,
    unpack_rq,
    verify_robust_certificate,
)

__version__ = "0.1.0"
