"""Information-state system identification and control for LTV systems.

Identify a linear time-varying system from input-output rollouts by fitting
time-varying ARMA coefficients with truncated-SVD least squares, realize a
state-space model directly on the history of past outputs and inputs, and
synthesize optimal output-feedback control on the realized model.  An LTI
OKID/ERA baseline is included for comparison experiments.
"""

from .linalg import (
    DEFAULT_RANK_TOL,
    SvdConvergenceError,
    SvdResult,
    lstsq_min_norm,
    numerical_rank,
    svd,
    truncated_pinv,
)
from .plants import (
    LtvSystem,
    NoiseSpec,
    ObservabilityError,
    Rollout,
    RolloutBatch,
    generate_batch,
    info_state_transform,
    load_batch,
    make_cartpole_linearized,
    make_double_integrator,
    make_ltv_oscillator,
    make_plant,
    make_scalar_plant,
    make_spring_mass_3dof,
    observability_matrix,
    forced_response_matrix,
    save_batch,
    simulate,
    simulate_cartpole_nonlinear,
    state_transform,
    true_markov,
)
from .arma import (
    ArmaCoefficients,
    DataMatrix,
    OrderDeterminationError,
    TvArmaModel,
    assemble,
    determine_order,
    fit_all,
    fit_ls,
    fundamental_arma,
    fundamental_arma_model,
    predict,
)
from .realization import (
    InfoState,
    InfoStateModel,
    LtiCanonicalModel,
    info_state_from_history,
    markov_from_arma,
    predict_rollout,
    realize_lti_canonical,
    realize_tv,
    simulate_info_state,
)
from .noise import CorrelationSet, correct_correlations, fit_arma_noisy, sample_correlations
from .control import (
    EquivalenceReport,
    LqrPolicy,
    QuadraticCost,
    compare_q_lengths,
    lqr_tv,
    run_equivalence,
)
from .okid import (
    EraRealization,
    MismatchReport,
    ObserverMarkov,
    era,
    fit_observer_markov,
    mismatch_report,
    recover_observer_gain,
    recover_open_loop_markov,
)

__version__ = "0.1.0"
