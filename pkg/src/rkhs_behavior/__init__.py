"""Data-driven behavioral models of nonlinear systems in vector-valued RKHS.

Two pipelines share one kernel layer:

* :mod:`rkhs_behavior.interp` fits minimum-norm interpolants of the next
  output from regression windows and certifies each prediction through the
  error covariance ``Sigma_N(z)``;
* :mod:`rkhs_behavior.subspace` identifies Hammerstein systems from Gram
  matrices of a feature kernel and tests trajectory membership.

:mod:`rkhs_behavior.systems` holds the reference simulators.
"""
from .errors import (
    BehaviorError,
    ConfigError,
    ContractError,
    DegenerateDataError,
    DimensionError,
    InsufficientDataError,
    ObservabilityError,
    ParseError,
    ShapeError,
)
from .interp import (
    Interpolator,
    RegressionSample,
    RepresenterReport,
    SigmaCertificate,
    build_regressors,
    fit_min_norm,
    interp_norm_sq,
    predict,
    regression_kernel,
    representer_check,
    sigma_certificate,
)
from .kernels import (
    DirectSum,
    FeatureMap,
    FockKernel,
    GaussianKernel,
    KernelExpansion,
    LinearKernel,
    OperatorKernel,
    PolynomialKernel,
    RankOneFeature,
    ScalarKernel,
    ScalarLift,
    TabulatedFeatureMap,
    eval_operator_kernel,
    feature_map,
    gram_block,
    kernel_row,
    tabulate,
    trace_inner,
)
from .linalg import (
    DEFAULT_POLICY,
    RankPolicy,
    colspace_residual,
    eig_sym,
    hankel,
    is_pe,
    numerical_rank,
    oblique_project,
    pinv,
    svd_trunc,
)
from .subspace import (
    MembershipVerdict,
    PastFutureData,
    SubspaceResult,
    build_past_future,
    input_rank_check,
    membership_test,
    recover_states,
    subspace_predict,
)
from .systems import (
    ARModel,
    StateSpaceModel,
    Trajectory,
    VolterraFunction,
    eval_volterra,
    make_lti_ar,
    realization,
    simulate_ar,
    simulate_ss,
    ss_to_ar,
    uniform_inputs,
)

__version__ = "0.1.0"
