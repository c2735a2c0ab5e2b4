"""Large-deviation rate functions for risk measures of mixtures with empirical weights."""

from .errors import *  # noqa: F401,F403
from .models import (
    Exponential,
    FiniteDiscrete,
    Gaussian,
    Law,
    Mixture,
    PointMass,
    discrete,
    mixture_cdf,
    mixture_exp_moment,
    mixture_log_exp_moment,
    mixture_mean,
    mixture_partial_expectation,
    mixture_pdf,
    mixture_quantile,
    point_mass,
    simplex,
)
from .oracle import GridSpec, OracleResult, grid_min_condition, grid_min_general, relative_entropy
from .ratefn import (
    Branch,
    RateProblem,
    RateResult,
    SupportBounds,
    curvature,
    decay_constant,
    lambda_star,
    minimizer,
    r_zero,
    rate,
    rate_closed_s2,
    rate_closed_s3_affine,
    rate_curve,
    rate_value,
    support_bounds,
)
from .riskmeasures import (
    ConditionCheck,
    Entropic,
    ExpectedShortfall,
    ExponentialLoss,
    Mean,
    PiecewiseLinearLoss,
    PsiProfile,
    Quantile,
    Shortfall,
    check_condition,
    component_root,
    evaluate,
    law_risk,
    psi,
    psi_prime,
    psi_profile,
)
from .sim import (
    DecayEstimate,
    SimulationPlan,
    TailPoint,
    decay_slope,
    empirical_risk,
    exact_tail_probability,
    sample_weights,
    tail_probability,
)

__version__ = "0.1.0"
