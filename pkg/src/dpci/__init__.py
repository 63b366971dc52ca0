"""Differentially private confidence intervals for range-bounded data.

The package estimates a private (center, spread) pair for normally
distributed data clamped into a known range, then converts it into a
confidence interval for the mean by simulation. Five estimators trade the
privacy budget between the two halves in different ways; classical public
intervals and two prior private constructions are included as baselines.
"""

__version__ = "0.1.0"

from .baselines import OraParams, VadhanParams, gaussian_tail_range_finder, ora_estimate, vadhan_ci
from .core import (
    CenterSpread,
    ConfidenceInterval,
    DataBounds,
    Database,
    DataSizeError,
    InvalidParameterError,
    PrivacyBudget,
    clamp,
    empirical_quantile,
    mad_sum_sensitivity,
    mean_abs_deviation,
    mean_sensitivity,
    public_ci,
    qt,
    qz,
    sample_mean,
    sample_variance,
    variance_sensitivity,
)
from .estimators import (
    DEFAULT_PARAMS,
    EstimatorId,
    EstimatorParams,
    cenq,
    get_estimator,
    median_rank,
    mod_dev,
    noisymad,
    noisyvar,
    quantile_rank,
    symq,
)
from .mechanisms import (
    BinLayout,
    BudgetCharge,
    PrivacyLedger,
    RandomSource,
    build_bins,
    derive_seed,
    expq,
    expq_exact_density,
    expq_expected_value,
    laplace_draw,
    laplace_noise,
    make_rng,
)
from .simulate import (
    BiasRecord,
    CoverageRecord,
    ExperimentGrid,
    METHOD_IDS,
    MoeRecord,
    SimConfig,
    SweepRecord,
    bias_curve,
    run_coverage,
    run_moe,
    sim_ci,
    sim_interval,
    sweep_param,
)
