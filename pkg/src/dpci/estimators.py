"""Private (center, spread) estimators for range-bounded data.

Each estimator spends a total budget of epsilon, split between a center
query and a spread query by the fraction rho carried in the budget. The
noisy-moment estimators add Laplace noise to the mean and to a dispersion
statistic; the quantile estimators locate order statistics with the
exponential-mechanism sampler and convert quantile gaps into a normal-scale
spread through ``qz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    CenterSpread,
    DataBounds,
    Database,
    DataSizeError,
    InvalidParameterError,
    PrivacyBudget,
    mad_sum_sensitivity,
    mean_abs_deviation,
    mean_sensitivity,
    qz,
    sample_mean,
    sample_variance,
    variance_sensitivity,
)
from .mechanisms import PrivacyLedger, RandomSource, expq, laplace_noise

__all__ = [
    "EstimatorId",
    "EstimatorParams",
    "DEFAULT_PARAMS",
    "median_rank",
    "quantile_rank",
    "noisyvar",
    "noisymad",
    "cenq",
    "symq",
    "mod_dev",
    "get_estimator",
]


class EstimatorId(str, Enum):
    """Closed enumeration of the supported private estimators."""

    NOISYVAR = "noisyvar"
    NOISYMAD = "noisymad"
    CENQ = "cenq"
    SYMQ = "symq"
    MOD = "mod"


@dataclass(frozen=True)
class EstimatorParams:
    """Tuning knobs: the budget split rho and the quantile location b."""

    rho: float = 0.5
    b: float = 0.65

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError("rho must lie in [0, 1]")
        if not 0.0 < self.b < 1.0:
            raise InvalidParameterError("b must lie in (0, 1)")


# Splits and quantile locations that minimize interval width in simulation;
# each sits inside a broad flat optimum, so small deviations cost little.
DEFAULT_PARAMS: dict[EstimatorId, EstimatorParams] = {
    EstimatorId.NOISYVAR: EstimatorParams(rho=0.80),
    EstimatorId.NOISYMAD: EstimatorParams(rho=0.85),
    EstimatorId.CENQ: EstimatorParams(rho=0.50, b=0.65),
    EstimatorId.SYMQ: EstimatorParams(rho=0.50, b=0.35),
    EstimatorId.MOD: EstimatorParams(rho=0.50),
}


def median_rank(n: int) -> int:
    """Rank of the median order statistic: floor((n + 1) / 2)."""
    if n < 1:
        raise DataSizeError("n must be at least 1")
    return (n + 1) // 2


def quantile_rank(b: float, n: int) -> int:
    """Rank targeting the b-quantile: floor(b (n - 1) + 1), clamped to [1, n]."""
    if n < 1:
        raise DataSizeError("n must be at least 1")
    if not 0.0 < b < 1.0:
        raise InvalidParameterError("b must lie in (0, 1)")
    return min(max(int(math.floor(b * (n - 1) + 1.0)), 1), n)


def _check_split(rho: float) -> None:
    if not 0.0 < rho < 1.0:
        raise InvalidParameterError(
            "rho must lie strictly in (0, 1) so both queries get budget")


def noisyvar(db: Database, budget: PrivacyBudget, bounds: DataBounds,
             rng: RandomSource,
             ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Laplace-noised mean and sample variance; spread is the noisy SD."""
    if db.n < 2:
        raise DataSizeError("noisyvar needs at least two values")
    _check_split(budget.rho)
    eps = budget.epsilon
    center = sample_mean(db) + laplace_noise(
        mean_sensitivity(bounds, db.n), budget.rho * eps, rng, ledger, "mean")
    noisy_var = sample_variance(db) + laplace_noise(
        variance_sensitivity(bounds, db.n), (1.0 - budget.rho) * eps, rng,
        ledger, "variance")
    return CenterSpread(center, math.sqrt(max(0.0, noisy_var)),
                        floored=noisy_var < 0.0)


def noisymad(db: Database, budget: PrivacyBudget, bounds: DataBounds,
             rng: RandomSource,
             ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Laplace-noised mean and mean absolute deviation.

    The MAD of a normal sample is sqrt(2/pi) times its SD, so the noisy MAD
    is rescaled by sqrt(pi/2) to estimate the SD.
    """
    _check_split(budget.rho)
    eps = budget.epsilon
    center = sample_mean(db) + laplace_noise(
        mean_sensitivity(bounds, db.n), budget.rho * eps, rng, ledger, "mean")
    noisy_mad = mean_abs_deviation(db) + laplace_noise(
        mad_sum_sensitivity(bounds) / db.n, (1.0 - budget.rho) * eps, rng,
        ledger, "mad")
    return CenterSpread(center, math.sqrt(math.pi / 2.0) * max(0.0, noisy_mad),
                        floored=noisy_mad < 0.0)


def cenq(db: Database, budget: PrivacyBudget, bounds: DataBounds,
         params: EstimatorParams, rng: RandomSource,
         ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Private median plus a private upper quantile at location b > 0.5.

    The gap between the b-quantile and the median is qz(b) standard
    deviations under normality, which calibrates the spread.
    """
    if db.n < 2:
        raise DataSizeError("cenq needs at least two values")
    if not 0.5 < params.b < 1.0:
        raise InvalidParameterError("cenq needs b in (0.5, 1)")
    eps = budget.epsilon
    center = expq(db, median_rank(db.n), budget.rho * eps, bounds, rng,
                  ledger=ledger, label="median")
    upper = expq(db, quantile_rank(params.b, db.n), (1.0 - budget.rho) * eps,
                 bounds, rng, ledger=ledger, label="quantile")
    spread = max(0.0, (upper - center) / qz(params.b))
    return CenterSpread(center, spread, floored=upper < center)


def symq(db: Database, budget: PrivacyBudget, bounds: DataBounds,
         params: EstimatorParams, rng: RandomSource,
         ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Two symmetric private quantiles at b and 1 - b, each on half the budget.

    Their midpoint estimates the center and their half-gap, divided by
    qz(1 - b), estimates the SD. Requires b < 0.5.
    """
    if db.n < 2:
        raise DataSizeError("symq needs at least two values")
    if not 0.0 < params.b < 0.5:
        raise InvalidParameterError("symq needs b in (0, 0.5)")
    eps = budget.epsilon
    lower = expq(db, quantile_rank(params.b, db.n), 0.5 * eps, bounds, rng,
                 ledger=ledger, label="lower-quantile")
    upper = expq(db, quantile_rank(1.0 - params.b, db.n), 0.5 * eps, bounds,
                 rng, ledger=ledger, label="upper-quantile")
    center = 0.5 * (lower + upper)
    spread = max(0.0, (upper - center) / qz(1.0 - params.b))
    return CenterSpread(center, spread, floored=upper < lower)


def mod_dev(db: Database, budget: PrivacyBudget, bounds: DataBounds,
            rng: RandomSource,
            ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Private median, then the private median of absolute deviations.

    The deviations |x_i - center| live in [0, max(|xmin - center|,
    |xmax - center|)), bounds that follow from the original range without
    spending extra budget. The median absolute deviation of a normal sample
    is qz(0.75) standard deviations, which calibrates the spread.
    """
    _check_split(budget.rho)
    eps = budget.epsilon
    center = expq(db, median_rank(db.n), budget.rho * eps, bounds, rng,
                  ledger=ledger, label="median")
    deviations = Database(np.abs(db.values - center))
    dev_max = max(abs(bounds.xmin - center), abs(bounds.xmax - center))
    dev_bounds = DataBounds(0.0, dev_max)
    dev_median = expq(deviations, median_rank(db.n), (1.0 - budget.rho) * eps,
                      dev_bounds, rng, ledger=ledger, label="deviation-median")
    return CenterSpread(center, dev_median / qz(0.75))


def get_estimator(method: EstimatorId | str, epsilon: float,
                  bounds: DataBounds, rho: float | None = None,
                  b: float | None = None):
    """Bind a method id and its tuning to a callable (db, rng, ledger) form.

    Omitted knobs fall back to the per-method defaults.
    """
    method = EstimatorId(method)
    defaults = DEFAULT_PARAMS[method]
    params = EstimatorParams(
        rho=defaults.rho if rho is None else rho,
        b=defaults.b if b is None else b,
    )
    budget = PrivacyBudget(epsilon, params.rho)

    if method is EstimatorId.NOISYVAR:
        def run(db, rng, ledger=None):
            return noisyvar(db, budget, bounds, rng, ledger)
    elif method is EstimatorId.NOISYMAD:
        def run(db, rng, ledger=None):
            return noisymad(db, budget, bounds, rng, ledger)
    elif method is EstimatorId.CENQ:
        def run(db, rng, ledger=None):
            return cenq(db, budget, bounds, params, rng, ledger)
    elif method is EstimatorId.SYMQ:
        def run(db, rng, ledger=None):
            return symq(db, budget, bounds, params, rng, ledger)
    else:
        def run(db, rng, ledger=None):
            return mod_dev(db, budget, bounds, rng, ledger)

    run.method = method.value
    run.params = params
    run.epsilon = float(epsilon)
    return run
