"""Prior private interval constructions used as comparison points.

``vadhan_ci`` releases a conservative interval from a noisy mean and a noisy,
deliberately inflated variance over a range widened by a pluggable range
finder. ``ora_estimate`` releases a noisy mean and a noisy winsorized mean of
subset standard errors, converted back to an SD-scale spread so it can feed
the same simulation machinery as the package's own estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    CenterSpread,
    ConfidenceInterval,
    DataBounds,
    Database,
    DataSizeError,
    InvalidParameterError,
    qt,
    sample_mean,
)
from .estimators import quantile_rank
from .mechanisms import PrivacyLedger, RandomSource, expq, laplace_noise

__all__ = [
    "VadhanParams",
    "gaussian_tail_range_finder",
    "vadhan_ci",
    "OraParams",
    "ora_estimate",
]


@dataclass(frozen=True)
class VadhanParams:
    """Failure-probability and budget splits plus a priori moment bounds.

    alpha0 covers the t quantile, alpha1 the mean noise tail, alpha2 the
    variance noise tail, and alpha3 the range finder. eps3 is the budget
    offered to the range finder; the default finder spends none of it.
    """

    alpha0: float
    alpha1: float
    alpha2: float
    alpha3: float
    eps1: float
    eps2: float
    eps3: float
    xbar_min: float
    xbar_max: float
    sbar_min: float
    sbar_max: float

    def __post_init__(self) -> None:
        alphas = (self.alpha0, self.alpha1, self.alpha2, self.alpha3)
        if any(not 0.0 < a < 1.0 for a in alphas):
            raise InvalidParameterError("each alpha split must lie in (0, 1)")
        if not sum(alphas) < 1.0:
            raise InvalidParameterError("alpha splits must sum below 1")
        if not (self.eps1 > 0.0 and self.eps2 > 0.0):
            raise InvalidParameterError("eps1 and eps2 must be positive")
        if self.eps3 < 0.0:
            raise InvalidParameterError("eps3 must be nonnegative")
        if not self.xbar_min < self.xbar_max:
            raise InvalidParameterError("mean bounds must satisfy min < max")
        if not 0.0 <= self.sbar_min <= self.sbar_max:
            raise InvalidParameterError("sd bounds must satisfy 0 <= min <= max")
        if self.sbar_max <= 0.0:
            raise InvalidParameterError("sbar_max must be positive")

    @property
    def alpha_total(self) -> float:
        return self.alpha0 + self.alpha1 + self.alpha2 + self.alpha3

    @classmethod
    def from_total(cls, alpha: float, epsilon: float, bounds: DataBounds,
                   sd_max: float | None = None) -> "VadhanParams":
        """Quarter the failure probability, halve the budget between the two
        noisy releases, and give the free default range finder nothing."""
        if not 0.0 < alpha < 1.0:
            raise InvalidParameterError("alpha must lie in (0, 1)")
        if not epsilon > 0.0:
            raise InvalidParameterError("epsilon must be positive")
        if sd_max is None:
            sd_max = bounds.width / 2.0
        return cls(
            alpha0=alpha / 4.0, alpha1=alpha / 4.0,
            alpha2=alpha / 4.0, alpha3=alpha / 4.0,
            eps1=epsilon / 2.0, eps2=epsilon / 2.0, eps3=0.0,
            xbar_min=bounds.xmin, xbar_max=bounds.xmax,
            sbar_min=0.0, sbar_max=sd_max,
        )


RangeFinder = Callable[[Database, "VadhanParams"], tuple[float, float, float]]


def gaussian_tail_range_finder(db: Database,
                               params: VadhanParams) -> tuple[float, float, float]:
    """Widen the a priori mean bounds by a union-bound normal tail radius.

    Spends no privacy budget: the padding depends only on n and the a priori
    sd bound, so the third return value (budget spent) is always 0.
    """
    pad = params.sbar_max * math.sqrt(2.0 * math.log(2.0 * db.n / params.alpha3))
    return params.xbar_min - pad, params.xbar_max + pad, 0.0


def vadhan_ci(db: Database, params: VadhanParams, rng: RandomSource,
              ledger: PrivacyLedger | None = None,
              range_finder: RangeFinder = gaussian_tail_range_finder,
              ) -> ConfidenceInterval:
    """Conservative interval from a noisy mean and an inflated noisy variance.

    The variance estimate adds the tail quantile of its own Laplace noise
    before the noise itself, so it overestimates with probability at least
    1 - alpha2; the final interval adds the mean noise tail on top of the t
    quantile term. Coverage is therefore at least 1 - sum(alpha_i), typically
    far higher.
    """
    n = db.n
    if n < 2:
        raise DataSizeError("vadhan_ci needs at least two values")
    lo, hi, eps3_spent = range_finder(db, params)
    if not lo < hi:
        raise InvalidParameterError("range finder returned an empty range")
    if ledger is not None:
        ledger.charge("range", eps3_spent)
    x = np.clip(db.values, lo, hi)
    width = hi - lo
    mean_scale = width / (params.eps1 * n)
    var_scale = width ** 2 / (params.eps2 * (n - 1))
    center = float(np.mean(x)) + laplace_noise(
        width / n, params.eps1, rng, ledger, "mean")
    noisy_var = (float(np.var(x, ddof=1))
                 + var_scale * math.log(1.0 / (2.0 * params.alpha2))
                 + laplace_noise(width ** 2 / (n - 1), params.eps2, rng,
                                 ledger, "variance"))
    floored = noisy_var < 0.0
    noisy_var = max(0.0, noisy_var)
    moe = (math.sqrt(noisy_var / n) * qt(1.0 - params.alpha0 / 2.0, n - 1)
           + mean_scale * math.log(1.0 / params.alpha1))
    return ConfidenceInterval(center - moe, center + moe, moe,
                              params.alpha_total, "vadhan", floored=floored)


@dataclass(frozen=True)
class OraParams:
    """Subset count and a priori sd bound; None fields resolve per database."""

    subsets: int | None = None
    sd_max: float | None = None


def ora_estimate(db: Database, epsilon: float, bounds: DataBounds,
                 params: OraParams, rng: RandomSource,
                 ledger: PrivacyLedger | None = None) -> CenterSpread:
    """Noisy mean plus a noisy winsorized mean of subset standard errors.

    The data is cut into M consecutive subsets (leftover rows join the last
    one) and each subset's standard error of the full-sample mean goes into a
    small database of spread guesses. Private quartiles of those guesses set
    winsorization cutoffs at two interquartile ranges; the winsorized mean is
    then released with Laplace noise and rescaled from SE to SD units.
    """
    if not epsilon > 0.0:
        raise InvalidParameterError("epsilon must be positive")
    n = db.n
    m_subsets = params.subsets if params.subsets is not None else n // 2
    sd_max = params.sd_max if params.sd_max is not None else bounds.width / 2.0
    if m_subsets < 2:
        raise InvalidParameterError("ora needs at least two subsets")
    if not sd_max > 0.0:
        raise InvalidParameterError("sd_max must be positive")
    base = n // m_subsets
    if base < 2:
        raise DataSizeError("ora needs at least two rows per subset")

    center = sample_mean(db) + laplace_noise(
        bounds.width / n, epsilon / 2.0, rng, ledger, "mean")

    head = db.values[: (m_subsets - 1) * base].reshape(m_subsets - 1, base)
    tail = db.values[(m_subsets - 1) * base:]
    sds = np.empty(m_subsets)
    sds[:-1] = np.std(head, axis=1, ddof=1)
    sds[-1] = np.std(tail, ddof=1)
    guesses = sds / math.sqrt(n)

    se_max = sd_max / math.sqrt(n)
    upper_bound = se_max + 2.0 * sd_max * math.sqrt(m_subsets) / math.sqrt(2.0 * n * n)
    se_bounds = DataBounds(0.0, upper_bound)
    guess_db = Database(np.clip(guesses, 0.0, upper_bound))

    q1 = expq(guess_db, quantile_rank(0.25, m_subsets), epsilon / 4.0,
              se_bounds, rng, ledger=ledger, label="first-quartile")
    q3 = expq(guess_db, quantile_rank(0.75, m_subsets), epsilon / 4.0,
              se_bounds, rng, ledger=ledger, label="third-quartile")
    mid = 0.5 * (q1 + q3)
    iqr = abs(q3 - q1)
    low_cut, high_cut = mid - 2.0 * iqr, mid + 2.0 * iqr
    winsorized = float(np.mean(np.clip(guess_db.values, low_cut, high_cut)))
    noisy_se = winsorized + laplace_noise(
        abs(high_cut - low_cut) / m_subsets, epsilon / 2.0, rng, ledger,
        "winsorized-mean")
    return CenterSpread(center, max(0.0, noisy_se) * math.sqrt(n),
                        floored=noisy_se < 0.0)
