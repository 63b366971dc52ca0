"""Data model, sample statistics, sensitivity bounds, and quantile functions.

Everything downstream works with range-bounded data: a ``Database`` of finite
observations together with ``DataBounds`` known independently of the data.
The normal and Student-t quantile functions are implemented here so the
package has no runtime dependency beyond numpy; both are checked against
independent oracles in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "InvalidParameterError",
    "DataSizeError",
    "Database",
    "DataBounds",
    "PrivacyBudget",
    "CenterSpread",
    "ConfidenceInterval",
    "clamp",
    "sample_mean",
    "sample_variance",
    "mean_abs_deviation",
    "mean_sensitivity",
    "variance_sensitivity",
    "mad_sum_sensitivity",
    "qz",
    "qt",
    "empirical_quantile",
    "public_ci",
]


class InvalidParameterError(ValueError):
    """A parameter or parameter combination violates a documented contract."""


class DataSizeError(ValueError):
    """The database has too few rows for the requested computation."""


class Database:
    """A one-dimensional collection of finite real observations."""

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1:
            raise InvalidParameterError("database values must be one-dimensional")
        if arr.size < 1:
            raise DataSizeError("database must contain at least one value")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("database values must be finite")
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"Database(n={self.values.size})"


@dataclass(frozen=True)
class DataBounds:
    """A priori range [xmin, xmax] that every observation is clamped into."""

    xmin: float
    xmax: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xmin", float(self.xmin))
        object.__setattr__(self, "xmax", float(self.xmax))
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)):
            raise InvalidParameterError("bounds must be finite")
        if not self.xmin < self.xmax:
            raise InvalidParameterError("bounds must satisfy xmin < xmax")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin


@dataclass(frozen=True)
class PrivacyBudget:
    """Total privacy budget epsilon and the fraction rho spent on the center."""

    epsilon: float
    rho: float = 0.5

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameterError("epsilon must be positive and finite")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError("rho must lie in [0, 1]")


@dataclass(frozen=True)
class CenterSpread:
    """A private (center, spread) estimate; spread is never negative.

    ``floored`` records that a noisy intermediate went negative and was
    truncated to zero, which callers may want to surface.
    """

    center: float
    spread: float
    floored: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and math.isfinite(self.spread)):
            raise InvalidParameterError("center and spread must be finite")
        if self.spread < 0:
            raise InvalidParameterError("spread must be nonnegative")


@dataclass(frozen=True)
class ConfidenceInterval:
    """A two-sided interval with its nominal level and run provenance.

    ``floored`` mirrors the flag on CenterSpread: some noisy intermediate
    was truncated at zero while building the interval.
    """

    lower: float
    upper: float
    moe: float
    alpha: float
    method: str
    seed: int = 0
    nsim: int = 0
    floored: bool = False

    def __post_init__(self) -> None:
        if not self.lower <= self.upper:
            raise InvalidParameterError("interval must satisfy lower <= upper")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError("alpha must lie in (0, 1)")

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def clamp(db: Database, bounds: DataBounds) -> Database:
    """Project every value into [xmin, xmax]; idempotent."""
    return Database(np.clip(db.values, bounds.xmin, bounds.xmax))


def sample_mean(db: Database) -> float:
    return float(np.mean(db.values))


def sample_variance(db: Database) -> float:
    """Unbiased sample variance, denominator n - 1."""
    if db.n < 2:
        raise DataSizeError("sample variance needs at least two values")
    return float(np.var(db.values, ddof=1))


def mean_abs_deviation(db: Database) -> float:
    """Mean absolute deviation around the sample mean."""
    return float(np.mean(np.abs(db.values - np.mean(db.values))))


def mean_sensitivity(bounds: DataBounds, n: int) -> float:
    """Worst-case change of the mean when one of n bounded rows is replaced."""
    if n < 1:
        raise DataSizeError("n must be at least 1")
    return bounds.width / n


def variance_sensitivity(bounds: DataBounds, n: int) -> float:
    """Worst-case change of the sample variance under one-row replacement."""
    if n < 2:
        raise DataSizeError("n must be at least 2")
    return bounds.width ** 2 / n


def mad_sum_sensitivity(bounds: DataBounds) -> float:
    """Worst-case change of sum_i |x_i - mean| under one-row replacement."""
    return 2.0 * bounds.width


_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / _SQRT2PI


# Rational approximation coefficients (Acklam), |relative error| < 1.15e-9.
_QZ_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_QZ_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_QZ_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_QZ_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)
_QZ_PLOW = 0.02425


def _qz_lower_half(p: float) -> float:
    # p in (0, 0.5]; rational start, then one Newton step against the erf CDF
    if p < _QZ_PLOW:
        q = math.sqrt(-2.0 * math.log(p))
        z = ((((((_QZ_C[0] * q + _QZ_C[1]) * q + _QZ_C[2]) * q + _QZ_C[3]) * q
               + _QZ_C[4]) * q + _QZ_C[5])
             / ((((_QZ_D[0] * q + _QZ_D[1]) * q + _QZ_D[2]) * q + _QZ_D[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        z = ((((((_QZ_A[0] * r + _QZ_A[1]) * r + _QZ_A[2]) * r + _QZ_A[3]) * r
               + _QZ_A[4]) * r + _QZ_A[5]) * q
             / (((((_QZ_B[0] * r + _QZ_B[1]) * r + _QZ_B[2]) * r + _QZ_B[3]) * r
                 + _QZ_B[4]) * r + 1.0))
    pdf = _norm_pdf(z)
    if pdf > 0.0:
        z -= (_norm_cdf(z) - p) / pdf
    return z


def qz(p: float) -> float:
    """Standard normal quantile; antisymmetric about p = 0.5 by construction."""
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must lie strictly between 0 and 1")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -_qz_lower_half(1.0 - p)
    return _qz_lower_half(p)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (modified Lentz).
    MAXIT, EPS, FPMIN = 2000, 3.0e-16, 1.0e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return h


def _betai(a: float, b: float, x: float) -> float:
    # Regularized incomplete beta I_x(a, b).
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log(1.0 - x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def _t_cdf(t: float, df: int) -> float:
    x = df / (df + t * t)
    tail = 0.5 * _betai(0.5 * df, 0.5, x)
    return 1.0 - tail if t >= 0 else tail


# Above this df the series expansion around the normal quantile is already
# accurate to ~1e-12, far tighter than the continued fraction needs to be.
_QT_SERIES_DF = 10_000


def _qt_series(p: float, df: int) -> float:
    z = qz(p)
    g1 = (z ** 3 + z) / 4.0
    g2 = (5.0 * z ** 5 + 16.0 * z ** 3 + 3.0 * z) / 96.0
    g3 = (3.0 * z ** 7 + 19.0 * z ** 5 + 17.0 * z ** 3 - 15.0 * z) / 384.0
    return z + g1 / df + g2 / df ** 2 + g3 / df ** 3


@lru_cache(maxsize=65536)
def _qt_upper_half(p: float, df: int) -> float:
    # p in (0.5, 1); bisection on the beta-function CDF
    if df > _QT_SERIES_DF:
        return _qt_series(p, df)
    lo, hi = 0.0, 1.0
    while _t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e300:
            raise InvalidParameterError("t quantile out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def qt(p: float, df: int) -> float:
    """Student t quantile with df degrees of freedom; antisymmetric in p."""
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must lie strictly between 0 and 1")
    df = int(df)
    if df < 1:
        raise InvalidParameterError("df must be a positive integer")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -_qt_upper_half(1.0 - p, df)
    return _qt_upper_half(p, df)


def empirical_quantile(values, p: float) -> float:
    """Order-statistic quantile with linear interpolation at h = p (n - 1)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 1:
        raise DataSizeError("quantile of an empty collection is undefined")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError("p must lie in [0, 1]")
    return float(np.quantile(arr, p))


def public_ci(db: Database, alpha: float) -> ConfidenceInterval:
    """Classical t interval for the mean, computed without privacy noise."""
    if db.n < 2:
        raise DataSizeError("a t interval needs at least two values")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1)")
    xbar = sample_mean(db)
    sd = math.sqrt(sample_variance(db))
    moe = sd / math.sqrt(db.n) * qt(1.0 - alpha / 2.0, db.n - 1)
    return ConfidenceInterval(xbar - moe, xbar + moe, moe, alpha, "public")
