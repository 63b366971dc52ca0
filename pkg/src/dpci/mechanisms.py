"""Differentially private primitives and their exact-law oracles.

The quantile sampler ``expq`` draws from an exponential mechanism over the
data-defined bins of a sorted database. All weight arithmetic happens in log
space so that budgets and database sizes in the millions cannot overflow.
``expq_exact_density`` and ``expq_expected_value`` expose the same law in
closed form for testing and for bias studies.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import math

import numpy as np

from .core import DataBounds, Database, DataSizeError, InvalidParameterError

__all__ = [
    "RandomSource",
    "make_rng",
    "derive_seed",
    "BudgetCharge",
    "PrivacyLedger",
    "laplace_draw",
    "laplace_noise",
    "BinLayout",
    "build_bins",
    "expq",
    "expq_exact_density",
    "expq_expected_value",
]

RandomSource = np.random.Generator


def make_rng(seed: int) -> RandomSource:
    """Deterministic uniform stream: same 64-bit seed, same draw sequence."""
    return np.random.Generator(np.random.PCG64(seed))


def _canon(part) -> str:
    # repr() keeps the shortest round-trip form for floats, so the derived
    # key is stable across runs and platforms
    if isinstance(part, float):
        return repr(part)
    return str(part)


def derive_seed(master_seed: int, *parts) -> int:
    """Derive an independent 64-bit stream seed from a master seed and labels.

    The key is the '|'-joined decimal/text form of the arguments, hashed with
    SHA-256; the first eight bytes (big-endian) become the child seed.
    """
    key = "|".join([_canon(master_seed), *(_canon(p) for p in parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class BudgetCharge:
    label: str
    epsilon: float


@dataclass
class PrivacyLedger:
    """Records the privacy cost of every mechanism invocation on real data."""

    charges: list[BudgetCharge] = field(default_factory=list)

    def charge(self, label: str, epsilon: float) -> None:
        self.charges.append(BudgetCharge(label, float(epsilon)))

    @property
    def total(self) -> float:
        return float(sum(c.epsilon for c in self.charges))


def laplace_draw(scale: float, rng: RandomSource) -> float:
    """One Laplace(0, scale) draw via the inverse CDF of a single uniform."""
    if not (math.isfinite(scale) and scale >= 0.0):
        raise InvalidParameterError("scale must be finite and nonnegative")
    if scale == 0.0:
        return 0.0
    u = rng.random()
    while u == 0.0:  # u = 0 would map to -inf
        u = rng.random()
    q = u - 0.5
    return -scale * math.copysign(1.0, q) * math.log1p(-2.0 * abs(q))


def laplace_noise(sensitivity: float, epsilon: float, rng: RandomSource,
                  ledger: PrivacyLedger | None = None,
                  label: str = "laplace") -> float:
    """Noise calibrated to sensitivity/epsilon, charged to the ledger.

    The charge and the noise scale derive from the same two arguments, so a
    ledger total can be trusted without re-deriving any calibration.
    """
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise InvalidParameterError("epsilon must be positive and finite")
    if not (math.isfinite(sensitivity) and sensitivity >= 0.0):
        raise InvalidParameterError("sensitivity must be finite and nonnegative")
    if ledger is not None:
        ledger.charge(label, epsilon)
    return laplace_draw(sensitivity / epsilon, rng)


@dataclass(frozen=True)
class BinLayout:
    """Half-open bins between consecutive sorted values and the range bounds.

    For n values there are n + 2 edges and n + 1 bins B_0 .. B_n, where
    B_i = [edges[i], edges[i+1]). Duplicated values produce zero-width bins
    that carry no probability mass. ``utilities[i]`` is the negated rank
    distance to the target order statistic; the two bins adjacent to the
    target score 0 and every step away subtracts 1.
    """

    edges: np.ndarray
    widths: np.ndarray
    utilities: np.ndarray
    rank: int

    @property
    def nbins(self) -> int:
        return self.widths.size

    def log_weights(self, epsilon: float) -> np.ndarray:
        """log(width_i) + (epsilon/2) * utility_i, with -inf for empty bins."""
        with np.errstate(divide="ignore"):
            logw = np.log(self.widths)
        return logw + 0.5 * epsilon * self.utilities

    def probabilities(self, epsilon: float) -> np.ndarray:
        """Exact selection probability of each bin."""
        logw = self.log_weights(epsilon)
        shifted = np.exp(logw - logw.max())
        return shifted / shifted.sum()

    def bin_index(self, y: float) -> int:
        """Index of the unique half-open bin containing y."""
        if not self.edges[0] <= y < self.edges[-1]:
            raise InvalidParameterError("point lies outside the bounds")
        return int(np.searchsorted(self.edges, y, side="right")) - 1


def build_bins(db: Database, bounds: DataBounds, m: int) -> BinLayout:
    """Sort the database and lay out bins with rank-distance utilities.

    Requires every value to lie inside the bounds (clamp first) and a target
    rank m with 1 <= m <= n.
    """
    n = db.n
    if not 1 <= m <= n:
        raise InvalidParameterError("rank m must satisfy 1 <= m <= n")
    values = np.sort(db.values)
    if values[0] < bounds.xmin or values[-1] > bounds.xmax:
        raise InvalidParameterError("database must be clamped inside the bounds")
    edges = np.empty(n + 2, dtype=np.float64)
    edges[0] = bounds.xmin
    edges[1:-1] = values
    edges[-1] = bounds.xmax
    widths = np.diff(edges)
    idx = np.arange(n + 1)
    utilities = np.where(idx < m, idx + 1 - m, m - idx).astype(np.float64)
    return BinLayout(edges=edges, widths=widths, utilities=utilities, rank=m)


def _sample_layout(layout: BinLayout, epsilon: float, rng: RandomSource,
                   size: int) -> np.ndarray:
    # Two uniform batches, in documented order: bin selection, then the
    # position inside the selected bin.
    logw = layout.log_weights(epsilon)
    weights = np.exp(logw - logw.max())
    cum = np.cumsum(weights)
    total = cum[-1]
    r = rng.random(size) * total
    idx = np.searchsorted(cum, r, side="right")
    np.minimum(idx, layout.nbins - 1, out=idx)
    lo = layout.edges[idx]
    width = layout.widths[idx]
    y = lo + rng.random(size) * width
    # keep draws strictly below the upper edge despite rounding
    hi = layout.edges[idx + 1]
    return np.minimum(y, np.nextafter(hi, lo))


def expq(db: Database, m: int, epsilon: float, bounds: DataBounds,
         rng: RandomSource, size: int | None = None,
         ledger: PrivacyLedger | None = None, label: str = "expq"):
    """Private estimate of the m-th order statistic of a clamped database.

    Selects a bin with probability proportional to width * exp(epsilon/2 *
    utility), then returns a uniform point inside it; the result always lies
    in [xmin, xmax). epsilon = 0 is allowed and degenerates to a width-
    weighted uniform draw over the range. With ``size`` set, that many
    independent draws from the same law are returned as an array; batch mode
    exists for studying the law itself, and the ledger still records the
    single-release charge.
    """
    if not (math.isfinite(epsilon) and epsilon >= 0.0):
        raise InvalidParameterError("epsilon must be nonnegative and finite")
    layout = build_bins(db, bounds, m)
    if ledger is not None:
        ledger.charge(label, epsilon)
    if size is None:
        return float(_sample_layout(layout, epsilon, rng, 1)[0])
    if size < 1:
        raise InvalidParameterError("size must be at least 1")
    return _sample_layout(layout, epsilon, rng, size)


def _log_normalizer(logw: np.ndarray) -> float:
    m = logw.max()
    return float(m + np.log(np.sum(np.exp(logw - m))))


def expq_exact_density(db: Database, m: int, epsilon: float,
                       bounds: DataBounds, y: float) -> float:
    """Exact probability density of expq at the point y in [xmin, xmax)."""
    layout = build_bins(db, bounds, m)
    i = layout.bin_index(y)
    logw = layout.log_weights(epsilon)
    return float(math.exp(0.5 * epsilon * layout.utilities[i]
                          - _log_normalizer(logw)))


def expq_expected_value(db: Database, m: int, epsilon: float,
                        bounds: DataBounds) -> float:
    """Exact mean of the expq law: bin probabilities times bin midpoints."""
    if not (math.isfinite(epsilon) and epsilon >= 0.0):
        raise InvalidParameterError("epsilon must be nonnegative and finite")
    layout = build_bins(db, bounds, m)
    probs = layout.probabilities(epsilon)
    mids = 0.5 * (layout.edges[:-1] + layout.edges[1:])
    return float(np.dot(probs, mids))
