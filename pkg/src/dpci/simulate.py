"""Simulation-based intervals and seeded experiment runners.

``sim_ci`` turns any private (center, spread) estimator into a confidence
interval by resampling: the estimator runs once on the real data, then many
times on synthetic normal databases drawn from its own estimate, and the
spread of the synthetic centers sets the margin of error. Only the single
real-data call touches private data; everything after it is post-processing
and costs no additional budget.

The runners below evaluate methods over (method, n, epsilon, bounds, alpha)
grids with one derived random stream per trial, so results are reproducible
and independent of execution order or worker count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .baselines import OraParams, VadhanParams, ora_estimate, vadhan_ci
from .core import (
    ConfidenceInterval,
    DataBounds,
    Database,
    InvalidParameterError,
    clamp,
    empirical_quantile,
    qt,
    qz,
    sample_mean,
    sample_variance,
)
from .estimators import EstimatorId, get_estimator, quantile_rank
from .mechanisms import PrivacyLedger, RandomSource, derive_seed, expq_expected_value, make_rng

__all__ = [
    "SimConfig",
    "ExperimentGrid",
    "CoverageRecord",
    "MoeRecord",
    "SweepRecord",
    "BiasRecord",
    "METHOD_IDS",
    "sim_interval",
    "sim_ci",
    "run_coverage",
    "run_moe",
    "sweep_param",
    "bias_curve",
]

ESTIMATOR_IDS = tuple(e.value for e in EstimatorId)
METHOD_IDS = ESTIMATOR_IDS + ("public", "vadhan", "ora")


@dataclass(frozen=True)
class SimConfig:
    """Level, synthetic replication count, provenance seed, and clamping."""

    alpha: float = 0.05
    nsim: int = 1000
    seed: int = 0
    clamp_synthetic: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError("alpha must lie in (0, 1)")
        if self.nsim < 1:
            raise InvalidParameterError("nsim must be at least 1")


def _synthetic_centers(estimator, center: float, spread: float, n: int,
                       bounds: DataBounds, nsim: int, clamp_synthetic: bool,
                       rng: RandomSource) -> np.ndarray:
    centers = np.empty(nsim)
    for i in range(nsim):
        values = rng.normal(center, spread, n)
        if clamp_synthetic:
            np.clip(values, bounds.xmin, bounds.xmax, out=values)
        centers[i] = estimator(Database(values), rng).center
    return centers


def sim_interval(estimator, db: Database, bounds: DataBounds,
                 config: SimConfig, rng: RandomSource,
                 ledger: PrivacyLedger | None = None):
    """Run the resampling scheme once; return (interval, real-data estimate).

    ``estimator`` is a callable (db, rng, ledger=None) -> CenterSpread, e.g.
    from ``get_estimator``. The ledger is passed only to the real-data call:
    the synthetic reruns see no private data.
    """
    estimate = estimator(db, rng, ledger)
    centers = _synthetic_centers(
        estimator, estimate.center, estimate.spread, db.n, bounds,
        config.nsim, config.clamp_synthetic, rng)
    lo_q = empirical_quantile(centers, config.alpha / 2.0)
    hi_q = empirical_quantile(centers, 1.0 - config.alpha / 2.0)
    moe = 0.5 * (hi_q - lo_q)
    method = getattr(estimator, "method", "custom")
    interval = ConfidenceInterval(
        estimate.center - moe, estimate.center + moe, moe, config.alpha,
        method, config.seed, config.nsim, floored=estimate.floored)
    return interval, estimate


def sim_ci(estimator, db: Database, bounds: DataBounds, config: SimConfig,
           rng: RandomSource,
           ledger: PrivacyLedger | None = None) -> ConfidenceInterval:
    """Resampling interval around a private estimator's center estimate."""
    interval, _ = sim_interval(estimator, db, bounds, config, rng, ledger)
    return interval


@dataclass(frozen=True)
class ExperimentGrid:
    """Cartesian experiment layout; every list must be nonempty."""

    methods: tuple[str, ...]
    n_values: tuple[int, ...]
    epsilons: tuple[float, ...]
    bounds: tuple[DataBounds, ...]
    alphas: tuple[float, ...]
    trials: int
    mu: float = 0.0
    sigma: float = 1.0
    nsim: int = 1000
    clamp_synthetic: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "bounds", tuple(self.bounds))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not (self.methods and self.n_values and self.epsilons
                and self.bounds and self.alphas):
            raise InvalidParameterError("experiment grid has an empty axis")
        for m in self.methods:
            if m not in METHOD_IDS:
                raise InvalidParameterError(f"unknown method '{m}'")
        if self.trials < 1:
            raise InvalidParameterError("trials must be at least 1")
        if self.nsim < 1:
            raise InvalidParameterError("nsim must be at least 1")
        if not self.sigma > 0.0:
            raise InvalidParameterError("sigma must be positive")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise InvalidParameterError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class CoverageRecord:
    method: str
    n: int
    epsilon: float
    xmin: float
    xmax: float
    alpha: float
    coverage: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class MoeRecord:
    method: str
    n: int
    epsilon: float
    xmin: float
    xmax: float
    alpha: float
    mean_moe: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class SweepRecord:
    method: str
    param: str
    value: float
    n: int
    epsilon: float
    mean_moe: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class BiasRecord:
    n: int
    epsilon: float
    b: float
    bias: float
    stderr: float
    trials: int


def _make_runner(method: str, epsilon: float, bounds: DataBounds,
                 alphas: tuple[float, ...], nsim: int, clamp_synthetic: bool):
    """Build fn(db, rng) -> {alpha: (lower, upper, moe)} for one grid cell.

    Estimator-backed methods share one synthetic-center vector across all
    alphas; the direct interval constructions are evaluated per alpha.
    """
    if method == "public":
        def run(db, rng):
            xbar = sample_mean(db)
            sd = math.sqrt(sample_variance(db))
            out = {}
            for a in alphas:
                moe = sd / math.sqrt(db.n) * qt(1.0 - a / 2.0, db.n - 1)
                out[a] = (xbar - moe, xbar + moe, moe)
            return out
        return run

    if method == "vadhan":
        def run(db, rng):
            out = {}
            for a in alphas:
                params = VadhanParams.from_total(a, epsilon, bounds)
                ci = vadhan_ci(db, params, rng)
                out[a] = (ci.lower, ci.upper, ci.moe)
            return out
        return run

    if method == "ora":
        def estimator(db, rng, ledger=None):
            return ora_estimate(db, epsilon, bounds, OraParams(), rng, ledger)
    else:
        estimator = get_estimator(method, epsilon, bounds)

    def run(db, rng):
        estimate = estimator(db, rng)
        centers = _synthetic_centers(
            estimator, estimate.center, estimate.spread, db.n, bounds,
            nsim, clamp_synthetic, rng)
        out = {}
        for a in alphas:
            moe = 0.5 * (empirical_quantile(centers, 1.0 - a / 2.0)
                         - empirical_quantile(centers, a / 2.0))
            out[a] = (estimate.center - moe, estimate.center + moe, moe)
        return out
    return run


def _run_cell(args: tuple) -> list[tuple]:
    """Worker for one (method, n, epsilon, bounds) cell; returns per-alpha
    (coverage, coverage stderr, mean moe, moe stderr) tuples in alpha order."""
    (method, n, epsilon, xmin, xmax, alphas, trials, mu, sigma, nsim,
     clamp_synthetic, master_seed) = args
    bounds = DataBounds(xmin, xmax)
    runner = _make_runner(method, epsilon, bounds, alphas, nsim,
                          clamp_synthetic)
    hits = {a: 0 for a in alphas}
    moes = {a: np.empty(trials) for a in alphas}
    for t in range(trials):
        seed = derive_seed(master_seed, method, n, epsilon, xmin, xmax,
                           mu, sigma, t)
        rng = make_rng(seed)
        db = clamp(Database(rng.normal(mu, sigma, n)), bounds)
        result = runner(db, rng)
        for a in alphas:
            lo, hi, moe = result[a]
            hits[a] += lo <= mu <= hi
            moes[a][t] = moe
    rows = []
    for a in alphas:
        p = hits[a] / trials
        cover_se = math.sqrt(p * (1.0 - p) / trials)
        moe_se = (float(np.std(moes[a], ddof=1)) / math.sqrt(trials)
                  if trials > 1 else 0.0)
        rows.append((p, cover_se, float(np.mean(moes[a])), moe_se))
    return rows


def _cells(grid: ExperimentGrid, master_seed: int) -> list[tuple]:
    return [
        (method, n, epsilon, b.xmin, b.xmax, grid.alphas, grid.trials,
         grid.mu, grid.sigma, grid.nsim, grid.clamp_synthetic, master_seed)
        for method, n, epsilon, b in itertools.product(
            grid.methods, grid.n_values, grid.epsilons, grid.bounds)
    ]


def _map_jobs(worker, args: list[tuple], jobs: int) -> list:
    if jobs < 1:
        raise InvalidParameterError("jobs must be at least 1")
    if jobs == 1 or len(args) <= 1:
        return [worker(a) for a in args]
    import multiprocessing

    with multiprocessing.Pool(min(jobs, len(args))) as pool:
        return pool.map(worker, args)


def run_coverage(grid: ExperimentGrid, master_seed: int,
                 jobs: int = 1) -> list[CoverageRecord]:
    """Empirical coverage of the true mean over the grid, trial streams
    derived per cell and trial index so row order never depends on jobs."""
    cell_args = _cells(grid, master_seed)
    results = _map_jobs(_run_cell, cell_args, jobs)
    records = []
    for args, rows in zip(cell_args, results):
        method, n, epsilon, xmin, xmax = args[:5]
        for a, (p, cover_se, _, _) in zip(grid.alphas, rows):
            records.append(CoverageRecord(method, n, epsilon, xmin, xmax, a,
                                          p, cover_se, grid.trials))
    return records


def run_moe(grid: ExperimentGrid, master_seed: int,
            jobs: int = 1) -> list[MoeRecord]:
    """Mean margin of error over the grid; same trial streams as coverage."""
    cell_args = _cells(grid, master_seed)
    results = _map_jobs(_run_cell, cell_args, jobs)
    records = []
    for args, rows in zip(cell_args, results):
        method, n, epsilon, xmin, xmax = args[:5]
        for a, (_, _, mean_moe, moe_se) in zip(grid.alphas, rows):
            records.append(MoeRecord(method, n, epsilon, xmin, xmax, a,
                                     mean_moe, moe_se, grid.trials))
    return records


_SWEEPABLE = {
    "rho": ("noisyvar", "noisymad", "cenq", "mod"),
    "b": ("cenq", "symq"),
}


def _check_sweep_value(method: str, param: str, value: float) -> None:
    if param == "rho" and not 0.0 < value < 1.0:
        raise InvalidParameterError("rho values must lie in (0, 1)")
    if param == "b":
        if method == "cenq" and not 0.5 < value < 1.0:
            raise InvalidParameterError("cenq sweeps need b in (0.5, 1)")
        if method == "symq" and not 0.0 < value < 0.5:
            raise InvalidParameterError("symq sweeps need b in (0, 0.5)")


def _run_sweep_point(args: tuple) -> tuple[float, float]:
    (method, param, value, n, epsilon, xmin, xmax, alpha, trials, mu, sigma,
     nsim, clamp_synthetic, master_seed) = args
    bounds = DataBounds(xmin, xmax)
    estimator = get_estimator(method, epsilon, bounds, **{param: value})
    moes = np.empty(trials)
    for t in range(trials):
        # same stream as the grid runner's cell: a one-point sweep reproduces
        # run_moe exactly, and sweep points share data for tighter comparisons
        seed = derive_seed(master_seed, method, n, epsilon, xmin, xmax,
                           mu, sigma, t)
        rng = make_rng(seed)
        db = clamp(Database(rng.normal(mu, sigma, n)), bounds)
        estimate = estimator(db, rng)
        centers = _synthetic_centers(
            estimator, estimate.center, estimate.spread, n, bounds, nsim,
            clamp_synthetic, rng)
        moes[t] = 0.5 * (empirical_quantile(centers, 1.0 - alpha / 2.0)
                         - empirical_quantile(centers, alpha / 2.0))
    stderr = (float(np.std(moes, ddof=1)) / math.sqrt(trials)
              if trials > 1 else 0.0)
    return float(np.mean(moes)), stderr


def sweep_param(method: str, param: str, values, n: int, epsilon: float,
                bounds: DataBounds, trials: int, master_seed: int,
                alpha: float = 0.05, mu: float = 0.0, sigma: float = 1.0,
                nsim: int = 1000, clamp_synthetic: bool = True,
                jobs: int = 1) -> list[SweepRecord]:
    """Mean interval width of one method as a single tuning knob varies."""
    values = [float(v) for v in values]
    if not values:
        raise InvalidParameterError("sweep needs at least one value")
    if param not in _SWEEPABLE:
        raise InvalidParameterError(f"unknown sweep parameter '{param}'")
    if method not in _SWEEPABLE[param]:
        raise InvalidParameterError(
            f"parameter '{param}' does not apply to method '{method}'")
    if trials < 1:
        raise InvalidParameterError("trials must be at least 1")
    for v in values:
        _check_sweep_value(method, param, v)
    point_args = [
        (method, param, v, n, epsilon, bounds.xmin, bounds.xmax, alpha,
         trials, mu, sigma, nsim, clamp_synthetic, master_seed)
        for v in values
    ]
    results = _map_jobs(_run_sweep_point, point_args, jobs)
    return [
        SweepRecord(method, param, v, n, epsilon, mean_moe, stderr, trials)
        for v, (mean_moe, stderr) in zip(values, results)
    ]


def bias_curve(n: int, epsilon: float, b: float, bounds: DataBounds,
               trials: int, master_seed: int, mu: float = 0.0,
               sigma: float = 1.0) -> BiasRecord:
    """Exact-law bias of the quantile sampler at location b.

    For each trial database the inner expectation is computed in closed form
    from the bin law; only the data draw is Monte Carlo. The reference point
    is the population b-quantile mu + sigma * qz(b).
    """
    if trials < 1:
        raise InvalidParameterError("trials must be at least 1")
    if not 0.0 < b < 1.0:
        raise InvalidParameterError("b must lie in (0, 1)")
    rank = quantile_rank(b, n)
    expected = np.empty(trials)
    for t in range(trials):
        seed = derive_seed(master_seed, "bias", n, epsilon, b, bounds.xmin,
                           bounds.xmax, mu, sigma, t)
        rng = make_rng(seed)
        db = clamp(Database(rng.normal(mu, sigma, n)), bounds)
        expected[t] = expq_expected_value(db, rank, epsilon, bounds)
    bias = float(np.mean(expected)) - (mu + sigma * qz(b))
    stderr = (float(np.std(expected, ddof=1)) / math.sqrt(trials)
              if trials > 1 else 0.0)
    return BiasRecord(n, epsilon, b, bias, stderr, trials)
