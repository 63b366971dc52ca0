"""Acceptance gate: one printed PASS/FAIL line per criterion.

Each test exercises a released behaviour end to end at its stated tolerance
and runtime budget, prints a single summary line to the real stdout (visible
under plain ``pytest`` runs), and then asserts. The statistical criteria use
fixed master seeds, so a pass is reproducible bit for bit.
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from dpci import (
    DataBounds,
    Database,
    ExperimentGrid,
    build_bins,
    expq,
    expq_expected_value,
    mad_sum_sensitivity,
    make_rng,
    mean_abs_deviation,
    mean_sensitivity,
    median_rank,
    run_coverage,
    run_moe,
    sample_mean,
    sample_variance,
    sweep_param,
    variance_sensitivity,
)

UNIT = DataBounds(0.0, 1.0)


@pytest.fixture
def report(capfd):
    """One criterion summary line, printed past pytest's capture."""

    def _report(num: int, name: str, ok: bool, detail: str) -> None:
        status = "PASS" if ok else "FAIL"
        line = f"[criterion {num:02d}] {name}: {status} — {detail}"
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line

    return _report


def _density_matrix(values, m: int, epsilon: float, ys: np.ndarray) -> np.ndarray:
    """Exact sampler density at each y for one database and rank."""
    layout = build_bins(Database(list(values)), UNIT, m)
    probs = layout.probabilities(epsilon)
    idx = np.searchsorted(layout.edges, ys, side="right") - 1
    return probs[idx] / layout.widths[idx]


def test_01_dp_certificate(report):
    started = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 5)
    ys = (np.arange(50) + 0.5) / 50.0
    epsilons = (0.1, 1.0, 5.0)
    multisets = list(itertools.combinations_with_replacement(grid, 3))

    densities = {}
    positive = True
    for values in multisets:
        for m in (1, 2, 3):
            for eps in epsilons:
                dens = _density_matrix(values, m, eps, ys)
                positive = positive and dens.min() > 0.0
                densities[values, m, eps] = dens

    worst = 0.0
    checks = 0
    for values in multisets:
        for drop in range(3):
            kept = values[:drop] + values[drop + 1:]
            for replacement in grid:
                neighbor = tuple(sorted(kept + (replacement,)))
                for m in (1, 2, 3):
                    for eps in epsilons:
                        f = densities[values, m, eps]
                        g = densities[neighbor, m, eps]
                        ratio = max((f / g).max(), (g / f).max())
                        worst = max(worst, ratio / math.exp(eps))
                        checks += 1
    elapsed = time.perf_counter() - started
    ok = positive and worst <= 1.0 + 1e-9 and elapsed < 10.0
    report(1, "sampler density ratios stay within exp(epsilon)", ok,
            f"{checks} neighbor checks, worst ratio/e^eps = {worst:.12f}, "
            f"{elapsed:.1f}s (budget 10s)")


def test_02_sensitivity_bounds(report):
    started = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 5)
    worst = {"mean": 0.0, "variance": 0.0, "deviation-sum": 0.0}
    formulas_ok = True
    for n in (2, 3):
        bound_mean = mean_sensitivity(UNIT, n)
        bound_var = variance_sensitivity(UNIT, n)
        bound_mad = mad_sum_sensitivity(UNIT)
        formulas_ok = formulas_ok and (
            bound_mean == 1.0 / n and bound_var == 1.0 / n and bound_mad == 2.0)
        for base in itertools.product(grid, repeat=n):
            db = Database(list(base))
            stats = (sample_mean(db), sample_variance(db),
                     mean_abs_deviation(db) * n)
            for pos in range(n):
                for value in grid:
                    other = list(base)
                    other[pos] = value
                    odb = Database(other)
                    worst["mean"] = max(
                        worst["mean"],
                        abs(sample_mean(odb) - stats[0]) / bound_mean)
                    worst["variance"] = max(
                        worst["variance"],
                        abs(sample_variance(odb) - stats[1]) / bound_var)
                    worst["deviation-sum"] = max(
                        worst["deviation-sum"],
                        abs(mean_abs_deviation(odb) * n - stats[2]) / bound_mad)
    elapsed = time.perf_counter() - started
    ok = formulas_ok and max(worst.values()) <= 1.0 + 1e-11 and elapsed < 5.0
    report(2, "statistic swings stay within the advertised sensitivities",
            ok, "worst swing/bound: "
                f"mean {worst['mean']:.3f}, variance {worst['variance']:.3f}, "
                f"deviation sum {worst['deviation-sum']:.3f}; "
                f"{elapsed:.1f}s (budget 5s)")


def test_03_median_expectation_is_centered(report):
    started = time.perf_counter()
    rng = make_rng(42)
    worst = 0.0
    for k in range(100):
        half = int(rng.integers(0, 11))
        n = 2 * half + 1
        center = float(rng.uniform(-5.0, 5.0))
        span = float(rng.uniform(1.0, 4.0))
        offsets = np.sort(rng.uniform(0.0, 0.9 * span, half))
        values = np.concatenate([center - offsets, [center], center + offsets])
        bounds = DataBounds(center - span, center + span)
        epsilon = (0.1, 1.0, 10.0)[k % 3]
        expected = expq_expected_value(Database(values), median_rank(n),
                                       epsilon, bounds)
        worst = max(worst, abs(expected - center))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and elapsed < 5.0
    report(3, "median sampler expectation sits on the symmetric center", ok,
            f"100 random symmetric databases, worst |bias| = {worst:.2e}, "
            f"{elapsed:.1f}s (budget 5s)")


def test_04_sampler_law_chi_square(report):
    from scipy import stats

    started = time.perf_counter()
    instances = [
        ([1.0, 2.0, 3.0], DataBounds(0, 4), 2, 2.0),
        ([0.5], DataBounds(0, 1), 1, 1.0),
        ([2.0, 2.0, 2.0], DataBounds(0, 4), 2, 1.0),
        ([0.1, 0.4, 0.45, 0.8, 0.95], DataBounds(0, 1), 3, 1.5),
        ([1.0, 2.0, 3.0], DataBounds(0, 4), 1, 0.5),
    ]
    ndraws = 100_000
    pvalues = []
    structure_ok = True
    for k, (values, bounds, m, epsilon) in enumerate(instances):
        db = Database(values)
        layout = build_bins(db, bounds, m)
        probs = layout.probabilities(epsilon)
        draws = expq(db, m, epsilon, bounds, make_rng(1000 + k), size=ndraws)
        counts = np.bincount(
            np.searchsorted(layout.edges, draws, side="right") - 1,
            minlength=probs.size).astype(float)
        live = probs > 0.0
        structure_ok = structure_ok and counts[~live].sum() == 0.0
        structure_ok = structure_ok and (probs[live] * ndraws).min() >= 5.0
        result = stats.chisquare(counts[live], probs[live] * ndraws)
        pvalues.append(float(result.pvalue))
    elapsed = time.perf_counter() - started
    ok = structure_ok and min(pvalues) >= 1e-3 and elapsed < 10.0
    report(4, "sampled bin frequencies match the exact law", ok,
            f"chi-square p-values {['%.3f' % p for p in pvalues]}, "
            f"{elapsed:.1f}s (budget 10s)")


def test_05_coverage_floors(report):
    started = time.perf_counter()
    trials = 2000
    alphas = (0.05, 0.1, 0.32)
    grid = ExperimentGrid(methods=("symq", "noisymad"), n_values=(1000,),
                          epsilons=(0.1,), bounds=(DataBounds(-6, 6),),
                          alphas=alphas, trials=trials, nsim=500)
    records = run_coverage(grid, 2026)
    cells = []
    ok = True
    for record in records:
        floor = (1.0 - record.alpha) - 3.0 * math.sqrt(
            record.alpha * (1.0 - record.alpha) / trials)
        ok = ok and record.coverage >= floor
        cells.append(f"{record.method}@{record.alpha:g}: "
                     f"{record.coverage:.3f}>={floor:.3f}")
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1200.0
    report(5, "resampling intervals keep nominal coverage", ok,
            "; ".join(cells) + f"; {elapsed:.0f}s (budget 1200s)")


@pytest.fixture(scope="module")
def crossover_moe():
    started = time.perf_counter()
    grid = ExperimentGrid(methods=("symq", "noisymad"), n_values=(200, 2000),
                          epsilons=(0.1,), bounds=(DataBounds(-6, 6),
                                                   DataBounds(-32, 32)),
                          alphas=(0.05,), trials=500, nsim=500)
    records = run_moe(grid, 77)
    table = {(r.method, r.n, r.xmin): r.mean_moe for r in records}
    table["elapsed"] = time.perf_counter() - started
    return table


def test_06_sample_size_crossover(crossover_moe, report):
    large_q = crossover_moe[("symq", 2000, -6.0)]
    large_m = crossover_moe[("noisymad", 2000, -6.0)]
    small_q = crossover_moe[("symq", 200, -6.0)]
    small_m = crossover_moe[("noisymad", 200, -6.0)]
    elapsed = crossover_moe["elapsed"]
    ok = large_q < large_m and small_m < small_q and elapsed < 600.0
    report(6, "quantile interval wins at large n, noise-calibrated at small",
            ok, f"n=2000: {large_q:.3f} < {large_m:.3f}; "
                f"n=200: {small_m:.3f} < {small_q:.3f}; "
                f"{elapsed:.0f}s shared (budget 600s)")


def test_07_range_insensitivity(crossover_moe, report):
    q_ratio = (crossover_moe[("symq", 2000, -32.0)]
               / crossover_moe[("symq", 2000, -6.0)])
    m_ratio = (crossover_moe[("noisymad", 2000, -32.0)]
               / crossover_moe[("noisymad", 2000, -6.0)])
    elapsed = crossover_moe["elapsed"]
    ok = abs(q_ratio - 1.0) < 0.10 and m_ratio > 2.0 and elapsed < 600.0
    report(7, "widening the declared range leaves quantile widths alone", ok,
            f"symq ratio {q_ratio:.3f} within 10% of 1; "
            f"noisymad ratio {m_ratio:.2f} > 2; "
            f"{elapsed:.0f}s shared (budget 600s)")


def test_08_headline_width_ratios(report):
    started = time.perf_counter()
    grid = ExperimentGrid(methods=("public", "symq", "ora"), n_values=(2782,),
                          epsilons=(0.1,), bounds=(DataBounds(-32, 32),),
                          alphas=(0.05,), trials=300, nsim=500)
    records = run_moe(grid, 8)
    moe = {r.method: r.mean_moe for r in records}
    symq_ratio = moe["symq"] / moe["public"]
    ora_ratio = moe["ora"] / moe["public"]
    elapsed = time.perf_counter() - started
    ok = (1.9 <= symq_ratio <= 3.1 and ora_ratio >= 3.0 * symq_ratio
          and elapsed < 900.0)
    report(8, "cost of privacy lands in the expected band", ok,
            f"symq/public = {symq_ratio:.2f} in [1.9, 3.1]; "
            f"ora/public = {ora_ratio:.2f} >= 3x symq; "
            f"{elapsed:.0f}s (budget 900s)")


def test_09_sweep_minima(report):
    started = time.perf_counter()
    bounds = DataBounds(-6, 6)
    rho_grid = [round(0.1 * k, 1) for k in range(1, 10)]
    b_grid = [round(0.05 * k, 2) for k in range(1, 10)]
    targets = [
        ("noisyvar", "rho", rho_grid, 0.7, 0.9),
        ("noisymad", "rho", rho_grid, 0.7, 0.9),
        ("mod", "rho", rho_grid, 0.4, 0.6),
        ("symq", "b", b_grid, 0.25, 0.5),
    ]
    summary = []
    ok = True
    for method, param, values, lo, hi in targets:
        records = sweep_param(method, param, values, 1000, 0.1, bounds,
                              trials=200, master_seed=9, nsim=500)
        best = min(records, key=lambda r: r.mean_moe)
        ok = ok and lo <= best.value <= hi
        summary.append(f"{method} argmin {param}={best.value:g} "
                       f"in [{lo}, {hi}]")
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1200.0
    report(9, "tuning-curve minima sit where the width trade-off says", ok,
            "; ".join(summary) + f"; {elapsed:.0f}s (budget 1200s)")


def test_10_cli_determinism(tmp_path, report):
    started = time.perf_counter()
    data = tmp_path / "data.txt"
    data.write_text("\n".join(str(0.25 * k - 1.5) for k in range(14)) + "\n")
    commands = [
        ["ci", "--input", str(data), "--method", "symq", "--epsilon", "1.0",
         "--xmin", "-6", "--xmax", "6", "--nsim", "30", "--seed", "5"],
        ["experiment", "--mode", "coverage", "--methods", "public,noisyvar",
         "--n-grid", "30", "--eps-grid", "1.0", "--bounds", "-6:6",
         "--trials", "3", "--nsim", "10", "--seed", "5"],
        ["sweep", "--method", "noisyvar", "--param", "rho",
         "--values", "0.5,0.8", "--n", "30", "--epsilon", "1.0",
         "--bounds", "-6:6", "--trials", "3", "--nsim", "10", "--seed", "5"],
        ["bias", "--n-grid", "11", "--eps-grid", "0.5", "--b-grid", "0.5",
         "--bounds", "-6:6", "--trials", "5", "--seed", "5"],
    ]
    ok = True
    for argv in commands:
        full = [sys.executable, "-m", "dpci", *argv]
        first = subprocess.run(full, capture_output=True)
        second = subprocess.run(full, capture_output=True)
        ok = (ok and first.returncode == 0 and second.returncode == 0
              and first.stdout == second.stdout and len(first.stdout) > 0)
    elapsed = time.perf_counter() - started
    report(10, "every command reproduces its bytes under a fixed seed", ok,
            f"4 subcommands run twice; {elapsed:.1f}s")
