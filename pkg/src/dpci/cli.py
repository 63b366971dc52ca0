"""Command line front end: single intervals, grid experiments, sweeps, bias.

Every command prints its result to stdout (or --output) with floats
serialized to 17 significant digits, and writes a JSON run manifest to
stderr (or --manifest) that echoes the arguments needed to reproduce the
output byte for byte. Exit codes: 0 success, 2 malformed input, 3 invalid
parameters or empty grids, 4 database too small.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import OraParams, VadhanParams, ora_estimate, vadhan_ci
from .core import (
    DataBounds,
    Database,
    DataSizeError,
    InvalidParameterError,
    clamp,
    public_ci,
    sample_mean,
    sample_variance,
)
from .estimators import get_estimator
from .mechanisms import make_rng
from .simulate import (
    ExperimentGrid,
    METHOD_IDS,
    SimConfig,
    bias_curve,
    run_coverage,
    run_moe,
    sim_interval,
    sweep_param,
)

__all__ = ["main"]


class _InputError(ValueError):
    """Malformed data file or stream; message carries the line number."""


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _json_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return _fmt(value)
    return json.dumps(value)


def _json_object(pairs) -> str:
    body = ", ".join(f'"{key}": {_json_scalar(val)}' for key, val in pairs)
    return "{" + body + "}\n"


def _read_values(path: str, header: bool) -> tuple[list[float], str]:
    """One value per line; returns the values and the input's SHA-256."""
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise _InputError(f"cannot read input: {exc}") from exc
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    values = []
    lines = text.splitlines()
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if lineno == 1 and header:
            continue
        if not stripped:
            if lineno == len(lines):
                continue
            raise _InputError(f"line {lineno}: blank line")
        try:
            value = float(stripped)
        except ValueError:
            raise _InputError(
                f"line {lineno}: could not parse {stripped!r} as a number"
            ) from None
        if not math.isfinite(value):
            raise _InputError(f"line {lineno}: non-finite value {stripped!r}")
        values.append(value)
    return values, digest


def _parse_floats(text: str, what: str) -> list[float]:
    items = [part for part in text.split(",") if part.strip()]
    if not items:
        raise InvalidParameterError(f"{what} grid is empty")
    try:
        return [float(part) for part in items]
    except ValueError as exc:
        raise InvalidParameterError(f"bad {what} grid: {exc}") from None


def _parse_ints(text: str, what: str) -> list[int]:
    return [int(v) for v in _parse_floats(text, what)]


def _parse_bounds_list(text: str) -> list[DataBounds]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 2:
            raise InvalidParameterError(
                f"bounds must look like xmin:xmax, got {part!r}")
        try:
            out.append(DataBounds(float(pieces[0]), float(pieces[1])))
        except ValueError as exc:
            raise InvalidParameterError(f"bad bounds {part!r}: {exc}") from None
    if not out:
        raise InvalidParameterError("bounds grid is empty")
    return out


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_manifest(manifest: dict, path: str | None) -> None:
    line = json.dumps(manifest) + "\n"
    if path:
        Path(path).write_text(line)
    else:
        sys.stderr.write(line)


def _manifest(command: str, argv: list[str], started: float,
              parameters: dict, rows: int,
              input_sha256: str | None = None) -> dict:
    return {
        "command": command,
        "argv": argv,
        "version": __version__,
        "parameters": parameters,
        "rows": rows,
        "input_sha256": input_sha256,
        "duration_seconds": round(time.perf_counter() - started, 6),
    }


def _cmd_ci(args, argv: list[str], started: float) -> int:
    values, digest = _read_values(args.input, args.header)
    raw = Database(values)
    bounds = DataBounds(args.xmin, args.xmax)
    clamped_count = int(np.sum((raw.values < bounds.xmin)
                               | (raw.values > bounds.xmax)))
    db = clamp(raw, bounds)
    method = args.method
    rng = make_rng(args.seed)

    if method != "public" and args.epsilon is None:
        raise InvalidParameterError(f"method '{method}' requires --epsilon")

    if method == "public":
        interval = public_ci(db, args.alpha)
        center = sample_mean(db)
        spread = math.sqrt(sample_variance(db))
        epsilon_out, nsim_out = None, 0
    elif method == "vadhan":
        params = VadhanParams.from_total(args.alpha, args.epsilon, bounds,
                                         sd_max=args.sd_max)
        interval = vadhan_ci(db, params, rng)
        center = 0.5 * (interval.lower + interval.upper)
        spread = None
        epsilon_out, nsim_out = args.epsilon, 0
    else:
        if method == "ora":
            ora_params = OraParams(subsets=args.subsets, sd_max=args.sd_max)

            def estimator(est_db, est_rng, ledger=None):
                return ora_estimate(est_db, args.epsilon, bounds, ora_params,
                                    est_rng, ledger)
        else:
            estimator = get_estimator(method, args.epsilon, bounds,
                                      rho=args.rho, b=args.b)
        config = SimConfig(alpha=args.alpha, nsim=args.nsim, seed=args.seed,
                           clamp_synthetic=not args.no_clamp_synthetic)
        interval, estimate = sim_interval(estimator, db, bounds, config, rng)
        center, spread = estimate.center, estimate.spread
        epsilon_out, nsim_out = args.epsilon, args.nsim

    _emit(_json_object([
        ("lower", interval.lower),
        ("upper", interval.upper),
        ("moe", interval.moe),
        ("center", center),
        ("spread", spread),
        ("method", method),
        ("alpha", args.alpha),
        ("epsilon", epsilon_out),
        ("seed", args.seed),
        ("nsim", nsim_out),
        ("n", db.n),
        ("clamped_count", clamped_count),
    ]), args.output)
    _write_manifest(_manifest("ci", argv, started, {
        "method": method, "alpha": args.alpha, "epsilon": epsilon_out,
        "xmin": bounds.xmin, "xmax": bounds.xmax, "seed": args.seed,
        "nsim": nsim_out, "n": db.n,
    }, rows=1, input_sha256=digest), args.manifest)
    return 0


def _experiment_rows(mode: str, records) -> str:
    lines = ["method,n,epsilon,xmin,xmax,alpha,metric,value,stderr,trials"]
    for r in records:
        value = r.coverage if mode == "coverage" else r.mean_moe
        lines.append(",".join([
            r.method, str(r.n), _fmt(r.epsilon), _fmt(r.xmin), _fmt(r.xmax),
            _fmt(r.alpha), mode, _fmt(value), _fmt(r.stderr), str(r.trials),
        ]))
    return "\n".join(lines) + "\n"


def _cmd_experiment(args, argv: list[str], started: float) -> int:
    grid = ExperimentGrid(
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        n_values=tuple(_parse_ints(args.n_grid, "n")),
        epsilons=tuple(_parse_floats(args.eps_grid, "epsilon")),
        bounds=tuple(_parse_bounds_list(args.bounds)),
        alphas=tuple(_parse_floats(args.alpha_grid, "alpha")),
        trials=args.trials,
        mu=args.mu,
        sigma=args.sigma,
        nsim=args.nsim,
        clamp_synthetic=not args.no_clamp_synthetic,
    )
    if args.mode == "coverage":
        records = run_coverage(grid, args.seed, jobs=args.jobs)
    else:
        records = run_moe(grid, args.seed, jobs=args.jobs)
    _emit(_experiment_rows(args.mode, records), args.output)
    _write_manifest(_manifest("experiment", argv, started, {
        "mode": args.mode, "methods": list(grid.methods),
        "n": list(grid.n_values), "epsilon": list(grid.epsilons),
        "bounds": [[b.xmin, b.xmax] for b in grid.bounds],
        "alpha": list(grid.alphas), "trials": grid.trials, "mu": grid.mu,
        "sigma": grid.sigma, "nsim": grid.nsim, "seed": args.seed,
        "jobs": args.jobs,
    }, rows=len(records)), args.manifest)
    return 0


def _cmd_sweep(args, argv: list[str], started: float) -> int:
    bounds_list = _parse_bounds_list(args.bounds)
    if len(bounds_list) != 1:
        raise InvalidParameterError("sweep takes a single xmin:xmax pair")
    records = sweep_param(
        args.method, args.param, _parse_floats(args.values, "value"),
        args.n, args.epsilon, bounds_list[0], args.trials, args.seed,
        alpha=args.alpha, mu=args.mu, sigma=args.sigma, nsim=args.nsim,
        clamp_synthetic=not args.no_clamp_synthetic, jobs=args.jobs)
    lines = ["method,param,value,n,epsilon,mean_moe,stderr"]
    for r in records:
        lines.append(",".join([
            r.method, r.param, _fmt(r.value), str(r.n), _fmt(r.epsilon),
            _fmt(r.mean_moe), _fmt(r.stderr),
        ]))
    _emit("\n".join(lines) + "\n", args.output)
    _write_manifest(_manifest("sweep", argv, started, {
        "method": args.method, "param": args.param,
        "values": [r.value for r in records], "n": args.n,
        "epsilon": args.epsilon,
        "bounds": [bounds_list[0].xmin, bounds_list[0].xmax],
        "alpha": args.alpha, "trials": args.trials, "mu": args.mu,
        "sigma": args.sigma, "nsim": args.nsim, "seed": args.seed,
        "jobs": args.jobs,
    }, rows=len(records)), args.manifest)
    return 0


def _cmd_bias(args, argv: list[str], started: float) -> int:
    bounds_list = _parse_bounds_list(args.bounds)
    if len(bounds_list) != 1:
        raise InvalidParameterError("bias takes a single xmin:xmax pair")
    bounds = bounds_list[0]
    n_grid = _parse_ints(args.n_grid, "n")
    eps_grid = _parse_floats(args.eps_grid, "epsilon")
    b_grid = _parse_floats(args.b_grid, "b")
    lines = ["n,epsilon,b,bias,stderr,trials"]
    rows = 0
    for n in n_grid:
        for epsilon in eps_grid:
            for b in b_grid:
                record = bias_curve(n, epsilon, b, bounds, args.trials,
                                    args.seed, mu=args.mu, sigma=args.sigma)
                lines.append(",".join([
                    str(record.n), _fmt(record.epsilon), _fmt(record.b),
                    _fmt(record.bias), _fmt(record.stderr),
                    str(record.trials),
                ]))
                rows += 1
    _emit("\n".join(lines) + "\n", args.output)
    _write_manifest(_manifest("bias", argv, started, {
        "n": n_grid, "epsilon": eps_grid, "b": b_grid,
        "bounds": [bounds.xmin, bounds.xmax], "trials": args.trials,
        "mu": args.mu, "sigma": args.sigma, "seed": args.seed,
    }, rows=rows), args.manifest)
    return 0


def _allow_negative_ranges(parser: argparse.ArgumentParser) -> None:
    # let values like -6:6 pass as arguments rather than option names
    parser._negative_number_matcher = re.compile(r"^-[\d.]")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed for all randomness")
    parser.add_argument("--output", default=None,
                        help="write the result here instead of stdout")
    parser.add_argument("--manifest", default=None,
                        help="write the run manifest here instead of stderr")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpci",
        description="Differentially private confidence intervals for the "
                    "mean of range-bounded data.")
    parser.add_argument("--version", action="version", version=__version__)
    _allow_negative_ranges(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    ci = sub.add_parser("ci", help="one interval from a data file")
    ci.add_argument("--input", required=True,
                    help="data file, one value per line ('-' for stdin)")
    ci.add_argument("--header", action="store_true",
                    help="skip the first input line")
    ci.add_argument("--method", required=True, choices=METHOD_IDS)
    ci.add_argument("--epsilon", type=float, default=None)
    ci.add_argument("--xmin", type=float, required=True)
    ci.add_argument("--xmax", type=float, required=True)
    ci.add_argument("--alpha", type=float, default=0.05)
    ci.add_argument("--nsim", type=int, default=1000,
                    help="synthetic replications behind the interval")
    ci.add_argument("--rho", type=float, default=None,
                    help="budget fraction for the center query")
    ci.add_argument("--b", type=float, default=None,
                    help="quantile location for cenq/symq")
    ci.add_argument("--sd-max", type=float, default=None,
                    help="a priori sd bound for vadhan/ora")
    ci.add_argument("--subsets", type=int, default=None,
                    help="subset count for ora")
    ci.add_argument("--no-clamp-synthetic", action="store_true",
                    help="leave synthetic draws unclamped")
    _add_common(ci)

    exp = sub.add_parser("experiment", help="coverage or width over a grid")
    exp.add_argument("--mode", required=True, choices=("coverage", "moe"))
    exp.add_argument("--methods", required=True,
                     help="comma-separated method ids")
    exp.add_argument("--n-grid", required=True)
    exp.add_argument("--eps-grid", required=True)
    exp.add_argument("--bounds", required=True,
                     help="comma-separated xmin:xmax pairs")
    exp.add_argument("--alpha-grid", default="0.05")
    exp.add_argument("--trials", type=int, default=100)
    exp.add_argument("--mu", type=float, default=0.0)
    exp.add_argument("--sigma", type=float, default=1.0)
    exp.add_argument("--nsim", type=int, default=1000)
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--no-clamp-synthetic", action="store_true")
    _add_common(exp)

    sweep = sub.add_parser("sweep", help="interval width as one knob varies")
    sweep.add_argument("--method", required=True,
                       choices=("noisyvar", "noisymad", "cenq", "symq", "mod"))
    sweep.add_argument("--param", required=True, choices=("rho", "b"))
    sweep.add_argument("--values", required=True,
                       help="comma-separated parameter values")
    sweep.add_argument("--n", type=int, required=True)
    sweep.add_argument("--epsilon", type=float, required=True)
    sweep.add_argument("--bounds", required=True, help="xmin:xmax")
    sweep.add_argument("--alpha", type=float, default=0.05)
    sweep.add_argument("--trials", type=int, default=200)
    sweep.add_argument("--mu", type=float, default=0.0)
    sweep.add_argument("--sigma", type=float, default=1.0)
    sweep.add_argument("--nsim", type=int, default=1000)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--no-clamp-synthetic", action="store_true")
    _add_common(sweep)

    bias = sub.add_parser("bias", help="exact-law quantile bias over a grid")
    bias.add_argument("--n-grid", required=True)
    bias.add_argument("--eps-grid", required=True)
    bias.add_argument("--b-grid", required=True)
    bias.add_argument("--bounds", required=True, help="xmin:xmax")
    bias.add_argument("--trials", type=int, default=200)
    bias.add_argument("--mu", type=float, default=0.0)
    bias.add_argument("--sigma", type=float, default=1.0)
    _add_common(bias)

    for command in (ci, exp, sweep, bias):
        _allow_negative_ranges(command)

    return parser


_HANDLERS = {
    "ci": _cmd_ci,
    "experiment": _cmd_experiment,
    "sweep": _cmd_sweep,
    "bias": _cmd_bias,
}


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    started = time.perf_counter()
    try:
        return _HANDLERS[args.command](args, list(argv), started)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
