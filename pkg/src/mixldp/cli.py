"""
Command-line front end.

Usage::

    mixldp rate-curve CONFIG [--r-min X] [--r-max X] [--points N] [--out PATH] [--format csv|json]
    mixldp oracle-check CONFIG [--m M] [--points N] [--negative-control]
    mixldp simulate CONFIG [--delta D] [--n-grid 50,100] [--replicas R] [--seed S] [--exact-binomial]
    mixldp curvature CONFIG
    mixldp closed-form-check CONFIG [--points N]

Tables go to ``--out`` (default stdout); a JSON diagnostics object, including
an echo of the resolved configuration, goes to stderr. The worker count for
parallel sections is read from ``MIXLDP_WORKERS``.

Exit codes: 0 ok, 2 configuration error, 3 unsupported risk measure/law
combination, 4 verification failure, 5 degenerate simulation data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from .config import ConfigError, ProblemConfig, load_config
from .errors import (
    ConditionUnsupported,
    DegenerateData,
    DegenerateProblem,
    DivergentMoment,
    UnsupportedCombination,
    UnsupportedLaw,
)
from .oracle import MAX_COMPONENTS, GridSpec, grid_min_condition, grid_min_general
from .ratefn import (
    RateProblem,
    curvature,
    rate,
    rate_closed_s2,
    rate_closed_s3_affine,
    rate_curve,
    support_bounds,
)
from .riskmeasures import SUPPORTED_LINEAR, check_condition, law_risk, psi_profile
from .sim import SimulationPlan, decay_slope

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNSUPPORTED = 3
EXIT_VERIFY = 4
EXIT_DEGENERATE = 5

CLOSED_FORM_TOL = 1e-8
WORKERS_ENV = "MIXLDP_WORKERS"


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(float(x), ".12g")
    return str(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return float(format(x, ".12g"))
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    return x


def _workers() -> int | None:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


def _option(args: argparse.Namespace, cfg: ProblemConfig, name: str, default: Any) -> Any:
    value = getattr(args, name, None)
    if value is not None and value is not False:
        cfg.options[name] = value
        return value
    return cfg.options.get(name, default)


def _emit(rows: list[dict], columns: Sequence[str], args: argparse.Namespace, extra: dict | None = None) -> None:
    if args.format == "json":
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        text = json.dumps(_jsonable(payload), indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _diagnostics(cfg: ProblemConfig, **fields: Any) -> None:
    payload = {"config": cfg.to_dict(), **fields}
    sys.stderr.write(json.dumps(_jsonable(payload)) + "\n")


def _problem(cfg: ProblemConfig) -> RateProblem:
    return RateProblem(cfg.risk_measure, cfg.components, cfg.weights)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_rate_curve(args: argparse.Namespace, cfg: ProblemConfig) -> int:
    problem = _problem(cfg)
    b = support_bounds(problem)
    width = (b.upper - b.lower) or 1.0
    r_min = float(_option(args, cfg, "r_min", b.lower - 0.1 * width))
    r_max = float(_option(args, cfg, "r_max", b.upper + 0.1 * width))
    points = int(_option(args, cfg, "points", 25))
    if points < 2 or not r_max > r_min:
        raise ConfigError("need points >= 2 and r_max > r_min")
    rs = np.linspace(r_min, r_max, points)
    results = rate_curve(problem, rs, workers=_workers())
    s = problem.full_size
    columns = ["r", "H", "branch", "lambda_star"] + [f"p{j + 1}" for j in range(s)]
    rows = []
    for r, res in zip(rs, results):
        row = {"r": float(r), "H": res.value, "branch": res.branch.value, "lambda_star": res.lambda_star}
        if res.minimizer is not None:
            row.update({f"p{j + 1}": float(res.minimizer[j]) for j in range(s)})
        rows.append(row)
    try:
        curv = curvature(problem)
    except (DegenerateProblem, UnsupportedLaw, ConditionUnsupported, ValueError):
        curv = None
    _emit(rows, columns, args)
    _diagnostics(cfg, r0=b.r0, lower=b.lower, upper=b.upper, curvature=curv)
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace, cfg: ProblemConfig) -> int:
    problem = _problem(cfg)
    if problem.full_size > MAX_COMPONENTS:
        sys.stderr.write(f"error: the grid oracle supports at most {MAX_COMPONENTS} components\n")
        return EXIT_UNSUPPORTED
    m = int(_option(args, cfg, "m", 400))
    points = int(_option(args, cfg, "points", 10))
    bound = float(cfg.options.get("resolution_bound", 4.0 / m))
    b = support_bounds(problem)
    grid = GridSpec(m)
    rs = [] if b.degenerate else list(np.linspace(b.lower, b.upper, points + 2)[1:-1])
    general = grid_min_general(problem.rho, problem.components, problem.pi, rs, grid) if rs else []
    rows, flags = [], 0
    for r, gen in zip(rs, general):
        h = rate(problem, r).value
        psis = psi_profile(problem.rho, problem.components, r).values.copy()
        if args.negative_control:
            psis[0] = -psis[0]
        cond = grid_min_condition(psis, problem.pi, grid)
        dev_c = abs(h - cond.min_entropy) if math.isfinite(cond.min_entropy) else math.inf
        dev_g = abs(h - gen.min_entropy) if math.isfinite(gen.min_entropy) else math.inf
        flagged = dev_c > bound or dev_g > 2.0 * bound
        flags += flagged
        rows.append({
            "r": float(r), "H": h,
            "oracle_condition": cond.min_entropy, "oracle_general": gen.min_entropy,
            "dev_condition": dev_c, "dev_general": dev_g, "flag": int(flagged),
        })
    columns = ["r", "H", "oracle_condition", "oracle_general", "dev_condition", "dev_general", "flag"]
    _emit(rows, columns, args)
    max_dev = max((max(r["dev_condition"], r["dev_general"]) for r in rows), default=0.0)
    _diagnostics(cfg, m=m, resolution_bound=bound, max_deviation=max_dev, flags=flags)
    return EXIT_VERIFY if flags else EXIT_OK


def cmd_simulate(args: argparse.Namespace, cfg: ProblemConfig) -> int:
    problem = _problem(cfg)
    delta = float(_option(args, cfg, "delta", 0.1))
    n_grid = _option(args, cfg, "n_grid", [50, 100, 150, 200])
    if isinstance(n_grid, str):
        n_grid = [int(x) for x in n_grid.split(",") if x.strip()]
    replicas = int(_option(args, cfg, "replicas", 10_000))
    seed = int(_option(args, cfg, "seed", 0))
    exact = bool(_option(args, cfg, "exact_binomial", False))
    plan = SimulationPlan(problem, delta, tuple(n_grid), replicas, seed)
    est = decay_slope(plan, exact=exact, workers=_workers())
    columns = ["n", "estimate", "stderr", "minus_log_p_over_n", "h_delta_reference"]
    _emit(est.records(), columns, args)
    h = est.h_delta_reference
    ratio = est.point_value / h if h and math.isfinite(h) else None
    _diagnostics(
        cfg, mode="exact" if exact else "monte_carlo", point_value=est.point_value,
        h_delta=h, ratio=ratio, slope=est.slope, intercept=est.intercept,
    )
    return EXIT_OK


def cmd_curvature(args: argparse.Namespace, cfg: ProblemConfig) -> int:
    problem = _problem(cfg)
    b = support_bounds(problem)
    curv = curvature(problem)
    step = 1e-4
    fd = (rate(problem, b.r0 + step).value - 2 * rate(problem, b.r0).value
          + rate(problem, b.r0 - step).value) / step**2
    row = {"r0": b.r0, "lower": b.lower, "upper": b.upper, "curvature": curv, "finite_difference": fd}
    _emit([row], list(row), args)
    _diagnostics(cfg)
    return EXIT_OK


def _affine_s3(problem: RateProblem):
    """Permutation and spacing making a three-component linear problem affine, if any."""
    if problem.size != 3 or check_condition(problem.rho, problem.components).kind != SUPPORTED_LINEAR:
        return None
    risks = np.array([law_risk(problem.rho, law) for law in problem.components])
    order = np.argsort(risks, kind="stable")
    gaps = np.diff(risks[order])
    if gaps[0] <= 0.0 or abs(gaps[1] - gaps[0]) > 1e-12 * max(1.0, abs(gaps[0])):
        return None
    return order, float(gaps[0]), float(risks[order[0]])


def cmd_closed_form_check(args: argparse.Namespace, cfg: ProblemConfig) -> int:
    problem = _problem(cfg)
    b = support_bounds(problem)
    points = int(_option(args, cfg, "points", 50))
    if b.degenerate:
        sys.stderr.write("error: degenerate problem has no interior\n")
        return EXIT_UNSUPPORTED
    rs = np.linspace(b.lower, b.upper, points + 2)[1:-1]
    if problem.size == 2:
        closed = [rate_closed_s2(problem, r) for r in rs]
        form = "s2"
    else:
        affine = _affine_s3(problem)
        if affine is None:
            sys.stderr.write("error: no closed form for this configuration (need s=2 or affine s=3)\n")
            return EXIT_UNSUPPORTED
        order, a, base = affine
        closed = [rate_closed_s3_affine(lambda x: base - x, a, problem.pi[order], r) for r in rs]
        form = "s3_affine"
    rows = []
    for r, c in zip(rs, closed):
        h = rate(problem, r).value
        rows.append({"r": float(r), "H": h, "closed_form": c, "deviation": abs(h - c)})
    _emit(rows, ["r", "H", "closed_form", "deviation"], args)
    max_dev = max(row["deviation"] for row in rows)
    _diagnostics(cfg, form=form, max_deviation=max_dev, tolerance=CLOSED_FORM_TOL)
    return EXIT_OK if max_dev <= CLOSED_FORM_TOL else EXIT_VERIFY


COMMANDS = {
    "rate-curve": cmd_rate_curve,
    "oracle-check": cmd_oracle_check,
    "simulate": cmd_simulate,
    "curvature": cmd_curvature,
    "closed-form-check": cmd_closed_form_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixldp", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON problem configuration")
        p.add_argument("--out", help="write the table here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--points", type=int)
        if name == "rate-curve":
            p.add_argument("--r-min", dest="r_min", type=float)
            p.add_argument("--r-max", dest="r_max", type=float)
        if name == "oracle-check":
            p.add_argument("--m", type=int, help="grid resolution")
            p.add_argument("--negative-control", action="store_true",
                           help="flip the sign of the first psi fed to the oracle")
        if name == "simulate":
            p.add_argument("--delta", type=float)
            p.add_argument("--n-grid", dest="n_grid", help="comma-separated sample sizes")
            p.add_argument("--replicas", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--exact-binomial", dest="exact_binomial", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except (ConditionUnsupported, UnsupportedCombination, UnsupportedLaw,
            DivergentMoment, DegenerateProblem) as exc:
        sys.stderr.write(f"error: unsupported: {exc}\n")
        return EXIT_UNSUPPORTED
    except DegenerateData as exc:
        sys.stderr.write(f"error: degenerate data: {exc}\n")
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
