"""Command-line front end.

Exit codes: 0 success, 1 domain outcomes (non-invertible verdict on a
gated check, non-convergence, overflow, empty feasible set), 2 usage/IO
errors. All randomness sits behind an explicit --seed so identical command
lines produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataio
from .errors import (
    EgarchError,
    EmptyFeasibleSetError,
    IdentifiabilityError,
    InadmissibleParamsError,
    NonStationaryError,
    OverflowGuardError,
    SeriesFormatError,
    SingularBError,
)
from .estimation import ParameterBox, fit
from .experiments import consistency_study, domain_map, forecast, normality_study
from .inversion import (
    DEFAULT_EPSILON,
    VERDICT_INVERTIBLE,
    check_inv_empirical,
    check_inv_theoretical,
    stability_diagnostic,
)
from .model import InnovationSpec, ModelParams, simulate

USAGE_ERRORS = (SeriesFormatError, NonStationaryError, InadmissibleParamsError, ValueError)
DOMAIN_ERRORS = (
    OverflowGuardError,
    EmptyFeasibleSetError,
    IdentifiabilityError,
    SingularBError,
    EgarchError,
)


def _add_params_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--alpha", type=float, required=True)
    parser.add_argument("--beta", type=float, required=True)
    parser.add_argument("--gamma", type=float, required=True)
    parser.add_argument("--delta", type=float, required=True)


def _innov_from_args(args) -> InnovationSpec:
    dof = getattr(args, "dof", None)
    return InnovationSpec(args.innov, dof if args.innov == "student" else None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egarchfit",
        description="EGARCH(1,1) simulation, invertibility checks, and stable QML fitting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the EGARCH(1,1) DGP to CSV")
    _add_params_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--innov", choices=["normal", "student", "rademacher"], default="normal")
    p.add_argument("--dof", type=float, default=None, help="student-t degrees of freedom (> 4)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit by QMLE/SQMLE, write a JSON result")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--mode", choices=["qmle", "sqmle"], default="sqmle")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--init-alpha", type=float, default=0.0)
    p.add_argument("--init-beta", type=float, default=0.2)
    p.add_argument("--init-gamma", type=float, default=0.0)
    p.add_argument("--init-delta", type=float, default=0.2)
    p.add_argument("--beta-max", type=float, default=0.999)
    p.add_argument("--g0", type=float, default=None)
    p.add_argument("--seed", type=int, required=True, help="recorded for reproducibility")
    p.add_argument("--out", required=True)

    p = sub.add_parser("check-invertibility", help="Lyapunov invertibility test")
    p.add_argument("--params", required=True, help="params JSON or fit JSON")
    p.add_argument("--method", choices=["empirical", "theoretical"], required=True)
    p.add_argument("--input", default=None, help="series CSV (empirical method)")
    p.add_argument("--column", default=None)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--mc-paths", type=int, default=10_000)
    p.add_argument("--innov", choices=["normal", "student", "rademacher"], default="normal")
    p.add_argument("--dof", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("stability", help="filter-path divergence table (CSV)")
    p.add_argument("--params", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--initial-values", required=True, help="comma-separated g0 values")
    p.add_argument("--out", required=True)

    p = sub.add_parser("domain-map", help="invertibility domain map (CSV)")
    p.add_argument("--gamma-min", type=float, required=True)
    p.add_argument("--gamma-max", type=float, required=True)
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--grid-size", type=int, required=True)
    p.add_argument("--beta-tolerance", type=float, default=1e-3)
    p.add_argument("--mc-paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("forecast", help="one-step-ahead variance forecast")
    p.add_argument("--params", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--g0", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mc-study", help="consistency or normality Monte Carlo study")
    p.add_argument("--kind", choices=["consistency", "normality"], required=True)
    _add_params_flags(p)
    p.add_argument("--n-grid", required=True, help="comma-separated sample sizes")
    p.add_argument("--replications", type=int, required=True)
    p.add_argument("--mode", choices=["qmle", "sqmle"], default="sqmle")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--innov", choices=["normal", "student"], default="normal")
    p.add_argument("--dof", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=None, help="default: logical cores")
    p.add_argument("--out", required=True)
    p.add_argument("--std-csv", default=None, help="CSV of standardized estimates")
    return parser


def _cmd_simulate(args) -> int:
    params = ModelParams(args.alpha, args.beta, args.gamma, args.delta)
    sample = simulate(
        params, _innov_from_args(args), n=args.n, burn_in=args.burn_in, seed=args.seed
    )
    dataio.save_series(args.out, sample)
    print(f"wrote {args.n} observations to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    series = dataio.load_series(args.input, column=args.column, min_rows=10)
    theta0 = ModelParams(args.init_alpha, args.init_beta, args.init_gamma, args.init_delta)
    box = ParameterBox(beta_max=args.beta_max)
    result = fit(
        series,
        theta0=theta0,
        box=box,
        mode=args.mode,
        epsilon=args.epsilon,
        g0=args.g0,
    )
    payload = result.to_dict()
    payload["seed"] = args.seed
    dataio.write_json(args.out, payload)
    th = result.theta_hat
    print(
        f"theta_hat: alpha={th.alpha:.6g} beta={th.beta:.6g} "
        f"gamma={th.gamma:.6g} delta={th.delta:.6g}"
    )
    print(f"ql={result.ql:.6g} converged={result.converged} iterations={result.iterations}")
    if not result.converged:
        print("fit did not converge", file=sys.stderr)
        return 1
    return 0


def _cmd_check(args) -> int:
    params = dataio.load_params(args.params)
    if args.method == "empirical":
        if args.input is None:
            raise ValueError("--input is required for the empirical method")
        series = dataio.load_series(args.input, column=args.column)
        report = check_inv_empirical(params, series, epsilon=args.epsilon)
    else:
        report = check_inv_theoretical(
            params,
            params,
            innov=_innov_from_args(args),
            mc_paths=args.mc_paths,
            seed=args.seed,
        )
    print(f"verdict: {report.verdict}")
    print(f"per-observation log-Lipschitz mean: {report.estimate:.6g} (se {report.std_error:.3g})")
    if args.out:
        dataio.write_json(args.out, report.to_dict())
    return 0 if report.verdict == VERDICT_INVERTIBLE else 1


def _cmd_stability(args) -> int:
    params = dataio.load_params(args.params)
    series = dataio.load_series(args.input, column=args.column)
    values = [float(tok) for tok in args.initial_values.split(",")]
    table = stability_diagnostic(params, series, values)
    dataio.atomic_write_text(args.out, dataio.stability_to_csv(table))
    print(f"wrote stability table ({len(values)} initial values) to {args.out}")
    return 0


def _cmd_domain_map(args) -> int:
    grid = domain_map(
        (args.gamma_min, args.gamma_max),
        (args.delta_min, args.delta_max),
        grid_size=args.grid_size,
        beta_tolerance=args.beta_tolerance,
        mc_paths=args.mc_paths,
        seed=args.seed,
    )
    dataio.atomic_write_text(args.out, dataio.domain_grid_to_csv(grid))
    print(f"wrote {args.grid_size}x{args.grid_size} domain map to {args.out}")
    return 0


def _cmd_forecast(args) -> int:
    params = dataio.load_params(args.params)
    series = dataio.load_series(args.input, column=args.column)
    value = forecast(params, series, g0=args.g0)
    print(f"sigma2_next: {value:.17g}")
    if args.out:
        dataio.write_json(args.out, {"sigma2_next": value})
    return 0


def _cmd_mc_study(args) -> int:
    theta0 = ModelParams(args.alpha, args.beta, args.gamma, args.delta)
    n_grid = [int(tok) for tok in args.n_grid.split(",")]
    innov = _innov_from_args(args)
    if args.kind == "consistency":
        report = consistency_study(
            theta0,
            n_grid,
            replications=args.replications,
            mode=args.mode,
            innov=innov,
            epsilon=args.epsilon,
            seed=args.seed,
            threads=args.threads,
        )
    else:
        if len(n_grid) != 1:
            raise ValueError("normality study takes a single n in --n-grid")
        report = normality_study(
            theta0,
            n_grid[0],
            replications=args.replications,
            mode=args.mode,
            innov=innov,
            epsilon=args.epsilon,
            seed=args.seed,
            threads=args.threads,
        )
    dataio.write_json(args.out, report.to_dict())
    if args.std_csv:
        dataio.atomic_write_text(args.std_csv, dataio.standardized_estimates_csv(report))
    for n in report.n_grid:
        stats = report.per_n[n]
        print(
            f"n={n}: rmse={np.array2string(stats['rmse'], precision=4)} "
            f"failures={stats['failures']}"
        )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "check-invertibility": _cmd_check,
    "stability": _cmd_stability,
    "domain-map": _cmd_domain_map,
    "forecast": _cmd_forecast,
    "mc-study": _cmd_mc_study,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
