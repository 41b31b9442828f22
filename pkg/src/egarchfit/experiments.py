"""Monte Carlo harnesses: invertibility-domain map, consistency/normality
studies, and the one-step volatility forecast.

Replications are embarrassingly parallel; each gets its own RNG stream
spawned from the root seed with a (size-index, replication-index) key, so
results are identical regardless of thread count or scheduling.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EgarchError, IdentifiabilityError, OverflowGuardError
from .estimation import FitResult, fit
from .inversion import (
    DEFAULT_EPSILON,
    VERDICT_INVERTIBLE,
    check_inv_theoretical,
    filter_series,
)
from .model import InnovationSpec, ModelParams, SeriesSample, simulate
from .validation import check_count, check_positive

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


def forecast(
    result: FitResult | ModelParams, series: SeriesSample, g0: float | None = None
) -> float:
    """One-step-ahead variance forecast exp(g_{n+1}) from the filtered path."""
    params = result.theta_hat if isinstance(result, FitResult) else result
    path = filter_series(params, series, g0=g0)
    if path.g_next > 700.0:
        raise OverflowGuardError("forecast state exceeds the exp guard bound")
    return float(math.exp(path.g_next))


@dataclass(frozen=True)
class DomainGrid:
    """Largest invertible beta per (gamma, delta) cell; NaN where delta < |gamma|."""

    gamma_axis: np.ndarray
    delta_axis: np.ndarray
    beta_max: np.ndarray
    mc_paths: int
    seed: int

    def __post_init__(self):
        if self.beta_max.shape != (len(self.gamma_axis), len(self.delta_axis)):
            raise ValueError("beta_max shape must match the axes")


def domain_map(
    gamma_range: tuple[float, float],
    delta_range: tuple[float, float],
    grid_size: int,
    beta_tolerance: float = 1e-6,
    mc_paths: int = 10_000,
    seed: int = 0,
    innov: InnovationSpec = InnovationSpec(),
) -> DomainGrid:
    """Map the invertibility domain: bisection on beta against the Monte Carlo check.

    For each admissible cell (delta >= |gamma|; others left absent) the
    largest beta in [0, 1 - beta_tolerance] whose theta = (0, beta, gamma,
    delta) passes check_inv_theoretical as its own DGP is located by
    bisection to resolution beta_tolerance. alpha is fixed at 0: the
    stationary-DGP criterion does not depend on it. Every Monte Carlo
    evaluation reuses the same seed (common random numbers), which makes
    the sampled criterion pathwise monotone in delta at fixed beta.
    """
    grid_size = check_count(grid_size, "grid_size", minimum=2)
    check_positive(beta_tolerance, "beta_tolerance")
    if beta_tolerance >= 1.0:
        raise ValueError("beta_tolerance must be < 1")
    gammas = np.linspace(gamma_range[0], gamma_range[1], grid_size)
    deltas = np.linspace(delta_range[0], delta_range[1], grid_size)
    beta_max = np.full((grid_size, grid_size), np.nan)

    def invertible(beta: float, gamma: float, delta: float) -> bool:
        params = ModelParams(0.0, beta, gamma, delta)
        report = check_inv_theoretical(
            params, params, innov=innov, mc_paths=mc_paths, seed=seed
        )
        return report.verdict == VERDICT_INVERTIBLE

    upper = 1.0 - beta_tolerance
    for i, ga in enumerate(gammas):
        for j, de in enumerate(deltas):
            if de < abs(ga):
                continue
            if not invertible(0.0, ga, de):
                beta_max[i, j] = 0.0
                continue
            # bisect with the upper limit assumed non-invertible; probe it
            # only when the boundary converges to the top (the MA truncation
            # depth, hence cost, explodes as beta -> 1)
            lo, hi = 0.0, upper
            while hi - lo > beta_tolerance:
                mid = 0.5 * (lo + hi)
                if invertible(mid, ga, de):
                    lo = mid
                else:
                    hi = mid
            if hi >= upper and invertible(upper, ga, de):
                lo = upper
            beta_max[i, j] = lo
    return DomainGrid(
        gamma_axis=gammas,
        delta_axis=deltas,
        beta_max=beta_max,
        mc_paths=mc_paths,
        seed=int(seed),
    )


@dataclass(frozen=True)
class MCStudyReport:
    """Aggregated Monte Carlo study over replicated simulate-then-fit runs.

    per_n maps each sample size to aggregates (bias/rmse/coverage per
    coordinate, the all-coordinate 3-standard-error hit rate, forecast MAE,
    failure count); raw keeps the per-replication draws so downstream
    plotting (QQ of standardized estimates) needs no re-run.
    """

    theta0: ModelParams
    n_grid: tuple[int, ...]
    replications: int
    mode: str
    innovation: InnovationSpec
    epsilon: float
    seed: int
    per_n: dict
    raw: dict
    rmse_decreasing: tuple[bool, ...] | None

    def standardized(self, n: int) -> np.ndarray:
        """(theta_hat - theta0) / std_error rows for sample size n."""
        r = self.raw[n]
        ok = r["ok"]
        with np.errstate(divide="ignore", invalid="ignore"):
            return (r["theta_hat"][ok] - self.theta0.as_array()) / r["std_errors"][ok]

    def to_dict(self) -> dict:
        per_n = {
            str(n): {
                key: (val.tolist() if isinstance(val, np.ndarray) else val)
                for key, val in stats.items()
            }
            for n, stats in self.per_n.items()
        }
        return {
            "theta0": self.theta0.to_dict(),
            "n_grid": list(self.n_grid),
            "replications": self.replications,
            "mode": self.mode,
            "innovation": {"kind": self.innovation.kind, "dof": self.innovation.dof},
            "epsilon": self.epsilon,
            "seeds": [self.seed],
            "seed_scheme": "SeedSequence(seed, spawn_key=(n_index, replication))",
            "per_n": per_n,
            "rmse_decreasing": (
                list(self.rmse_decreasing) if self.rmse_decreasing is not None else None
            ),
        }


def _mc_replication(task) -> tuple:
    """One simulate-then-fit replication; returns plain arrays for aggregation."""
    (theta_tuple, kind, dof, n, epsilon, mode, seed, n_idx, rep_idx) = task
    params = ModelParams(*theta_tuple)
    innov = InnovationSpec(kind, dof)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(n_idx, rep_idx))
    try:
        sample = simulate(params, innov, n=n + 1, burn_in=1000, seed=ss)
        train = SeriesSample(
            returns=sample.returns[:n],
            latent_log_var=sample.latent_log_var[:n],
            innovations=sample.innovations[:n],
        )
        result = fit(train, theta0=params, mode=mode, epsilon=epsilon)
        fc = forecast(result, train)
        true_next = math.exp(sample.latent_log_var[n])
        return (
            result.theta_hat.as_array(),
            result.std_errors,
            bool(result.converged),
            abs(fc - true_next),
            result.m4_hat,
            None,
        )
    except EgarchError as exc:
        return (None, None, False, None, None, f"{type(exc).__name__}: {exc}")


def _run_replications(tasks, threads: int | None):
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, int(threads))
    if threads == 1 or len(tasks) <= 1:
        return [_mc_replication(t) for t in tasks]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return [_mc_replication(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
        return list(pool.map(_mc_replication, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def _aggregate(theta0: ModelParams, outcomes: list) -> tuple[dict, dict]:
    reps = len(outcomes)
    theta_hat = np.full((reps, 4), np.nan)
    std_errors = np.full((reps, 4), np.nan)
    converged = np.zeros(reps, dtype=bool)
    forecast_err = np.full(reps, np.nan)
    m4 = np.full(reps, np.nan)
    failures = 0
    for r, out in enumerate(outcomes):
        th, se, conv, ferr, m4r, err = out
        if err is not None:
            failures += 1
            continue
        theta_hat[r] = th
        std_errors[r] = se
        converged[r] = conv
        forecast_err[r] = ferr
        m4[r] = m4r
    ok = converged & np.isfinite(theta_hat).all(axis=1)
    n_used = int(ok.sum())
    t0 = theta0.as_array()
    if n_used:
        err = theta_hat[ok] - t0
        bias = err.mean(axis=0)
        rmse = np.sqrt((err**2).mean(axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            inside95 = np.abs(err) <= Z_95 * std_errors[ok]
            inside3 = np.abs(err) <= 3.0 * std_errors[ok]
        coverage = inside95.mean(axis=0)
        within_3se = float(inside3.all(axis=1).mean())
        fmae = float(np.nanmean(forecast_err[ok]))
        fmedae = float(np.nanmedian(forecast_err[ok]))
        m4_mean = float(np.nanmean(m4[ok]))
    else:
        bias = rmse = coverage = np.full(4, np.nan)
        within_3se = fmae = fmedae = m4_mean = math.nan
    stats = {
        "bias": bias,
        "rmse": rmse,
        "coverage": coverage,
        "within_3se": within_3se,
        "forecast_mae": fmae,
        "forecast_median_ae": fmedae,
        "m4_mean": m4_mean,
        "failures": failures,
        "n_used": n_used,
        "replications": reps,
    }
    raw = {
        "theta_hat": theta_hat,
        "std_errors": std_errors,
        "converged": converged,
        "forecast_abs_err": forecast_err,
        "ok": ok,
    }
    return stats, raw


def _check_study_preconditions(
    theta0: ModelParams,
    innov: InnovationSpec,
    seed: int,
    margin: float,
    mc_paths: int = 20_000,
):
    if theta0.gamma == 0.0 and theta0.delta == 0.0:
        raise IdentifiabilityError(
            "gamma = delta = 0 carries no shock information; theta0 is not identifiable"
        )
    if not innov.identifiable():
        raise IdentifiabilityError(
            "innovation distribution concentrated on two points is not identifiable"
        )
    report = check_inv_theoretical(
        theta0, theta0, innov=innov, mc_paths=mc_paths, seed=seed
    )
    if report.verdict != VERDICT_INVERTIBLE or report.estimate > -margin:
        raise ValueError(
            f"theta0 must be invertible with margin {margin}; "
            f"criterion estimate {report.estimate:.4f} ({report.verdict})"
        )
    return report


def population_mm(params: ModelParams, innov: InnovationSpec) -> float:
    """Closed-form E[(beta - (gamma Z + delta|Z|)/2)^2] for symmetric unit-variance Z.

    E[Z|Z|] = 0 by symmetry, so the value is
    beta^2 - beta*delta*E|Z| + (gamma^2 + delta^2)/4.
    """
    e_abs = innov.abs_mean()
    return (
        params.beta**2
        - params.beta * params.delta * e_abs
        + 0.25 * (params.gamma**2 + params.delta**2)
    )


def consistency_study(
    theta0: ModelParams,
    n_grid,
    replications: int,
    mode: str = "sqmle",
    innov: InnovationSpec = InnovationSpec(),
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    threads: int | None = None,
    margin: float = 0.02,
) -> MCStudyReport:
    """Bias/RMSE/forecast-error study across increasing sample sizes.

    Each replication simulates n+1 observations at theta0, fits the first n
    starting from theta0, and measures the one-step forecast against the
    held-out latent variance. Fit failures are counted per sample size, not
    fatal. rmse_decreasing compares the largest against the smallest n.
    """
    n_grid = tuple(check_count(n, "n", minimum=20) for n in n_grid)
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    replications = check_count(replications, "replications", minimum=1)
    _check_study_preconditions(theta0, innov, seed, margin)
    tasks = [
        (tuple(theta0.as_array()), innov.kind, innov.dof, n, epsilon, mode, seed, i, r)
        for i, n in enumerate(n_grid)
        for r in range(replications)
    ]
    outcomes = _run_replications(tasks, threads)
    per_n, raw = {}, {}
    for i, n in enumerate(n_grid):
        chunk = outcomes[i * replications : (i + 1) * replications]
        per_n[n], raw[n] = _aggregate(theta0, chunk)
    rmse_dec = None
    if len(n_grid) >= 2:
        first, last = per_n[n_grid[0]]["rmse"], per_n[n_grid[-1]]["rmse"]
        rmse_dec = tuple(bool(b < a) for a, b in zip(first, last))
    return MCStudyReport(
        theta0=theta0,
        n_grid=n_grid,
        replications=replications,
        mode=mode,
        innovation=innov,
        epsilon=epsilon,
        seed=int(seed),
        per_n=per_n,
        raw=raw,
        rmse_decreasing=rmse_dec,
    )


def normality_study(
    theta0: ModelParams,
    n: int,
    replications: int,
    mode: str = "sqmle",
    innov: InnovationSpec = InnovationSpec(),
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    threads: int | None = None,
    margin: float = 0.02,
) -> MCStudyReport:
    """Coverage study of the asymptotic 95% confidence intervals at one n.

    Requires theta0 invertible with margin and a finite-variance regime:
    the population moment statistic E[V^2] must be < 1 (closed form for the
    symmetric innovation families here). Standardized estimates are kept in
    raw for external QQ plotting.
    """
    n = check_count(n, "n", minimum=20)
    replications = check_count(replications, "replications", minimum=1)
    _check_study_preconditions(theta0, innov, seed, margin)
    mm = population_mm(theta0, innov)
    if not mm < 1.0:
        raise ValueError(f"population moment condition fails: E[V^2] = {mm:.4f} >= 1")
    tasks = [
        (tuple(theta0.as_array()), innov.kind, innov.dof, n, epsilon, mode, seed, 0, r)
        for r in range(replications)
    ]
    outcomes = _run_replications(tasks, threads)
    stats, raw = _aggregate(theta0, outcomes)
    return MCStudyReport(
        theta0=theta0,
        n_grid=(n,),
        replications=replications,
        mode=mode,
        innovation=innov,
        epsilon=epsilon,
        seed=int(seed),
        per_n={n: stats},
        raw={n: raw},
        rmse_decreasing=None,
    )
