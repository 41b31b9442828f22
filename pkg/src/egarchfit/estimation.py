"""Quasi-likelihood, exact SRE derivatives, and the (stable) QML estimator.

The Gaussian QL on the filtered path is

    L_n(theta) = (2n)^-1 sum_t [ X_t^2 exp(-g_t(theta)) + g_t(theta) ],

minimized over a parameter box (QMLE) or additionally subject to the
empirical invertibility constraint sum_t log Lambda_t(theta) <= -epsilon
(SQMLE). Gradients and Hessians come from linear SREs propagated alongside
the filter, so the optimizer runs on exact derivatives.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._kernels import (
    filter_grad_core,
    filter_grad_hess_core,
    ql_hessian,
    ql_terms,
    ql_value_grad,
)
from .errors import (
    EmptyFeasibleSetError,
    IdentifiabilityError,
    InadmissibleParamsError,
    MissingLatentStateError,
    NonStationaryError,
    OverflowGuardError,
    SingularBError,
)
from .inversion import (
    DEFAULT_EPSILON,
    FilterPath,
    empirical_lyapunov_sum,
    filter_series,
)
from .model import ModelParams, SeriesSample
from ._kernels import score_terms_at_truth
from .validation import check_count, check_finite_scalar, check_positive

MODE_QMLE = "qmle"
MODE_SQMLE = "sqmle"

_BIG = 1e10
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ParameterBox:
    """Compact optimization region: |alpha| <= alpha_max, |beta| <= beta_max < 1,
    |gamma| <= gamma_max, delta in [0, |gamma| + extra_max] with extra_max = delta_max.

    delta >= |gamma| is built into the search parametrization, so the box on
    delta bounds the slack delta - |gamma|.
    """

    alpha_max: float = 10.0
    beta_max: float = 0.999
    gamma_max: float = 10.0
    delta_max: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.beta_max < 1.0):
            raise ValueError(f"beta_max must be in (0, 1), got {self.beta_max}")
        for name in ("alpha_max", "gamma_max", "delta_max"):
            check_positive(getattr(self, name), name)

    def contains(self, params: ModelParams) -> bool:
        return (
            abs(params.alpha) <= self.alpha_max
            and abs(params.beta) <= self.beta_max
            and abs(params.gamma) <= self.gamma_max
            and 0.0 <= params.delta - abs(params.gamma) <= self.delta_max
        )

    def bounds_internal(self) -> list[tuple[float, float]]:
        return [
            (-self.alpha_max, self.alpha_max),
            (-self.beta_max, self.beta_max),
            (-self.gamma_max, self.gamma_max),
            (0.0, self.delta_max),
        ]


def _to_internal(params: ModelParams) -> np.ndarray:
    """(alpha, beta, gamma, delta) -> (alpha, beta, gamma, delta - |gamma|)."""
    return np.array([params.alpha, params.beta, params.gamma, params.delta - abs(params.gamma)])


def _from_internal(u: np.ndarray) -> ModelParams:
    return ModelParams(float(u[0]), float(u[1]), float(u[2]), abs(float(u[2])) + float(u[3]))


def _grad_to_internal(grad_theta: np.ndarray, gamma: float) -> np.ndarray:
    g = grad_theta.copy()
    if gamma != 0.0:
        g[2] += math.copysign(1.0, gamma) * g[3]
    return g


@dataclass(frozen=True)
class QLEvaluation:
    """QL value with optional exact derivatives and per-t derivative states."""

    value: float
    path: FilterPath
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None
    grad_path: np.ndarray | None = None
    hess_path: np.ndarray | None = None


def _require_admissible(params: ModelParams):
    if not params.stationary():
        raise NonStationaryError(f"|beta| >= 1 (beta={params.beta})")
    if not params.filter_admissible():
        raise InadmissibleParamsError(
            f"delta < |gamma| ({params.delta} < {abs(params.gamma)}): "
            "filter admissibility (INV) violated"
        )


def quasi_likelihood(
    params: ModelParams, series: SeriesSample, g0: float | None = None
) -> QLEvaluation:
    """QL value (2n)^-1 sum [X^2 exp(-g) + g] over the filter path."""
    path = filter_series(params, series, g0=g0)
    terms = ql_terms(series.returns, path.g)
    return QLEvaluation(value=float(terms.sum()) / (2.0 * len(series)), path=path)


def ql_with_derivatives(
    params: ModelParams,
    series: SeriesSample,
    g0: float | None = None,
    hessian: bool = True,
) -> QLEvaluation:
    """QL value plus exact gradient (and Hessian) from the derivative SREs.

    The initial value g0 (default alpha/(1-beta)) is treated as a constant
    with respect to theta: the derivative states start at zero.
    """
    _require_admissible(params)
    x = series.returns
    if g0 is None:
        g0 = params.uncond_mean_log_var()
    else:
        g0 = check_finite_scalar(g0, "g0")
    a, b, c, d = params.alpha, params.beta, params.gamma, params.delta
    if hessian:
        g, grad_path, hess_path, g_next, clamps, overflow = filter_grad_hess_core(
            a, b, c, d, x, g0
        )
    else:
        g, grad_path, g_next, _, clamps, overflow = filter_grad_core(a, b, c, d, x, g0)
        hess_path = None
    if overflow:
        raise OverflowGuardError(f"|g_t| exceeded the guard bound while filtering at {params}")
    value, gradient = ql_value_grad(x, g, grad_path)
    hess = ql_hessian(x, g, grad_path, hess_path) if hessian else None
    if not np.all(np.isfinite(gradient)) or (hessian and not np.all(np.isfinite(hess))):
        # derivative states grow exponentially where the filter is expanding
        raise OverflowGuardError(f"derivative recursion overflowed at {params}")
    path = FilterPath(
        g=g,
        residuals=x * np.exp(-0.5 * g),
        params=params,
        g0=max(g0, params.uncond_mean_log_var()),
        g_next=float(g_next),
        clamp_count=int(clamps),
    )
    return QLEvaluation(
        value=float(value),
        path=path,
        gradient=gradient,
        hessian=hess,
        grad_path=grad_path,
        hess_path=hess_path,
    )


def score_at_truth(params0: ModelParams, series: SeriesSample) -> np.ndarray:
    """Exact QL gradient at the true parameters from latent states (test oracle).

    Uses the latent-state linear SRE dg_{t+1} = U_t + V_t dg_t with
    U_t = (1, log sigma_t^2, Z_t, |Z_t|) and V_t = beta - (gamma Z_t + delta|Z_t|)/2,
    and returns (2n)^-1 sum dg_t (1 - Z_t^2) -- the same normalization as
    ql_with_derivatives' gradient.
    """
    _require_admissible(params0)
    if not series.has_latent:
        raise MissingLatentStateError(
            "score_at_truth needs latent log-variance and innovations (simulated data)"
        )
    terms = score_terms_at_truth(
        params0.alpha,
        params0.beta,
        params0.gamma,
        params0.delta,
        series.latent_log_var,
        series.innovations,
    )
    return terms.mean(axis=0)


def score_path_at_truth(params0: ModelParams, series: SeriesSample) -> np.ndarray:
    """Per-t score terms (1/2) dg_t (1 - Z_t^2); their mean is score_at_truth."""
    _require_admissible(params0)
    if not series.has_latent:
        raise MissingLatentStateError("needs latent state (simulated data)")
    return score_terms_at_truth(
        params0.alpha,
        params0.beta,
        params0.gamma,
        params0.delta,
        series.latent_log_var,
        series.innovations,
    )


@dataclass(frozen=True)
class CovarianceReport:
    """Asymptotic covariance pieces at a parameter point."""

    cov: np.ndarray
    std_errors: np.ndarray
    m4_hat: float
    mm_stat: float
    degenerate: bool


def asymptotic_covariance(
    params: ModelParams, series: SeriesSample, g0: float | None = None
) -> CovarianceReport:
    """Sigma_hat = (m4_hat - 1) B_hat^-1 with B_hat = n^-1 sum dg_t dg_t^T.

    m4_hat is the fourth moment of the filtered residuals and
    mm_stat = n^-1 sum (beta - (gamma Z_hat + delta |Z_hat|)/2)^2 estimates
    the moment condition E[V^2] < 1 required for the covariance to exist.
    std_errors are sqrt(diag(Sigma_hat)/n). Raises SingularBError when
    B_hat's condition number exceeds 1e12; warns when mm_stat >= 1.
    """
    evaluation = ql_with_derivatives(params, series, g0=g0, hessian=False)
    grad_path = evaluation.grad_path
    n = len(series)
    z_hat = evaluation.path.residuals
    m4_hat = float(np.mean(z_hat**4))
    v = params.beta - 0.5 * (params.gamma * z_hat + params.delta * np.abs(z_hat))
    mm_stat = float(np.mean(v**2))
    degenerate = abs(m4_hat - 1.0) <= 1e-9
    if degenerate:
        # two-point residuals: E Z^4 - 1 = 0 annihilates the covariance
        # (and confounds alpha with delta, so B itself is singular)
        cov = np.zeros((4, 4))
    else:
        b_hat = grad_path.T @ grad_path / n
        if not np.all(np.isfinite(b_hat)) or np.linalg.cond(b_hat) > _COND_LIMIT:
            raise SingularBError(
                "gradient outer-product matrix B is numerically singular "
                f"(cond > {_COND_LIMIT:g})"
            )
        cov = (m4_hat - 1.0) * np.linalg.inv(b_hat)
        cov = 0.5 * (cov + cov.T)
    if mm_stat >= 1.0:
        warnings.warn(
            f"moment condition violated: mm_stat={mm_stat:.4f} >= 1; "
            "reported standard errors are not valid",
            RuntimeWarning,
            stacklevel=2,
        )
    std_errors = np.sqrt(np.clip(np.diag(cov), 0.0, None) / n)
    return CovarianceReport(
        cov=cov,
        std_errors=std_errors,
        m4_hat=m4_hat,
        mm_stat=mm_stat,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class FitResult:
    """SQMLE/QMLE fit outcome with asymptotic standard errors."""

    theta_hat: ModelParams
    ql: float
    converged: bool
    iterations: int
    constraint_active: bool
    cov: np.ndarray
    std_errors: np.ndarray
    m4_hat: float
    mm_stat: float
    epsilon: float
    mode: str
    n: int
    message: str = ""

    @property
    def mm_valid(self) -> bool:
        return self.mm_stat < 1.0

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.to_dict(),
            "ql": self.ql,
            "converged": self.converged,
            "iterations": self.iterations,
            "constraint_active": self.constraint_active,
            "cov": [float(v) for v in self.cov.ravel()],
            "std_errors": [float(v) for v in self.std_errors],
            "m4_hat": self.m4_hat,
            "mm_stat": self.mm_stat,
            "epsilon": self.epsilon,
            "mode": self.mode,
            "n": self.n,
            "message": self.message,
        }


def _reject_two_point_innovations(series: SeriesSample):
    z = series.innovations
    if z is not None and np.all(np.abs(np.abs(z) - 1.0) < 1e-12):
        raise IdentifiabilityError(
            "innovations are concentrated on two points (Rademacher); "
            "the model is not identifiable and 1 - Z^2 = 0 kills the score"
        )


def find_feasible_start(
    theta0: ModelParams, x: np.ndarray, epsilon: float, steps: int = 60
) -> ModelParams:
    """Shrink theta toward the origin until the empirical constraint holds.

    Scaling the whole vector pulls beta toward 0 and (alpha, gamma, delta)
    toward small values, where feasibility is guaranteed on any finite data
    (at beta = 0 the summed log Lipschitz coefficients go to -inf as the
    shock coefficients vanish).
    """
    for k in range(steps):
        s = 0.8**k
        cand = ModelParams(
            s * theta0.alpha, s * theta0.beta, s * theta0.gamma, s * theta0.delta
        )
        total, _ = empirical_lyapunov_sum(cand, x)
        if total + epsilon <= 0.0:
            return cand
    raise EmptyFeasibleSetError(
        "could not find an empirically invertible starting point; "
        "this indicates degenerate data (the set is non-empty in theory)"
    )


def fit(
    series: SeriesSample,
    theta0: ModelParams,
    box: ParameterBox | None = None,
    mode: str = MODE_SQMLE,
    epsilon: float = DEFAULT_EPSILON,
    g0: float | None = None,
    gtol: float = 1e-6,
    step_tol: float = 1e-8,
    max_iter: int = 500,
    penalty_init: float = 10.0,
    penalty_rounds: int = 20,
) -> FitResult:
    """Minimize the QL over the box, optionally under the empirical constraint.

    mode="sqmle" enforces sum_t log Lambda_t(theta) <= -epsilon through an
    exact (L1) penalty whose weight doubles until the constraint holds;
    mode="qmle" optimizes the box alone. The filter initial value is frozen
    at the starting point's alpha/(1-beta) for every optimizer evaluation,
    so the analytic gradient is exactly consistent with the objective.
    Falls back to Nelder-Mead if the derivative-based route fails.
    """
    if mode not in (MODE_QMLE, MODE_SQMLE):
        raise ValueError(f"mode must be {MODE_QMLE!r} or {MODE_SQMLE!r}, got {mode!r}")
    check_positive(epsilon, "epsilon")
    max_iter = check_count(max_iter, "max_iter", minimum=1)
    _require_admissible(theta0)
    _reject_two_point_innovations(series)
    box = box or ParameterBox()
    if not box.contains(theta0):
        raise ValueError(f"theta0 {theta0} lies outside the parameter box {box}")

    x = series.returns
    n = x.shape[0]
    theta_start = theta0
    if mode == MODE_SQMLE:
        total, _ = empirical_lyapunov_sum(theta0, x)
        if total + epsilon > 0.0:
            theta_start = find_feasible_start(theta0, x, epsilon)
    if g0 is None:
        g0 = theta_start.uncond_mean_log_var()
    else:
        g0 = check_finite_scalar(g0, "g0")

    state = {"mu": penalty_init}

    def objective(u: np.ndarray) -> tuple[float, np.ndarray]:
        params = _from_internal(u)
        gg, grad_path, _, _, _, overflow = filter_grad_core(
            params.alpha, params.beta, params.gamma, params.delta, x, g0
        )
        if overflow:
            return _BIG, np.zeros(4)
        value, grad_theta = ql_value_grad(x, gg, grad_path)
        if mode == MODE_SQMLE:
            total, grad_lyap = empirical_lyapunov_sum(params, x)
            viol = (total + epsilon) / n
            if viol > 0.0:
                value = value + state["mu"] * viol
                grad_theta = grad_theta + state["mu"] * grad_lyap / n
        if not (np.isfinite(value) and np.all(np.isfinite(grad_theta))):
            return _BIG, np.zeros(4)
        return value, _grad_to_internal(grad_theta, params.gamma)

    u0 = _to_internal(theta_start)
    bounds = box.bounds_internal()
    # a step of size step_tol near the optimum moves f by ~step_tol^2, so the
    # exact gradient criterion (gtol) is the one that normally binds
    options = {"maxiter": max_iter, "gtol": gtol, "ftol": max(step_tol**2, 1e-16)}

    total_iters = 0
    res = None
    message = ""
    feasible = mode == MODE_QMLE
    for _ in range(penalty_rounds):
        try:
            res = minimize(
                objective, u0, jac=True, method="L-BFGS-B", bounds=bounds, options=options
            )
        except (ValueError, FloatingPointError):
            res = None
            break
        total_iters += int(res.nit)
        u0 = res.x
        if mode == MODE_QMLE:
            break
        total, _ = empirical_lyapunov_sum(_from_internal(res.x), x)
        if total + epsilon <= 1e-8 * max(1.0, abs(total)):
            feasible = True
            break
        state["mu"] *= 2.0

    if res is None or not np.isfinite(res.fun) or res.fun >= _BIG:
        # derivative path overflowed or optimizer failed: derivative-free fallback
        def value_only(u: np.ndarray) -> float:
            return objective(u)[0]

        res = minimize(
            value_only,
            _to_internal(theta_start),
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": 4 * max_iter, "xatol": step_tol, "fatol": step_tol},
        )
        total_iters += int(res.nit)
        if mode == MODE_SQMLE:
            total, _ = empirical_lyapunov_sum(_from_internal(res.x), x)
            feasible = total + epsilon <= 1e-8 * max(1.0, abs(total))
        message = "nelder-mead fallback: " + str(res.message)
    else:
        message = str(res.message)

    theta_hat = _from_internal(res.x)
    converged = bool(res.success and feasible and np.isfinite(res.fun))

    evaluation = quasi_likelihood(theta_hat, series, g0=g0)
    covrep = asymptotic_covariance(theta_hat, series, g0=g0)
    if mode == MODE_SQMLE:
        total, _ = empirical_lyapunov_sum(theta_hat, x)
        constraint_active = bool(total + epsilon >= -1e-6 * n)
    else:
        constraint_active = False

    return FitResult(
        theta_hat=theta_hat,
        ql=evaluation.value,
        converged=converged,
        iterations=total_iters,
        constraint_active=constraint_active,
        cov=covrep.cov,
        std_errors=covrep.std_errors,
        m4_hat=covrep.m4_hat,
        mm_stat=covrep.mm_stat,
        epsilon=epsilon,
        mode=mode,
        n=n,
        message=message,
    )
