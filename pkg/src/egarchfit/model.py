"""EGARCH(1,1) parameter space, innovation distributions, and the data-generating process.

The DGP is X_t = sigma_t Z_t with an AR(1) for the log-variance,

    log sigma_{t+1}^2 = alpha + beta log sigma_t^2 + gamma Z_t + delta |Z_t|,

stationary iff |beta| < 1, in which case log sigma_t^2 has the MA(inf)
representation alpha/(1-beta) + sum_{k>=1} beta^{k-1} (gamma Z_{t-k} + delta |Z_{t-k}|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import LOG_VAR_GUARD, simulate_core
from .errors import NonStationaryError, OverflowGuardError
from .validation import as_float_array, check_count, check_finite_scalar

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)  # E|Z| for Z ~ N(0,1)


@dataclass(frozen=True)
class ModelParams:
    """Parameter vector theta = (alpha, beta, gamma, delta).

    alpha: log-variance intercept; beta: persistence; gamma: sign/leverage
    coefficient; delta: magnitude coefficient.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, name, check_finite_scalar(getattr(self, name), name))

    def stationary(self) -> bool:
        """True iff |beta| < 1."""
        return abs(self.beta) < 1.0

    def filter_admissible(self) -> bool:
        """True iff delta >= |gamma|, which keeps the shock term nonnegative."""
        return self.delta >= abs(self.gamma)

    def uncond_mean_log_var(self) -> float:
        """alpha / (1 - beta): both the noise-free fixed point and the K boundary."""
        return self.alpha / (1.0 - self.beta)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta])

    @classmethod
    def from_array(cls, theta) -> "ModelParams":
        a, b, g, d = (float(v) for v in theta)
        return cls(a, b, g, d)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelParams":
        return cls(float(obj["alpha"]), float(obj["beta"]), float(obj["gamma"]), float(obj["delta"]))


PARAM_NAMES = ("alpha", "beta", "gamma", "delta")

_KINDS = ("normal", "student", "rademacher")


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution of the iid innovations Z_t, centered and normalized to unit variance.

    kind: "normal", "student" (dof > 4, scaled by sqrt((dof-2)/dof)), or
    "rademacher" (+/-1; test-only, not identifiable: concentrated on two points).
    """

    kind: str = "normal"
    dof: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "student":
            if self.dof is None or not (self.dof > 4.0):
                raise ValueError("student innovations need dof > 4 so that E[Z^4] < inf")
        elif self.dof is not None:
            raise ValueError(f"dof is only meaningful for kind='student', got kind={self.kind!r}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw unit-variance innovations; size may be an int or a shape tuple."""
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.kind == "student":
            scale = math.sqrt((self.dof - 2.0) / self.dof)
            return scale * rng.standard_t(self.dof, size)
        return rng.integers(0, 2, size).astype(np.float64) * 2.0 - 1.0

    def identifiable(self) -> bool:
        """False for distributions concentrated on two points (Rademacher)."""
        return self.kind != "rademacher"

    def fourth_moment(self) -> float:
        """E[Z^4]; finite by construction (dof > 4 enforced for student)."""
        if self.kind == "normal":
            return 3.0
        if self.kind == "student":
            return 3.0 * (self.dof - 2.0) / (self.dof - 4.0)
        return 1.0

    def abs_mean(self) -> float:
        """E|Z| for the unit-variance distribution."""
        if self.kind == "normal":
            return SQRT_2_OVER_PI
        if self.kind == "student":
            nu = self.dof
            raw = 2.0 * math.sqrt(nu) * math.gamma((nu + 1.0) / 2.0) / (
                math.sqrt(math.pi) * (nu - 1.0) * math.gamma(nu / 2.0)
            )
            return math.sqrt((nu - 2.0) / nu) * raw
        return 1.0


@dataclass(frozen=True)
class SeriesSample:
    """Observed returns X_1..X_n, plus latent log sigma_t^2 and Z_t for simulated data."""

    returns: np.ndarray
    latent_log_var: np.ndarray | None = None
    innovations: np.ndarray | None = None

    def __post_init__(self):
        x = as_float_array(self.returns, "returns")
        object.__setattr__(self, "returns", x)
        for name in ("latent_log_var", "innovations"):
            val = getattr(self, name)
            if val is not None:
                arr = as_float_array(val, name)
                if arr.shape[0] != x.shape[0]:
                    raise ValueError(f"{name} length {arr.shape[0]} != returns length {x.shape[0]}")
                object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.returns.shape[0])

    @property
    def has_latent(self) -> bool:
        return self.latent_log_var is not None and self.innovations is not None


def _require_stationary(params: ModelParams):
    if not params.stationary():
        raise NonStationaryError(
            f"|beta| >= 1 (beta={params.beta}): no stationary EGARCH(1,1) solution"
        )


def simulate(
    params: ModelParams,
    innov: InnovationSpec,
    n: int,
    burn_in: int = 1000,
    seed: int | np.random.SeedSequence = 0,
) -> SeriesSample:
    """Simulate n observations of the stationary EGARCH(1,1) DGP.

    The log-variance starts at the unconditional mean alpha/(1-beta) and
    runs burn_in extra steps before recording, so the kept path equals the
    MA(inf) representation truncated at t+burn_in lags with zero remainder.

    Raises NonStationaryError if |beta| >= 1 and OverflowGuardError if
    |log sigma_t^2| exceeds the +/-700 guard.
    """
    _require_stationary(params)
    n = check_count(n, "n", minimum=1)
    burn_in = check_count(burn_in, "burn_in", minimum=0)
    rng = np.random.default_rng(seed)
    z = innov.sample(rng, burn_in + n)
    x, log_var, overflow = simulate_core(
        params.alpha, params.beta, params.gamma, params.delta, z, burn_in
    )
    if overflow:
        raise OverflowGuardError(
            f"|log sigma^2| exceeded {LOG_VAR_GUARD:g} during simulation at {params}"
        )
    return SeriesSample(returns=x, latent_log_var=log_var, innovations=z[burn_in:])


def ma_infinity_log_var(params: ModelParams, innovations, truncation: int) -> np.ndarray:
    """Truncated MA(inf) evaluation of log sigma_t^2 on a given innovation vector.

    For each t with at least `truncation` lagged innovations available,
    returns alpha/(1-beta) + sum_{k=1}^truncation beta^{k-1} w_{t-k},
    w = gamma z + delta |z|. Output length is len(innovations) - truncation,
    aligned with positions truncation..n-1 of the input. Truncation error
    is bounded by |beta|^truncation * max|w| / (1 - |beta|).
    """
    _require_stationary(params)
    truncation = check_count(truncation, "truncation", minimum=1)
    z = as_float_array(innovations, "innovations")
    n = z.shape[0]
    if n <= truncation:
        raise ValueError(
            f"need more than truncation={truncation} innovations, got {n}"
        )
    w = params.gamma * z + params.delta * np.abs(z)
    coeffs = params.beta ** np.arange(truncation)
    # out[i] = mu + sum_{k=1}^T beta^{k-1} w[truncation + i - k]
    kernel = coeffs[::-1]
    windows = np.lib.stride_tricks.sliding_window_view(w, truncation)[: n - truncation]
    return params.uncond_mean_log_var() + windows @ kernel
