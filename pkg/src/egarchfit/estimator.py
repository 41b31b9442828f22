"""sklearn-style wrapper around the SQMLE so the fitter composes with
pipelines, cloning, and grid tooling (get_params/set_params round-trip).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .estimation import ParameterBox, fit, quasi_likelihood
from .experiments import forecast
from .inversion import filter_series
from .model import ModelParams, SeriesSample
from .validation import as_float_array


class EgarchEstimator(BaseEstimator):
    """EGARCH(1,1) volatility estimator with the stable QML fit.

    Parameters
    ----------
    mode : {"sqmle", "qmle"}
        Whether to constrain the fit to the empirically invertible region.
    epsilon : float
        Slack of the empirical invertibility constraint.
    init : tuple of 4 floats
        Starting point (alpha, beta, gamma, delta) for the optimizer.
    beta_max : float
        Box bound |beta| <= beta_max < 1.
    g0 : float or None
        Filter initial value; defaults to the starting point's alpha/(1-beta).

    Attributes (after fit)
    ----------------------
    result_ : FitResult
    params_ : ModelParams
    std_errors_ : ndarray of shape (4,)
    cov_ : ndarray of shape (4, 4)
    """

    def __init__(
        self,
        mode: str = "sqmle",
        epsilon: float = 1e-4,
        init: tuple = (0.0, 0.2, 0.0, 0.2),
        beta_max: float = 0.999,
        g0: float | None = None,
    ):
        self.mode = mode
        self.epsilon = epsilon
        self.init = init
        self.beta_max = beta_max
        self.g0 = g0

    def _series(self, X) -> SeriesSample:
        if isinstance(X, SeriesSample):
            return X
        return SeriesSample(returns=as_float_array(X, "X"))

    def fit(self, X, y=None):
        """Fit on a 1-D return series (or an (n, 1) column)."""
        series = self._series(X)
        self.result_ = fit(
            series,
            theta0=ModelParams(*self.init),
            box=ParameterBox(beta_max=self.beta_max),
            mode=self.mode,
            epsilon=self.epsilon,
            g0=self.g0,
        )
        self.params_ = self.result_.theta_hat
        self.std_errors_ = self.result_.std_errors
        self.cov_ = self.result_.cov
        self.n_features_in_ = 1
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit before transform/predict")

    def transform(self, X) -> np.ndarray:
        """Filtered conditional variance series exp(g_t) for X."""
        self._check_fitted()
        path = filter_series(self.params_, self._series(X))
        return np.exp(path.g)

    def predict(self, X) -> float:
        """One-step-ahead variance forecast after the last observation of X."""
        self._check_fitted()
        return forecast(self.params_, self._series(X))

    def score(self, X, y=None) -> float:
        """Negative quasi-likelihood (higher is better), sklearn convention."""
        self._check_fitted()
        return -quasi_likelihood(self.params_, self._series(X)).value
