"""scikit-learn style wrapper around the Gibbs samplers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .diagnostics import dic, rank_predictors
from .model import Dataset, Hyperparams, ModelSpec, destandardize_coef, predict, standardize
from .samplers import run_chain


class MultiOutcomeShrinkageRegressor(RegressorMixin, BaseEstimator):
    """Bayesian multi-outcome linear regression with a global-local prior.

    Parameters
    ----------
    family : str
        One of MONG, MOHS, MODL, NaiveNG, NaiveHS, NaiveDL, NoShrinkage.
    iterations, burn_in, thin : int
        Chain length, discarded prefix and thinning of stored draws.
    seed : int
        Master seed; all randomness is derived from it.
    standardize : bool
        Center/scale X and Y before fitting (the default).  Coefficients
        in ``coef_`` are always reported on the raw scale.
    gamma_hc, lambda_c, dl_a : hyperparameters of the NG and DL priors.

    Attributes
    ----------
    coef_ : ndarray (p, K)
        Posterior mean of B on the raw scale.
    intercept_ : ndarray (K,)
        Implied by the standardization means (zero if not standardized).
    psi_ : ndarray (K, K)
        Posterior mean of the error covariance, standardized scale.
    samples_ : PosteriorSamples
    """

    def __init__(self, family="MONG", iterations=3000, burn_in=1000, thin=1, seed=0,
                 standardize=True, gamma_hc=0.5, lambda_c=0.5, dl_a=0.5):
        self.family = family
        self.iterations = iterations
        self.burn_in = burn_in
        self.thin = thin
        self.seed = seed
        self.standardize = standardize
        self.gamma_hc = gamma_hc
        self.lambda_c = lambda_c
        self.dl_a = dl_a

    def _spec(self):
        return ModelSpec(self.family, Hyperparams(gamma_hc=self.gamma_hc, lambda_c=self.lambda_c,
                                                  dl_a=self.dl_a))

    def fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        self._single_output = y.ndim == 1
        Y = y.reshape(-1, 1) if self._single_output else y
        data = Dataset(Y, X)
        if self.standardize:
            data = standardize(data)
        self.data_ = data
        self.samples_ = run_chain(data, self._spec(), self.iterations, self.burn_in, self.thin,
                                  seed=self.seed)
        self.coef_ = destandardize_coef(self.samples_.B_hat, data)
        if data.standardized:
            self.intercept_ = data.y_mean - data.x_mean @ self.coef_
        else:
            self.intercept_ = np.zeros(Y.shape[1])
        self.psi_ = self.samples_.Psi_hat
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        Yhat = predict(self.samples_.B_hat, X, self.data_)
        return Yhat.ravel() if self._single_output else Yhat

    def rank_predictors(self, names=None):
        """Predictors ordered by the posterior mean of their shared local parameter."""
        check_is_fitted(self, "samples_")
        return rank_predictors(self.samples_, self._spec(), names)

    def dic(self):
        """``(DIC, D, p_D)`` on the (possibly standardized) training data."""
        check_is_fitted(self, "samples_")
        return dic(self.samples_, self.data_)
