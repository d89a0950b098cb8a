"""Estimator-style wrappers: fit validates parameters, transform maps functions to sequences."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .operators import OperatorParams, apply_measure_kernel, apply_parametric, sharp_norm
from .validation import check_functions, check_measure, check_positive_int, check_real


class HilbertTypeOperator(TransformerMixin, BaseEstimator):
    """The parametric operator as a transformer.

    ``transform(X)`` takes a list of PiecewisePowerFunction and returns the
    array of leading output values, shape (len(X), n_terms).
    """

    def __init__(self, p=2.0, lam=None, theta1=1.0, theta2=1.0, alpha=0.0, beta=0.0,
                 n_terms=100, rel_tol=1e-9):
        self.p = p
        self.lam = lam
        self.theta1 = theta1
        self.theta2 = theta2
        self.alpha = alpha
        self.beta = beta
        self.n_terms = n_terms
        self.rel_tol = rel_tol

    def _params(self):
        p = check_real(self.p, "p", low=1.0)
        lam = self.lam
        if lam is None:
            lam = 1.0 + (self.beta - self.alpha) / p
        return OperatorParams(p, check_real(lam, "lam", low=0.0), self.theta1, self.theta2,
                              self.alpha, self.beta)

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        check_positive_int(self.n_terms, "n_terms")
        check_real(self.rel_tol, "rel_tol", low=1e-13, high=1e-3, low_open=False,
                   high_open=False)
        self.threshold_ = self.params_.threshold
        self.bounded_ = self.params_.lam >= self.threshold_
        self.sharp_norm_ = sharp_norm(self.params_) if self.params_.is_critical else None
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        fs = check_functions(X)
        n = np.arange(1, self.n_terms + 1, dtype=float)
        return np.vstack([apply_parametric(self.params_, f, n, rel_tol=self.rel_tol)
                          for f in fs])


class MeasureHilbertOperator(TransformerMixin, BaseEstimator):
    """The operator with kernel n^(beta/p) x^(-alpha/p) mu_lam[x + n]."""

    def __init__(self, measure=None, p=2.0, lam=1.0, alpha=0.0, beta=0.0, n_terms=20,
                 rel_tol=1e-8):
        self.measure = measure
        self.p = p
        self.lam = lam
        self.alpha = alpha
        self.beta = beta
        self.n_terms = n_terms
        self.rel_tol = rel_tol

    def fit(self, X=None, y=None):
        self.measure_ = check_measure(self.measure)
        self.params_ = OperatorParams(self.p, self.lam, 1.0, 1.0, self.alpha, self.beta)
        check_positive_int(self.n_terms, "n_terms")
        self.total_mass_ = self.measure_.total_mass
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        fs = check_functions(X)
        n = np.arange(1, self.n_terms + 1, dtype=float)
        return np.vstack([apply_measure_kernel(self.params_, self.measure_, f, n,
                                               rel_tol=self.rel_tol) for f in fs])
