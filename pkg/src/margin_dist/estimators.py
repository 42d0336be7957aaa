"""scikit-learn compatible wrappers around the solvers and baselines.

Every estimator maps the two classes to -1/+1 (larger label -> +1),
optionally appends a constant bias feature, trains one of the functional
solvers and keeps the result in ``model_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import FmmConfig, train_fmm, train_lssvm, train_mamc
from .core import Dataset, KernelKind, KernelSpec, classify_scores, decision_scores
from .kernel_solver import train_kernel
from .linear_solver import SolverConfig, train_linear


def add_bias_column(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


class _MarginClassifier(ClassifierMixin, BaseEstimator):
    """Label mapping and bias handling shared by the concrete classifiers."""

    fit_intercept: bool

    def _train(self, data: Dataset):
        raise NotImplementedError

    def _prepare(self, X):
        return add_bias_column(X) if self.fit_intercept else X

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        classes = np.unique(y)
        if set(classes.tolist()) <= {-1, 1}:
            self.classes_ = np.array([-1, 1])
        elif len(classes) == 2:
            self.classes_ = classes
        else:
            raise ValueError(f"expected a binary problem, got {len(classes)} classes")
        y_pm = np.where(y == self.classes_[1], 1, -1)
        self.n_features_in_ = X.shape[1]
        self.model_ = self._train(Dataset(self._prepare(X), y_pm))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}")
        return decision_scores(self.model_, self._prepare(X))

    def predict(self, X):
        labels = classify_scores(self.decision_function(X))
        return self.classes_[(labels > 0).astype(int)]


def _kernel_spec(kernel: str, gamma, n_features: int) -> KernelSpec:
    kind = KernelKind(kernel)
    if kind is KernelKind.GAUSSIAN:
        return KernelSpec(kind, 1.0 / n_features if gamma is None else gamma)
    return KernelSpec(kind)


class MSVMAvClassifier(_MarginClassifier):
    """Margin semi-variance / average-margin classifier.

    Parameters
    ----------
    alpha : float, default=1.0
        Proximal weight of the average-margin step.
    beta : float, default=1.0
        Proximal weight of the semi-variance step.
    max_iter : int, default=100
        Number of alternating iterations.
    kernel : {'linear', 'gaussian'}, default='linear'
        'linear' trains a primal weight vector, 'gaussian' trains kernel
        coefficients over the training instances.
    gamma : float, default=None
        Gaussian width; ``1 / n_features`` when None.
    tol : float, default=None
        Optional early-stopping tolerance on the iterate change.
    fit_intercept : bool, default=True
        Append a constant 1 feature before training.
    """

    def __init__(self, alpha=1.0, beta=1.0, max_iter=100, kernel="linear", gamma=None,
                 tol=None, fit_intercept=True):
        self.alpha = alpha
        self.beta = beta
        self.max_iter = max_iter
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.fit_intercept = fit_intercept

    def _train(self, data):
        config = SolverConfig(T=self.max_iter, alpha=self.alpha, beta=self.beta, tol=self.tol)
        if KernelKind(self.kernel) is KernelKind.LINEAR:
            return train_linear(data, config)
        return train_kernel(data, _kernel_spec(self.kernel, self.gamma, self.n_features_in_), config)


class MAMCClassifier(_MarginClassifier):
    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def _train(self, data):
        return train_mamc(data)


class LSSVMClassifier(_MarginClassifier):
    def __init__(self, C=1.0, kernel="linear", gamma=None, fit_intercept=True):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.fit_intercept = fit_intercept

    def _train(self, data):
        return train_lssvm(data, self.C, _kernel_spec(self.kernel, self.gamma, self.n_features_in_))


class FMMClassifier(_MarginClassifier):
    def __init__(self, step=2.0**-4, max_iter=100, momentum=0.9, fit_intercept=True):
        self.step = step
        self.max_iter = max_iter
        self.momentum = momentum
        self.fit_intercept = fit_intercept

    def _train(self, data):
        return train_fmm(data, FmmConfig(step=self.step, iterations=self.max_iter,
                                         momentum=self.momentum))


ESTIMATORS = {
    "msvmav": MSVMAvClassifier,
    "mamc": MAMCClassifier,
    "lssvm": LSSVMClassifier,
    "fmm": FMMClassifier,
}
