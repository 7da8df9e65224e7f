"""Homogeneous linear soft-margin SVM trained by dual coordinate ascent.

The primal problem is

    min_w  (1/M) sum_i max(0, 1 - y_i w.x_i) + ||w||^2 / (2C)

whose dual keeps ``w = sum_i alpha_i y_i x_i`` with ``0 <= alpha_i <= C/M``.
There is no intercept.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from .validation import (check_binary_problem, check_features,
                         check_signed_labels, data_hash)


def margins(w, X, y) -> np.ndarray:
    return np.asarray(y, dtype=np.float64) * (np.asarray(X) @ np.asarray(w))


def hinge_loss(w, X, y) -> float:
    """Mean of ``max(0, 1 - y w.x)``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("hinge loss of an empty sample set")
    w = np.asarray(w, dtype=np.float64)
    if X.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} != {w.shape[0]}")
    return float(np.maximum(0.0, 1.0 - margins(w, X, y)).mean())


def regularized_loss(w, X, y, C: float) -> float:
    """Hinge loss plus ``||w||^2 / (2C)``."""
    if C <= 0:
        raise ValueError("C must be positive")
    w = np.asarray(w, dtype=np.float64)
    return hinge_loss(w, X, y) + float(w @ w) / (2.0 * C)


class LinearSVM(ClassifierMixin, BaseEstimator):
    """Soft-margin linear SVM without intercept.

    Parameters
    ----------
    C : float
        Regularization scale; the box on each dual variable is ``C / M``.
    tol : float
        Stop once the largest projected-gradient magnitude over an epoch is
        at most ``tol``.
    max_epochs : int
        Upper bound on passes over the data.
    random_state : int
        Seeds the per-epoch coordinate shuffle.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    dual_coef_ : ndarray of shape (n_samples,)
        The ``alpha_i``.
    converged_ : bool
    n_iter_ : int
        Epochs run.
    max_violation_ : float
        Projected-gradient magnitude at the last epoch.
    """

    def __init__(self, C=1.0, tol=1e-6, max_epochs=10_000, random_state=0):
        self.C = C
        self.tol = tol
        self.max_epochs = max_epochs
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_binary_problem(X, y)
        if self.C <= 0:
            raise ValueError("C must be positive")
        M = X.shape[0]
        upper = self.C / M
        rng = np.random.default_rng(self.random_state)

        alpha = np.zeros(M)
        w = np.zeros(X.shape[1])
        Yx = X * y[:, None]
        qd = np.einsum("ij,ij->i", X, X)
        violation = np.inf
        epoch = 0
        for epoch in range(1, self.max_epochs + 1):
            violation = 0.0
            for i in rng.permutation(M):
                g = float(Yx[i] @ w) - 1.0
                a = alpha[i]
                if a <= 0.0:
                    pg = min(g, 0.0)
                elif a >= upper:
                    pg = max(g, 0.0)
                else:
                    pg = g
                if abs(pg) > violation:
                    violation = abs(pg)
                if pg != 0.0 and qd[i] > 0.0:
                    new = min(max(a - g / qd[i], 0.0), upper)
                    if new != a:
                        w += (new - a) * Yx[i]
                        alpha[i] = new
            if violation <= self.tol:
                break

        self.converged_ = bool(violation <= self.tol)
        if not self.converged_:
            warnings.warn(
                f"dual coordinate ascent stopped after {epoch} epochs with "
                f"violation {violation:.3g} > tol={self.tol}",
                ConvergenceWarning)
        # recompute from alpha to drop accumulated round-off
        self.coef_ = Yx.T @ alpha
        self.dual_coef_ = alpha
        self.n_iter_ = epoch
        self.max_violation_ = float(violation)
        self.n_samples_fit_ = M
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([-1, 1])
        self.training_hash_ = data_hash(X, y)
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        X = check_features(X, self.n_features_in_)
        return X @ self.coef_

    def predict(self, X):
        """``sign(w.x)`` with exact zeros sent to +1."""
        return np.where(self.decision_function(X) >= 0, 1, -1)

    # -- objectives -------------------------------------------------------

    def hinge_loss(self, X, y) -> float:
        check_is_fitted(self)
        return hinge_loss(self.coef_, X, y)

    def regularized_loss(self, X, y) -> float:
        check_is_fitted(self)
        return regularized_loss(self.coef_, X, y, self.C)

    def dual_objective(self) -> float:
        """``(sum alpha - ||w||^2 / 2) / C``, comparable to the primal."""
        check_is_fitted(self)
        w = self.coef_
        return float(self.dual_coef_.sum() - 0.5 * w @ w) / self.C

    def duality_gap(self, X, y) -> float:
        return self.regularized_loss(X, y) - self.dual_objective()

    def max_coordinate_improvement(self, X, y) -> float:
        """Largest dual gain achievable by re-optimizing one coordinate."""
        check_is_fitted(self)
        X, y = check_binary_problem(X, y)
        upper = self.C / X.shape[0]
        qd = np.einsum("ij,ij->i", X, X)
        g = y * (X @ self.coef_) - 1.0
        a = self.dual_coef_
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(qd > 0, np.clip(a - g / qd, 0.0, upper) - a, 0.0)
        gain = -(g * step + 0.5 * qd * step ** 2)
        return float(gain.max())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        check_is_fitted(self)
        return {
            "C": float(self.C),
            "M": int(self.n_samples_fit_),
            "alphas": [float(a) for a in self.dual_coef_],
            "w": [float(v) for v in self.coef_],
            "training_hash": self.training_hash_,
            "converged": self.converged_,
            "tol": float(self.tol),
            "n_iter": int(self.n_iter_),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearSVM":
        model = cls(C=doc["C"], tol=doc.get("tol", 1e-6))
        model.coef_ = np.asarray(doc["w"], dtype=np.float64)
        model.dual_coef_ = np.asarray(doc["alphas"], dtype=np.float64)
        model.n_samples_fit_ = int(doc["M"])
        model.n_features_in_ = model.coef_.shape[0]
        model.converged_ = bool(doc["converged"])
        model.n_iter_ = int(doc.get("n_iter", 0))
        model.max_violation_ = float("nan")
        model.training_hash_ = doc["training_hash"]
        model.classes_ = np.array([-1, 1])
        return model


# Module-level functional surface.

SvmModel = LinearSVM


def train_svm(X, y, C: float = 1.0, tolerance: float = 1e-6,
              max_epochs: int = 10_000, seed: int = 0) -> LinearSVM:
    return LinearSVM(C=C, tol=tolerance, max_epochs=max_epochs,
                     random_state=seed).fit(X, y)


def predict(model: LinearSVM, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    return int(model.predict(x.reshape(1, -1))[0])


def representation_error(model: LinearSVM, X, y) -> float:
    """``max |w - sum_i alpha_i y_i x_i|``."""
    y = check_signed_labels(y)
    w = (np.asarray(X) * y[:, None]).T @ model.dual_coef_
    return float(np.abs(model.coef_ - w).max())
