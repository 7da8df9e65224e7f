"""Fisher linear discriminant with a PCA pre-projection (Fisherfaces)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted, check_X_y

from .validation import check_features

RIDGE = 1e-8


@dataclass
class ScatterSet:
    S_W: np.ndarray
    S_B: np.ndarray
    S_T: np.ndarray
    class_means: np.ndarray
    global_mean: np.ndarray
    class_counts: np.ndarray
    classes: np.ndarray

    @property
    def N(self) -> int:
        return int(self.class_counts.sum())

    @property
    def c(self) -> int:
        return len(self.classes)


def compute_scatter(X, y) -> ScatterSet:
    """Within, between (class-size weighted) and total scatter matrices."""
    X, y = check_X_y(X, y, dtype=np.float64)
    classes = unique_labels(y)
    if len(classes) < 2:
        raise ValueError("scatter matrices need at least two classes")
    mean = X.mean(axis=0)
    d = X.shape[1]
    S_W = np.zeros((d, d))
    S_B = np.zeros((d, d))
    means, counts = [], []
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        D = Xc - mc
        S_W += D.T @ D
        diff = (mc - mean)[:, None]
        S_B += len(Xc) * (diff @ diff.T)
        means.append(mc)
        counts.append(len(Xc))
    D = X - mean
    return ScatterSet(S_W, S_B, D.T @ D, np.array(means), mean,
                      np.array(counts), classes)


def fisher_criterion(W, scatter: ScatterSet) -> float:
    """``|W^T S_B W| / |W^T S_W W|``."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    num = np.linalg.det(W.T @ scatter.S_B @ W)
    den_m = W.T @ scatter.S_W @ W
    den = np.linalg.det(den_m)
    scale = max(np.abs(den_m).max(), np.abs(scatter.S_W).max(), 1e-300)
    if abs(den) <= 1e-12 * scale ** W.shape[1]:
        raise np.linalg.LinAlgError(
            "within-class scatter is singular along W")
    return float(num / den)


def _column_signs(W: np.ndarray) -> np.ndarray:
    """Signs making the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(W), axis=0)
    signs = np.sign(W[idx, np.arange(W.shape[1])])
    signs[signs == 0] = 1
    return signs


class FisherDiscriminant(ClassifierMixin, TransformerMixin, BaseEstimator):
    """PCA to ``N - c`` dimensions (when needed), then FLD to ``c - 1``.

    The PCA stage keeps the leading eigenvectors of the total scatter and
    runs only when the feature count exceeds ``N - c``.  Prediction is the
    nearest class centroid in the discriminant space, ties to the lowest
    class.

    Attributes
    ----------
    pca_components_ : ndarray of shape (n_features, d_pca)
    fld_components_ : ndarray of shape (d_pca, n_discriminants)
    components_ : ndarray of shape (n_features, n_discriminants)
        Combined projection ``pca_components_ @ fld_components_``.
    eigenvalues_ : ndarray
        Generalized eigenvalues, nonincreasing.
    centroids_ : ndarray of shape (n_classes, n_discriminants)
    ridge_ : float
        Ridge added to the reduced within-class scatter (0 if none).
    """

    def __init__(self, n_components=None):
        self.n_components = n_components

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        scatter = compute_scatter(X, y)
        N, n = X.shape
        c = scatter.c
        self.classes_ = scatter.classes
        self.mean_ = scatter.global_mean

        if n > N - c:
            evals, evecs = np.linalg.eigh(scatter.S_T)
            W_pca = evecs[:, ::-1][:, :N - c]
        else:
            W_pca = np.eye(n)
        self.pca_components_ = W_pca

        Sw = W_pca.T @ scatter.S_W @ W_pca
        Sb = W_pca.T @ scatter.S_B @ W_pca
        dim = Sw.shape[0]
        ridge = 0.0
        if np.linalg.eigvalsh(Sw).min() <= 1e-12 * max(np.trace(Sw), 1e-300):
            ridge = RIDGE * np.trace(Sw) / dim
            if ridge == 0:
                ridge = RIDGE
            Sw = Sw + ridge * np.eye(dim)
        self.ridge_ = ridge
        self.reduced_within_ = Sw
        self.reduced_between_ = Sb

        evals, evecs = scipy.linalg.eigh(Sb, Sw)
        keep = min(c - 1, dim)
        if self.n_components is not None:
            keep = min(keep, self.n_components)
        order = np.argsort(evals)[::-1][:keep]
        self.eigenvalues_ = evals[order]
        W_fld = evecs[:, order]
        W_fld = W_fld * _column_signs(W_pca @ W_fld)
        self.fld_components_ = W_fld
        self.components_ = W_pca @ W_fld
        self.n_features_in_ = n

        Z = self.transform(X)
        self.centroids_ = np.array([Z[y == k].mean(axis=0)
                                    for k in self.classes_])
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = check_features(X, self.n_features_in_)
        return (X - self.mean_) @ self.components_

    def predict(self, X):
        Z = self.transform(X)
        d = ((Z[:, None, :] - self.centroids_[None, :, :]) ** 2).sum(axis=2)
        # argmin returns the first minimum, i.e. the lowest class
        return self.classes_[np.argmin(d, axis=1)]

    def eigen_residuals(self) -> np.ndarray:
        """Relative residuals ``||S_B w - lambda S_W w|| / ||S_B w||`` in the
        reduced space."""
        check_is_fitted(self)
        W = self.fld_components_
        Sb, Sw = self.reduced_between_, self.reduced_within_
        lhs = Sb @ W
        rhs = (Sw @ W) * self.eigenvalues_
        scale = np.maximum(np.linalg.norm(lhs, axis=0),
                           np.linalg.norm(rhs, axis=0))
        return np.linalg.norm(lhs - rhs, axis=0) / np.maximum(scale, 1e-300)

    def to_dict(self) -> dict:
        check_is_fitted(self)
        return {
            "classes": self.classes_.tolist(),
            "mean": self.mean_.tolist(),
            "pca_components": self.pca_components_.tolist(),
            "fld_components": self.fld_components_.tolist(),
            "eigenvalues": self.eigenvalues_.tolist(),
            "centroids": self.centroids_.tolist(),
            "ridge": self.ridge_,
        }


FldModel = FisherDiscriminant


def fit_pca_fld(X, y) -> FisherDiscriminant:
    return FisherDiscriminant().fit(X, y)


def classify_fld(model: FisherDiscriminant, x):
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def class_separation(Z, y) -> float:
    """``trace(S_B) / trace(S_W)`` of the given coordinates."""
    s = compute_scatter(Z, y)
    return float(np.trace(s.S_B) / np.trace(s.S_W))
