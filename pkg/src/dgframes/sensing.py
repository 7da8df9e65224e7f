"""Sensing operators as scikit-learn transformers.

``fit`` only reads the feature count; ``transform`` maps samples to
measurements ``A x``.  DG operators use the first ``n_features`` columns of a
Delsarte-Goethals frame and are realified, so the measurement dimension is
twice the frame's row count.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .field import MODULI
from .frame import Frame
from .validation import check_features, realify


class GaussianSensing(TransformerMixin, BaseEstimator):
    """I.i.d. normal entries with variance ``1 / n_measurements``."""

    def __init__(self, n_measurements=64, random_state=0):
        self.n_measurements = n_measurements
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_features(X)
        if self.n_measurements < 1:
            raise ValueError("n_measurements must be positive")
        rng = np.random.default_rng(self.random_state)
        self.components_ = rng.standard_normal(
            (self.n_measurements, X.shape[1])) / np.sqrt(self.n_measurements)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self)
        return check_features(X, self.n_features_in_) @ self.components_.T

    @property
    def kind(self) -> str:
        return "gaussian"


def smallest_order(m: int, n_features: int) -> int:
    """Least r for which G(m, r) has at least ``n_features`` columns."""
    r = 0
    while (1 << ((r + 2) * m)) < n_features:
        r += 1
    if r > (m - 1) // 2:
        raise ValueError(f"no G({m}, r) has {n_features} columns")
    return r


class DGSensing(TransformerMixin, BaseEstimator):
    """Realified slice of the Delsarte-Goethals frame G(m, r).

    Parameters
    ----------
    m : int
        Frame exponent; the frame has ``2**m`` complex rows.
    r : int or None
        Frame order; ``None`` picks the smallest order with enough columns.
    """

    def __init__(self, m=5, r=None):
        self.m = m
        self.r = r

    def fit(self, X, y=None):
        X = check_features(X)
        n = X.shape[1]
        r = smallest_order(self.m, n) if self.r is None else self.r
        frame = Frame(self.m, r)
        if n > frame.num_cols:
            raise ValueError(f"G({self.m},{r}) has only {frame.num_cols} "
                             f"columns, need {n}")
        self.frame_ = frame
        self.order_ = r
        self.complex_components_ = frame.columns(np.arange(n))
        self.components_ = realify(self.complex_components_)
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self)
        return check_features(X, self.n_features_in_) @ self.components_.T

    @property
    def kind(self) -> str:
        return "dg_frame"


def make_sensing(kind: str, n_measurements: int, n_features: int,
                 seed: int = 0):
    """Fitted operator producing ``n_measurements`` complex rows for DG
    frames (a power of two ``2**m``) or real rows for Gaussian ones."""
    dummy = np.zeros((1, n_features))
    if kind == "gaussian":
        return GaussianSensing(n_measurements, seed).fit(dummy)
    if kind == "dg_frame":
        m = int(n_measurements).bit_length() - 1
        if (1 << m) != n_measurements or m not in MODULI:
            raise ValueError(
                f"DG sensing needs 2**m rows with m in {sorted(MODULI)}, "
                f"got {n_measurements}")
        return DGSensing(m).fit(dummy)
    raise ValueError(f"unknown sensing kind {kind!r}")
