"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import hashlib

import numpy as np
from sklearn.utils.validation import check_array, check_X_y


def check_signed_labels(y) -> np.ndarray:
    """Return ``y`` as a float array, requiring every label in {-1, +1}."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {y.shape}")
    bad = ~np.isin(y, (-1, 1))
    if bad.any():
        raise ValueError(
            f"labels must be -1 or +1; found {np.unique(y[bad])[:5]}")
    return y.astype(np.float64)


def check_binary_problem(X, y) -> tuple[np.ndarray, np.ndarray]:
    X, y = check_X_y(X, y, dtype=np.float64, ensure_all_finite=True,
                     y_numeric=True)
    return X, check_signed_labels(y)


def check_features(X, n_features: int | None = None) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, expected {n_features}")
    return X


def realify(u: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts along the last axis of vectors, or
    along rows of a matrix: ``<realify(u), realify(v)> == Re <u, v>``."""
    u = np.asarray(u)
    if u.ndim == 1:
        return np.concatenate([u.real, u.imag])
    if u.ndim == 2:
        return np.vstack([u.real, u.imag])
    raise ValueError(f"cannot realify an array of shape {u.shape}")


def data_hash(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def child_seeds(seed: int, n: int) -> list[int]:
    """``n`` independent 32-bit seeds derived from ``seed``."""
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(n)]
