import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import ConvergenceWarning

from dgframes.schemas import validate
from dgframes.svm import (LinearSVM, hinge_loss, predict, regularized_loss,
                          representation_error, train_svm)


def blobs(seed=0, M=60, n=5, shift=1.0):
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(M) < 0.5, -1, 1)
    X = rng.standard_normal((M, n)) * 0.8 + shift * y[:, None] * np.eye(n)[0]
    return X, y


def test_two_point_hand_optimum():
    # points 1 and 2 on the positive side, C = 10: the objective
    # (1/2)(1 - w)_+ + (1/2)(1 - 2w)_+ + w^2/20 is minimized at w = 1
    model = train_svm([[1.0], [2.0]], [1, 1], C=10.0)
    assert model.coef_[0] == pytest.approx(1.0, abs=1e-4)
    assert model.dual_coef_ == pytest.approx([1.0, 0.0], abs=1e-4)
    assert model.regularized_loss([[1.0], [2.0]], [1, 1]) == pytest.approx(0.05, abs=1e-4)


@pytest.mark.parametrize("x,C", [([3.0, 4.0], 1.0), ([0.1, 0.2], 0.5),
                                 ([1.0, 0.0], 10.0)])
def test_single_sample_closed_form(x, C):
    x = np.array(x)
    model = train_svm(x[None, :], [1], C=C)
    expect = min(C, 1 / float(x @ x))
    assert model.dual_coef_[0] == pytest.approx(expect, rel=1e-8)


@pytest.mark.parametrize("seed,C", [(0, 1.0), (1, 10.0), (2, 100.0)])
def test_dual_invariants(seed, C):
    X, y = blobs(seed)
    model = train_svm(X, y, C=C, tolerance=1e-8)
    a = model.dual_coef_
    assert (a >= 0).all() and (a <= C / len(y) + 1e-15).all()
    assert representation_error(model, X, y) <= 1e-8
    assert float(model.coef_ @ model.coef_) <= C
    assert model.duality_gap(X, y) <= 1e-6
    assert model.max_coordinate_improvement(X, y) <= 1e-10


def test_kkt_conditions():
    X, y = blobs(3)
    C = 5.0
    model = train_svm(X, y, C=C, tolerance=1e-9)
    g = y * (X @ model.coef_)
    a, up = model.dual_coef_, C / len(y)
    assert (g[a <= 1e-12] >= 1 - 1e-6).all()
    assert (g[a >= up - 1e-12] <= 1 + 1e-6).all()
    inner = (a > 1e-9) & (a < up - 1e-9)
    assert np.allclose(g[inner], 1.0, atol=1e-6)


def test_label_flip_negates():
    X, y = blobs(4)
    a = train_svm(X, y, C=3.0, tolerance=1e-10)
    b = train_svm(X, -y, C=3.0, tolerance=1e-10)
    assert np.allclose(a.coef_, -b.coef_, atol=1e-6)


def test_primal_beats_perturbations():
    X, y = blobs(5)
    C = 2.0
    model = train_svm(X, y, C=C, tolerance=1e-10)
    best = model.regularized_loss(X, y)
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = model.coef_ + 1e-2 * rng.standard_normal(X.shape[1])
        assert regularized_loss(w, X, y, C) >= best - 1e-9


def test_losses():
    X = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, -1.0]])
    y = np.array([1, -1, 1])
    w = np.array([0.5, 0.5])
    # margins 0.5, -1, -1 -> hinge terms 0.5, 2, 2
    assert hinge_loss(w, X, y) == pytest.approx(4.5 / 3)
    assert regularized_loss(w, X, y, 1.0) == pytest.approx(4.5 / 3 + 0.25)
    with pytest.raises(ValueError):
        hinge_loss(w, np.zeros((0, 2)), [])
    with pytest.raises(ValueError):
        hinge_loss(w, np.zeros((1, 3)), [1])
    with pytest.raises(ValueError):
        regularized_loss(w, X, y, 0.0)


def test_predict_ties_to_plus():
    model = train_svm([[1.0, 0.0]], [1], C=1.0)
    assert predict(model, [0.0, 5.0]) == 1
    assert predict(model, [-1.0, 0.0]) == -1


def test_validation_errors():
    with pytest.raises(ValueError):
        LinearSVM().fit([[1.0], [2.0]], [0, 1])
    with pytest.raises(ValueError):
        LinearSVM().fit([[np.nan], [2.0]], [1, -1])
    with pytest.raises(ValueError):
        LinearSVM(C=0).fit([[1.0]], [1])
    model = train_svm([[1.0]], [1])
    with pytest.raises(ValueError):
        model.predict([[1.0, 2.0]])


def test_convergence_warning():
    X, y = blobs(6, M=200, shift=0.2)
    with pytest.warns(ConvergenceWarning):
        model = LinearSVM(C=100.0, tol=1e-12, max_epochs=2).fit(X, y)
    assert not model.converged_


def test_sklearn_api_and_determinism():
    X, y = blobs(7)
    est = LinearSVM(C=2.0, random_state=3)
    assert est.get_params()["C"] == 2.0
    a = clone(est).fit(X, y)
    b = clone(est).fit(X, y)
    assert np.array_equal(a.coef_, b.coef_)
    assert a.score(X, y) > 0.8


def test_serialization_round_trip():
    X, y = blobs(8)
    model = train_svm(X, y, C=1.5)
    doc = json.loads(json.dumps(model.to_dict()))
    validate(doc, "svm_model")
    back = LinearSVM.from_dict(doc)
    assert np.array_equal(back.predict(X), model.predict(X))
    assert back.training_hash_ == model.training_hash_


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 50.0))
def test_box_and_norm_property(seed, C):
    X, y = blobs(seed, M=20, n=3)
    model = train_svm(X, y, C=C)
    assert model.dual_coef_.max() <= C / 20 + 1e-15
    assert float(model.coef_ @ model.coef_) <= C * (1 + 1e-9)
