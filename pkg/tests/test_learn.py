import math

import mpmath
import numpy as np
import pytest

from dgframes.learn import (Combination, SweepConfig, TaskConfig,
                            estimate_rip_delta, generate_task, lemma10_check,
                            lemma11_check, oracle_scale, pair_supports,
                            run_compress_sweep, sridharan_gap_check,
                            theorem2_bound, theorem4_gap_bound,
                            theorem4_measurement_bound)
from dgframes.schemas import SchemaError, validate
from dgframes.sensing import DGSensing, GaussianSensing, make_sensing
from dgframes.svm import train_svm
from dgframes.validation import realify


def gaussian(rows, n, seed=0):
    return np.random.default_rng(seed).standard_normal((rows, n)) / math.sqrt(rows)


# -- task generation -------------------------------------------------------------

def test_task_samples_are_sparse_bounded_and_labelled():
    cfg = TaskConfig(n=64, k=4, R=2.0, M=50, M_eval=30)
    data = generate_task(cfg)
    X = data.X_train
    assert ((X != 0).sum(axis=1) == 4).all()
    assert (np.linalg.norm(X, axis=1) <= 2.0 + 1e-12).all()
    assert np.array_equal(data.y_train, np.where(X @ data.task.planted_w >= 0, 1, -1))
    assert np.linalg.norm(data.task.planted_w) == pytest.approx(1.0)


def test_task_determinism_and_noise():
    a = generate_task(TaskConfig(n=32, k=3, M=40, M_eval=10, seed=5))
    b = generate_task(TaskConfig(n=32, k=3, M=40, M_eval=10, seed=5))
    assert np.array_equal(a.X_train, b.X_train)
    noisy = generate_task(TaskConfig(n=32, k=3, M=400, M_eval=10, seed=5,
                                     label_noise=0.3))
    clean = np.where(noisy.X_train @ noisy.task.planted_w >= 0, 1, -1)
    assert 0.2 < (clean != noisy.y_train).mean() < 0.4


@pytest.mark.parametrize("kw", [dict(k=0), dict(k=9, n=8), dict(M=0),
                                dict(R=0), dict(label_noise=0.5)])
def test_task_config_errors(kw):
    with pytest.raises(ValueError):
        TaskConfig(**kw)


# -- inner products ----------------------------------------------------------------

def test_lemma10_identity_and_gaussian():
    rng = np.random.default_rng(0)
    x, x2 = rng.standard_normal(20), rng.standard_normal(20)
    x, x2 = x / np.linalg.norm(x), x2 / np.linalg.norm(x2)
    res = lemma10_check(np.eye(20), x, x2, R=1.0, epsilon=0.0)
    assert res.satisfied and res.measured == pytest.approx(float(x @ x2))
    A = gaussian(400, 20)
    eps = estimate_rip_delta(A, 20, supports=[np.arange(20)])
    assert lemma10_check(A, x, x2, 1.0, eps).satisfied
    with pytest.raises(ValueError):
        lemma10_check(A, 2 * x, x2, 1.0, eps)


def test_lemma11_holds_on_covered_supports():
    data = generate_task(TaskConfig(n=64, k=3, M=40, M_eval=40))
    X, y = data.X_train, data.y_train
    A = gaussian(24, 64, seed=2)
    C, D = 10.0, 2.0
    model = train_svm(X, y, C)
    rng = np.random.default_rng(1)
    combos = []
    for _ in range(30):
        beta = rng.random(40)
        beta *= D / beta.sum()
        combos.append((Combination(model.dual_coef_, y, X),
                       Combination(beta, y, X)))
    eps = estimate_rip_delta(A, 6, supports=pair_supports(X))
    res = lemma11_check(A, combos, C, D, 1.0, eps)
    assert res.holds.all()


def test_lemma11_rejects_bad_coefficients():
    X = np.eye(3)
    bad = Combination(np.array([-1.0, 0, 0]), np.ones(3), X)
    ok = Combination(np.array([0.1, 0, 0]), np.ones(3), X)
    with pytest.raises(ValueError):
        lemma11_check(np.eye(3), [(bad, ok)], 1.0, 1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        lemma11_check(np.eye(3), [(ok, ok)], 0.01, 1.0, 1.0, 0.1)


# -- RIP -----------------------------------------------------------------------------

def test_rip_exhaustive_vs_sampled():
    A = gaussian(6, 8, seed=3)
    exact = estimate_rip_delta(A, 2, mode="exhaustive")
    sampled = estimate_rip_delta(A, 2, mode="sampled", trials=200)
    assert sampled <= exact + 1e-12
    # brute-force oracle over pairs
    worst = 0.0
    for i in range(8):
        for j in range(i + 1, 8):
            ev = np.linalg.eigvalsh(A[:, [i, j]].T @ A[:, [i, j]])
            worst = max(worst, np.abs(ev - 1).max())
    assert exact == pytest.approx(worst)


def test_rip_duplicate_columns():
    A = gaussian(6, 8, seed=4)
    A /= np.linalg.norm(A, axis=0)
    A[:, 1] = A[:, 0]
    assert estimate_rip_delta(A, 2, mode="exhaustive") >= 1.0 - 1e-12


def test_rip_identity_and_errors():
    assert estimate_rip_delta(np.eye(10), 3, mode="exhaustive") == 0.0
    with pytest.raises(ValueError):
        estimate_rip_delta(np.eye(40), 10, mode="exhaustive")
    with pytest.raises(ValueError):
        estimate_rip_delta(np.eye(4), 2, mode="bogus")


def test_pair_supports_unions():
    X = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 0, 1.0]])
    sups = pair_supports(X)
    assert {tuple(s) for s in sups} == {(0,), (0, 1), (0, 3), (1,), (1, 3), (3,)}


# -- bounds ---------------------------------------------------------------------------

def test_theorem4_against_mpmath():
    mpmath.mp.dps = 40
    o, r, e1 = 5, 0, mpmath.mpf("0.5")
    expect = (2 ** (r + 1) * (r + 2) * o * mpmath.log(2) / e1) ** 2
    assert theorem4_measurement_bound(o, r, 0.5) == pytest.approx(float(expect), rel=1e-12)
    with pytest.raises(ValueError):
        theorem4_measurement_bound(4, 0, 0.5)
    with pytest.raises(ValueError):
        theorem4_measurement_bound(5, 3, 0.5)


def test_theorem4_gap_sigma():
    base = theorem4_gap_bound(1.0, 1.0, 0, 200, 1000, 32, 1024, 0.5)
    assert theorem4_gap_bound(1.0, 1.0, 0, 200, 1000, 32, 1024, 0.5, sigma=1.0) > base
    with pytest.raises(ValueError):
        theorem4_gap_bound(1.0, 1.0, 0, 200, 1000, 32, 1024, 0.5, sigma=-1)


def test_theorem2_bound_formula():
    got = theorem2_bound(4.0, 1.0, 0.1, 0.05, 100)
    assert got == pytest.approx(math.sqrt(4 * (0.1 + math.log(20) / 100)))


# -- sensing ---------------------------------------------------------------------------

def test_realified_dg_preserves_inner_products():
    op = DGSensing(m=5).fit(np.zeros((1, 100)))
    rng = np.random.default_rng(0)
    x, x2 = rng.standard_normal(100), rng.standard_normal(100)
    Ac = op.complex_components_
    assert float(op.transform(x[None])[0] @ op.transform(x2[None])[0]) == \
        pytest.approx(float(np.real(np.vdot(Ac @ x, Ac @ x2))))
    assert op.components_.shape == (64, 100)
    assert np.array_equal(realify(Ac), op.components_)


def test_make_sensing():
    assert make_sensing("gaussian", 10, 20).components_.shape == (10, 20)
    assert make_sensing("dg_frame", 8, 20).components_.shape == (16, 20)
    for kind, rows in (("dg_frame", 12), ("dg_frame", 512), ("bogus", 8)):
        with pytest.raises(ValueError):
            make_sensing(kind, rows, 20)
    with pytest.raises(ValueError):
        DGSensing(m=3, r=0).fit(np.zeros((1, 65)))
    g = GaussianSensing(5, random_state=1).fit(np.zeros((1, 4)))
    assert np.allclose(g.transform(np.eye(4)), g.components_.T)


# -- sweeps -----------------------------------------------------------------------------

SMALL = SweepConfig(task=TaskConfig(n=64, k=3, M=60, M_eval=300),
                    m_list=(8, 64), seeds=(0, 1), C=100.0, rip_pairs=200)


def test_sweep_report_shape_and_schema():
    rep = run_compress_sweep(SMALL)
    assert len(rep.records) == 4
    assert [r["m"] for r in rep.records] == [8, 8, 64, 64]
    validate(rep.to_dict(), "experiment_report")
    assert "seconds" not in rep.to_csv().splitlines()[0]
    tables = rep.plot_tables()
    assert set(tables) == {"accuracy_train_vs_measurements.csv",
                           "accuracy_eval_vs_measurements.csv"}
    for c in rep.chain():
        assert c["z_star_proxy_le_z_AS"] and c["z_star_proxy_le_Aw_S"]


def test_sweep_deterministic_across_jobs():
    a = run_compress_sweep(SMALL, jobs=1)
    b = run_compress_sweep(SMALL, jobs=2)
    assert a.to_csv() == b.to_csv()


def test_identity_sensing_reproduces_data_domain():
    # Gaussian sensing with as many rows as features is not the identity;
    # check the data-domain pieces directly instead
    data = generate_task(TaskConfig(n=32, k=3, M=60, M_eval=100))
    A = np.eye(32)
    w = train_svm(data.X_train, data.y_train, 10.0).coef_
    z = train_svm(data.X_train @ A.T, data.y_train, 10.0).coef_
    assert np.allclose(w, z)
    assert estimate_rip_delta(A, 6, supports=pair_supports(data.X_train)) == 0.0


def test_oracle_scale_improves_loss():
    data = generate_task(TaskConfig(n=32, k=3, M=100, M_eval=10))
    d = data.task.planted_w
    s = oracle_scale(d, data.X_train, data.y_train, 100.0)
    assert 0 <= s <= math.sqrt(200.0) + 1e-12
    from dgframes.svm import regularized_loss
    best = regularized_loss(s * d, data.X_train, data.y_train, 100.0)
    assert best <= regularized_loss(d, data.X_train, data.y_train, 100.0) + 1e-12


def test_sweep_config_validation():
    doc = SMALL.to_dict()
    assert SweepConfig.from_dict(doc) == SMALL
    bad = dict(doc)
    del bad["C"]
    with pytest.raises(SchemaError, match="'C'"):
        SweepConfig.from_dict(bad)
    bad = dict(doc, m_list=[])
    with pytest.raises(SchemaError, match="m_list"):
        SweepConfig.from_dict(bad)


# -- generalization gap -------------------------------------------------------------------

def test_sridharan_trained_only_gives_zero():
    cfg = TaskConfig(n=32, k=3, M=50, M_eval=200)
    rep = sridharan_gap_check(cfg, C=10.0, delta_conf=0.05, repetitions=1)
    assert rep.gaps.tolist() == [0.0] and rep.exceedance_fraction == 0.0


def test_sridharan_gap_shrinks_with_M():
    base = TaskConfig(n=32, k=3, M=25, M_eval=1000)
    d = generate_task(base).task.planted_w
    probes = [s * d for s in (1.0, 2.0, 4.0)]
    small = sridharan_gap_check(base, 10.0, 0.05, 8, probes=probes)
    large = sridharan_gap_check(TaskConfig(n=32, k=3, M=100, M_eval=1000),
                                10.0, 0.05, 8, probes=probes)
    assert large.median_gap < small.median_gap
    assert large.threshold == pytest.approx(small.threshold / 4)


def test_sridharan_probe_errors():
    cfg = TaskConfig(n=8, k=2, M=10, M_eval=10)
    with pytest.raises(ValueError):
        sridharan_gap_check(cfg, 1.0, 0.05, 1, probes=[np.full(8, 10.0)])
    with pytest.raises(ValueError):
        sridharan_gap_check(cfg, 1.0, 1.5, 1)
    with pytest.raises(ValueError):
        sridharan_gap_check(cfg, 1.0, 0.05, 1, include_trained=False)
