import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from desense import classifier as clf
from desense.errors import ConfigError, DataError, DimensionError

import oracles


def test_separable_1d():
    model = clf.train_linear_svm([[-1.0], [1.0]], [0, 1], 1.0)
    assert clf.accuracy(clf.predict(model, [[-1.0], [1.0]]), [0, 1]) == 1.0


def test_xor_is_not_linearly_separable():
    pts = np.array([[0.0, 0.0], [1, 1], [0, 1], [1, 0]])
    y = np.array([0, 0, 1, 1])
    # no halfplane reproduces more than three of the four labels
    assert oracles.best_halfplane_agreement(pts, y == 1) == 0.75
    for c in (0.1, 1.0, 100.0):
        model = clf.train_linear_svm(pts, y, c)
        assert clf.accuracy(clf.predict(model, pts), y) <= 0.75


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 2), st.sampled_from([0.1, 1.0, 10.0]),
       st.integers(0, 2**32 - 1))
def test_dual_matches_brute_force_qp(n, d, c, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    x_aug = clf.augment(x)
    w, alpha, _ = clf.train_binary(x_aug, y, c)
    best, _ = oracles.svm_dual_qp(x_aug, y, c)
    assert clf.dual_objective(x_aug, y, alpha) - best <= 1e-4
    assert np.all((alpha >= 0) & (alpha <= c))
    np.testing.assert_allclose(w, (alpha * y) @ x_aug, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 1.0, 100.0]))
def test_dual_feasibility(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, 40)
    y[:3] = [0, 1, 2]
    model = clf.train_linear_svm(x, y, c)
    for alpha in model.duals:
        assert np.all(alpha >= 0) and np.all(alpha <= c)
    assert np.all(np.isfinite(model.weights))


def test_training_is_deterministic(rng):
    x = rng.normal(size=(60, 4))
    y = (x[:, 0] + 0.3 * rng.normal(size=60) > 0).astype(int)
    a = clf.train_linear_svm(x, y, 1.0)
    b = clf.train_linear_svm(x.copy(), y.copy(), 1.0)
    assert a.weights.tobytes() == b.weights.tobytes()


def test_binary_one_vs_rest_agrees_with_single_hyperplane(rng):
    x = rng.normal(size=(50, 3))
    y = (x @ [1.0, -2.0, 0.5] + 0.5 * rng.normal(size=50) > 0).astype(int)
    model = clf.train_linear_svm(x, y, 1.0)
    w, _, _ = clf.train_binary(clf.augment(x), np.where(y == 1, 1.0, -1.0), 1.0, seed=1)
    single = (clf.augment(x) @ w > 0).astype(int)
    assert np.array_equal(clf.predict(model, x), single)


def test_zero_column_does_not_change_predictions(rng):
    x = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, 40)
    y[:3] = [0, 1, 2]
    base = clf.predict(clf.train_linear_svm(x, y, 1.0), x)
    padded = np.hstack([x, np.zeros((40, 1))])
    assert np.array_equal(clf.predict(clf.train_linear_svm(padded, y, 1.0), padded), base)


def test_predict_tie_rules():
    zero = clf.LinearSvmModel(np.zeros((3, 3)), 1.0, 3)
    assert clf.predict(zero, np.ones((4, 2))).tolist() == [0, 0, 0, 0]
    biased = clf.LinearSvmModel(np.array([[0, 0.3], [0, 0.3], [0, -1.0]]), 1.0, 3)
    assert clf.predict(biased, [[5.0]]).tolist() == [0]


def test_predict_dimension_mismatch():
    model = clf.LinearSvmModel(np.zeros((2, 3)), 1.0, 2)
    with pytest.raises(DimensionError):
        clf.predict(model, np.ones((2, 3)))


def test_train_errors():
    with pytest.raises(DataError):
        clf.train_linear_svm(np.ones((3, 1)), [0, 0, 2], 1.0)
    with pytest.raises(DataError):
        clf.train_linear_svm([[np.inf], [1.0]], [0, 1], 1.0)
    with pytest.raises(ConfigError):
        clf.train_linear_svm([[0.0], [1.0]], [0, 1], 0.0)


def test_accuracy_metrics():
    assert clf.accuracy([0, 1, 1], [0, 1, 1]) == 1.0
    assert clf.per_class_accuracy([0, 1, 1], [0, 1, 1]).tolist() == [1.0, 1.0]
    assert clf.accuracy([1, 0, 1, 0], [0, 1, 0, 1]) == 0.0
    assert clf.accuracy([0, 1, 1], [0, 0, 1]) == pytest.approx(2 / 3)
    assert clf.per_class_accuracy([0, 1, 1], [0, 0, 1]).tolist() == [0.5, 1.0]
    with pytest.raises(DimensionError):
        clf.accuracy([0], [0, 1])


def test_model_round_trip(tmp_path, rng):
    x = rng.normal(size=(30, 4))
    y = rng.integers(0, 3, 30)
    y[:3] = [0, 1, 2]
    model = clf.train_linear_svm(x, y, 0.37)
    model.save(tmp_path / "m.svm")
    back = clf.LinearSvmModel.load(tmp_path / "m.svm")
    assert back.weights.tobytes() == model.weights.tobytes() and back.C == 0.37


# ---------------------------------------------------------------- cross-validation


def test_folds_stratified_and_balanced():
    y = np.repeat([0, 1, 2], [10, 15, 20])
    folds = clf.stratified_folds(y, 5, seed=3)
    for f in range(5):
        assert np.bincount(y[folds == f], minlength=3).tolist() == [2, 3, 4]


def test_folds_impossible():
    with pytest.raises(DataError):
        clf.stratified_folds(np.array([0, 0, 0, 1]), 2, seed=0)
    with pytest.raises(ConfigError):
        clf.CvPlan(folds=1)


def test_single_grid_point(rng):
    x = rng.normal(size=(30, 2))
    y = (x[:, 0] > 0).astype(int)
    best, scores = clf.cross_validate(x, y, clf.CvPlan(folds=3, c_grid=(0.5,)))
    assert best == {"rho": None, "C": 0.5} and len(scores) == 1


def test_duplicated_grid_point(rng):
    x = rng.normal(size=(30, 2))
    y = (x[:, 0] + rng.normal(size=30) > 0).astype(int)
    _, scores = clf.cross_validate(x, y, clf.CvPlan(folds=3, c_grid=(1.0, 1.0)))
    assert scores[0]["accuracy"] == scores[1]["accuracy"]


def test_larger_c_selected_when_small_c_underfits():
    # classes sit far from the origin, so separating them needs a large bias;
    # at C = 1e-4 the regularizer wins and everything lands in one class
    rng = np.random.default_rng(7)
    x = (1 + 0.05 * np.concatenate([rng.normal(-1, 0.2, 40), rng.normal(1, 0.2, 40)]))[:, None]
    y = np.repeat([0, 1], 40)
    small = clf.train_linear_svm(x, y, 1e-4)
    large = clf.train_linear_svm(x, y, 100.0)
    assert clf.accuracy(clf.predict(small, x), y) == 0.5
    assert clf.accuracy(clf.predict(large, x), y) == 1.0
    best, _ = clf.cross_validate(x, y, clf.CvPlan(folds=4, c_grid=(1e-4, 100.0)))
    assert best["C"] == 100.0


def test_ties_prefer_smaller_c_then_smaller_rho(rng):
    x = rng.normal(size=(20, 2))
    y = np.repeat([0, 1], 10)

    def constant(x, y, tr, va, rho, cs):
        return [np.zeros(va.size, dtype=int) for _ in cs]

    best, _ = clf.cross_validate(x, y, clf.CvPlan(folds=2, c_grid=(10.0, 1.0),
                                                  rho_grid=(5.0, 0.5)), constant)
    assert best == {"rho": 0.5, "C": 1.0}


def test_leave_one_out_matches_explicit_loop(rng):
    x = rng.normal(size=(14, 2))
    y = (x[:, 0] - x[:, 1] + 0.8 * rng.normal(size=14) > 0).astype(int)
    plan = clf.CvPlan(folds=14, c_grid=(0.1, 10.0))
    _, scores = clf.cross_validate(x, y, plan)
    for entry in scores:
        hits = []
        for i in range(14):
            keep = np.arange(14) != i
            m = clf.train_linear_svm(x[keep], y[keep], entry["C"])
            hits.append(clf.predict(m, x[i:i + 1])[0] == y[i])
        assert entry["accuracy"] == pytest.approx(np.mean(hits))


def test_cv_thread_count_does_not_change_scores(rng):
    x = rng.normal(size=(60, 3))
    y = rng.integers(0, 3, 60)
    plan = clf.CvPlan(folds=4, c_grid=(0.1, 1.0, 10.0))
    a = clf.cross_validate(x, y, plan, threads=1)
    b = clf.cross_validate(x, y, plan, threads=4)
    assert a == b
