import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exercise_tsc.classify import (LinearModel, fit_logistic, fit_ridge, logistic_gradient,
                                   logistic_objective, select_features_l1, select_ridge_alpha,
                                   softmax)
from exercise_tsc.errors import ShapeMismatchError, SingularSystemError, UnknownLabelError

from oracles import damped_newton_logistic, ridge_gradient_descent, standardize


def problem(n=50, p=10, k=3, seed=0, signal=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * rng.uniform(0.5, 3, p) + rng.uniform(-2, 2, p)
    W = rng.standard_normal((k, p))
    y = np.argmax(signal * X @ W.T + rng.standard_normal((n, k)), axis=1)
    y[:k] = np.arange(k)
    return X, np.array([f"c{i}" for i in y], dtype=object)


def targets(y, classes):
    Y = -np.ones((len(y), len(classes)))
    for i, v in enumerate(y):
        Y[i, classes.index(v)] = 1
    return Y


class TestRidge:
    def test_interpolation_limit(self):
        m = fit_ridge(np.eye(2), ["a", "b"], alpha=1e-12)
        np.testing.assert_allclose(m.decision_function(np.eye(2)), [[1, -1], [-1, 1]], atol=1e-6)

    def test_infinite_penalty(self):
        X, y = problem()
        m = fit_ridge(X, y, alpha=1e12)
        assert np.all(np.abs(m.weights) < 1e-6)

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("alpha", [0.1, 10.0])
    def test_gradient_descent_oracle(self, seed, alpha):
        X, y = problem(seed=seed)
        m = fit_ridge(X, y, alpha=alpha)
        W, b = ridge_gradient_descent(standardize(X), targets(y, list(m.classes)), alpha)
        np.testing.assert_allclose(m.weights, W, atol=1e-4)
        np.testing.assert_allclose(m.biases, b, atol=1e-4)

    def test_dual_matches_primal(self):
        # p > n takes the dual path; compare with the primal normal equations
        X, y = problem(n=20, p=60)
        m = fit_ridge(X, y, alpha=3.0)
        Z = standardize(X)
        Zc = Z - Z.mean(axis=0)
        Y = targets(y, list(m.classes))
        W = np.linalg.solve(Zc.T @ Zc + 3.0 * np.eye(60), Zc.T @ (Y - Y.mean(axis=0)))
        np.testing.assert_allclose(m.weights, W.T, atol=1e-9)

    def test_singular_only_at_zero(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(SingularSystemError):
            fit_ridge(X, ["a", "b", "a"], alpha=0.0)
        fit_ridge(X, ["a", "b", "a"], alpha=1e-9)

    def test_alpha_selection(self):
        X, y = problem(n=120, seed=4)
        best, scores = select_ridge_alpha(X[:80], y[:80], X[80:], y[80:])
        assert best in scores and scores[best] == max(scores.values())

    def test_argmax_consistency(self):
        X, y = problem(seed=5)
        m = fit_ridge(X, y, alpha=1.0)
        np.testing.assert_array_equal(np.argmax(m.predict_proba(X), axis=1),
                                      np.argmax(m.decision_function(X), axis=1))

    def test_constant_column(self):
        X, y = problem()
        X[:, 3] = 7.0
        m = fit_ridge(X, y)
        assert m.scaler_std[3] == 1.0
        assert np.all(np.isfinite(m.weights))


class TestLogistic:
    def test_separable(self):
        x = np.linspace(-1, 1, 40)
        x = x[x != 0][:, None]
        y = np.where(x[:, 0] < 0, "neg", "pos")
        m = fit_logistic(x, y, C=1.0)
        assert np.mean(m.predict(x) == y) == 1.0

    def test_identical_classes(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((30, 3))
        X = np.vstack([X, X])
        y = ["a"] * 30 + ["b"] * 30
        np.testing.assert_allclose(fit_logistic(X, y, C=1.0).predict_proba(X), 0.5, atol=1e-3)

    @pytest.mark.parametrize("seed", range(2))
    def test_newton_oracle(self, seed):
        X, y = problem(n=100, p=20, seed=seed)
        m = fit_logistic(X, y, C=0.01)
        assert m.info["converged"]
        idx = np.array([m.classes.index(v) for v in y])
        Z = standardize(X)
        f_star, _ = damped_newton_logistic(Z, idx, len(m.classes), 0.01)
        f = logistic_objective(m.weights, m.biases, Z, idx, 0.01)
        assert abs(f - f_star) <= 1e-5

    def test_monotone_history(self):
        X, y = problem(n=100, p=20, seed=2)
        for penalty in ("l2", "l1"):
            h = np.array(fit_logistic(X, y, C=0.5, penalty=penalty).info["history"])
            assert np.all(np.diff(h) <= 1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([0.01, 1.0, 100.0]))
    def test_gradient_finite_differences(self, seed, C):
        rng = np.random.default_rng(seed)
        Z = rng.standard_normal((15, 4))
        idx = rng.integers(0, 3, 15)
        W = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        gW, gb = logistic_gradient(W, b, Z, idx, C)
        theta = np.concatenate([W.ravel(), b])
        g = np.concatenate([gW.ravel(), gb])

        def f(t):
            return logistic_objective(t[:12].reshape(3, 4), t[12:], Z, idx, C)

        h = 1e-6
        num = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(15)])
        assert np.linalg.norm(num - g) / max(np.linalg.norm(g), 1e-12) < 1e-5

    def test_l1_sparsity(self):
        X, y = problem(n=100, p=20, seed=1)
        dense = fit_logistic(X, y, C=10.0, penalty="l1")
        sparse = fit_logistic(X, y, C=0.02, penalty="l1")
        assert np.count_nonzero(sparse.weights) < np.count_nonzero(dense.weights)

    def test_mask(self):
        X, y = problem()
        mask = np.zeros(10, dtype=bool)
        mask[[1, 4]] = True
        m = fit_logistic(X, y, C=1.0, feature_mask=mask)
        assert m.weights.shape == (3, 2)
        assert m.predict_proba(X).shape == (50, 3)

    def test_unknown_label(self):
        X, y = problem()
        with pytest.raises(UnknownLabelError):
            fit_logistic(X, y, classes=("c0", "c1"))


class TestSelection:
    def test_random_labels_strong_penalty(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((200, 30))
        y = rng.choice(["a", "b", "c"], 200)
        assert select_features_l1(X, y, C=0.01).sum() <= 1

    def test_predictive_column(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((200, 15))
        y = np.where(X[:, 6] > 0, "up", "down")
        # univariate separability of column 6 is perfect by construction
        mask = select_features_l1(X, y, C=0.05)
        assert mask[6]

    def test_no_penalty_keeps_all(self):
        X, y = problem(n=100, p=8)
        assert select_features_l1(X, y, C=1e6).all()


class TestProba:
    def model(self, W, b, p):
        return LinearModel("logistic", [f"c{i}" for i in range(len(b))], W, b, np.zeros(p),
                           np.ones(p), 1.0)

    def test_uniform(self):
        m = self.model(np.zeros((3, 4)), np.zeros(3), 4)
        np.testing.assert_allclose(m.predict_proba(np.ones((5, 4))), 1 / 3)

    def test_saturation(self):
        assert softmax(np.array([[100.0, 0.0, 0.0]]))[0, 0] == pytest.approx(1.0)

    @given(arrays(np.float64, (6, 4), elements=st.floats(-500, 500)), st.floats(-1e3, 1e3))
    def test_rows_and_shift(self, L, c):
        P = softmax(L)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(softmax(L + c), P, atol=1e-12)

    def test_dimension_mismatch(self):
        m = self.model(np.zeros((2, 4)), np.zeros(2), 4)
        with pytest.raises(ShapeMismatchError):
            m.predict_proba(np.ones((1, 5)))

    @pytest.mark.parametrize("kind", ["ridge", "logistic"])
    def test_persistence(self, tmp_path, kind):
        X, y = problem()
        if kind == "ridge":
            m = fit_ridge(X, y, alpha=2.0)
        else:
            m = fit_logistic(X, y, C=0.5, feature_mask=np.arange(10) % 2 == 0)
        m.save(tmp_path / "m.npz")
        back = LinearModel.load(tmp_path / "m.npz")
        np.testing.assert_array_equal(back.predict_proba(X), m.predict_proba(X))
        assert back.classes == m.classes and back.kind == kind
        back.save(tmp_path / "m2.npz")
        assert (tmp_path / "m.npz").read_bytes() == (tmp_path / "m2.npz").read_bytes()
