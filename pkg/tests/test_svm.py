import numpy as np
import pytest

from rebalance import svm


def qp_dual_optimum(X, y, C_reg, gamma):
    """Independent QP solution of the SVM dual via cvxpy."""
    import cvxpy as cp

    K = svm.rbf_kernel(X, X, gamma)
    Q = (y[:, None] * y[None, :]) * K
    alpha = cp.Variable(len(y))
    objective = cp.Maximize(cp.sum(alpha) - 0.5 * cp.quad_form(alpha, cp.psd_wrap(Q)))
    problem = cp.Problem(objective, [alpha >= 0, alpha <= C_reg, y @ alpha == 0])
    problem.solve()
    return float(problem.value)


SIX_POINT_FIXTURES = [
    # (points, labels)
    (np.array([[0.0, 0.0], [1.0, 0.1], [0.2, 0.9], [2.0, 2.0], [2.2, 1.1], [1.1, 2.2]]),
     np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])),
    (np.array([[0.0, 0.0], [0.4, 0.1], [2.0, 2.0], [0.2, 0.3], [1.8, 2.1], [1.0, 1.0]]),
     np.array([-1.0, -1.0, 1.0, -1.0, 1.0, 1.0])),
    # overlapping classes: box constraints active
    (np.array([[0.0, 0.0], [1.0, 1.0], [0.1, 0.2], [0.9, 0.8], [0.5, 0.5], [0.4, 0.6]]),
     np.array([-1.0, 1.0, 1.0, -1.0, 1.0, -1.0])),
]


class TestTrain:
    def test_two_point_symmetry(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        model = svm.train(X, y, gamma=2.0)
        assert svm.predict(model, X).tolist() == [-1.0, 1.0]
        margins = svm.decision_function(model, np.array([[0.0]]))
        assert abs(margins[0]) < 1e-9

    def test_separable_training_accuracy(self, rng):
        X = np.vstack([rng.normal((-3, 0), 0.3, (10, 2)), rng.normal((3, 0), 0.3, (10, 2))])
        y = np.array([-1.0] * 10 + [1.0] * 10)
        model = svm.train(X, y)
        assert np.all(svm.predict(model, X) == y)

    @pytest.mark.parametrize("fixture", range(len(SIX_POINT_FIXTURES)))
    def test_dual_matches_qp_oracle(self, fixture):
        X, y = SIX_POINT_FIXTURES[fixture]
        model = svm.train(X, y, C_reg=1.0, gamma=0.7, tol=1e-6)
        assert abs(svm.dual_objective(model) - qp_dual_optimum(X, y, 1.0, 0.7)) < 1e-4

    def test_kkt_on_training_data(self, rng):
        X = np.vstack([rng.normal(0, 1, (30, 3)), rng.normal(1.2, 1, (30, 3))])
        y = np.array([-1.0] * 30 + [1.0] * 30)
        tol = 1e-3
        model = svm.train(X, y, tol=tol)
        alphas = np.zeros(60)
        alphas[model.support_indices] = np.abs(model.dual_coefficients)
        margins = svm.decision_function(model, X)
        for i in range(60):
            r = y[i] * margins[i] - 1.0
            if alphas[i] < 1e-9:
                assert r >= -tol - 1e-9
            elif alphas[i] > 1.0 - 1e-9:
                assert r <= tol + 1e-9
            else:
                assert abs(r) <= tol + 1e-9

    def test_dual_feasibility(self, rng):
        X = rng.random((40, 4))
        y = np.where(rng.random(40) > 0.5, 1.0, -1.0)
        y[:2] = [-1.0, 1.0]
        model = svm.train(X, y)
        assert abs(model.dual_coefficients.sum()) < 1e-9
        assert np.all(np.abs(model.dual_coefficients) <= 1.0 + 1e-12)

    def test_deterministic(self, rng):
        X = rng.random((50, 3))
        y = np.where(rng.random(50) > 0.4, 1.0, -1.0)
        y[:2] = [-1.0, 1.0]
        a = svm.train(X, y)
        b = svm.train(X, y)
        assert np.array_equal(a.dual_coefficients, b.dual_coefficients)
        assert a.bias == b.bias

    def test_rejects_bad_inputs(self, rng):
        X = rng.random((4, 2))
        with pytest.raises(ValueError):
            svm.train(X, np.array([1.0, 1.0, 1.0, 1.0]))
        with pytest.raises(ValueError):
            svm.train(X, np.array([0.0, 1.0, 1.0, 0.0]))
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            svm.train(bad, np.array([-1.0, 1.0, -1.0, 1.0]))

    def test_gamma_scale_matches_definition(self, rng):
        X = rng.random((30, 5)) * 3
        y = np.where(rng.random(30) > 0.5, 1.0, -1.0)
        y[:2] = [-1.0, 1.0]
        model = svm.train(X, y, gamma="scale")
        assert abs(model.gamma - 1.0 / (5 * X.var())) < 1e-12


class TestPredict:
    def test_sign_of_decision_function(self, rng):
        X = rng.random((30, 2))
        y = np.where(X[:, 0] > 0.5, 1.0, -1.0)
        y[:2] = [-1.0, 1.0]
        model = svm.train(X, y)
        Q = rng.random((40, 2))
        margins = svm.decision_function(model, Q)
        preds = svm.predict(model, Q)
        assert np.all(preds == np.where(margins >= 0, 1.0, -1.0))

    def test_margins_match_naive_double_loop(self, rng):
        X = rng.random((25, 3))
        y = np.where(rng.random(25) > 0.5, 1.0, -1.0)
        y[:2] = [-1.0, 1.0]
        model = svm.train(X, y)
        Q = rng.random((8, 3))
        naive = np.empty(8)
        for i, q in enumerate(Q):
            total = 0.0
            for coef, sv in zip(model.dual_coefficients, model.support_vectors):
                total += coef * np.exp(-model.gamma * np.sum((sv - q) ** 2))
            naive[i] = total + model.bias
        assert np.abs(svm.decision_function(model, Q) - naive).max() < 1e-12

    def test_free_support_vector_margin_near_one(self, rng):
        X = np.vstack([rng.normal((-2, 0), 0.5, (15, 2)), rng.normal((2, 0), 0.5, (15, 2))])
        y = np.array([-1.0] * 15 + [1.0] * 15)
        tol = 1e-4
        model = svm.train(X, y, tol=tol)
        alphas = np.abs(model.dual_coefficients)
        free = (alphas > 1e-8) & (alphas < 1.0 - 1e-9)
        assert free.any()
        margins = svm.decision_function(model, model.support_vectors[free])
        assert np.abs(np.abs(margins) - 1.0).max() <= tol + 1e-9

    def test_dimension_mismatch(self, rng):
        X = rng.random((10, 3))
        y = np.array([-1.0, 1.0] * 5)
        model = svm.train(X, y)
        with pytest.raises(ValueError):
            svm.predict(model, rng.random((4, 2)))
