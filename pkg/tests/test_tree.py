import numpy as np
import pytest

from alefx import DataError, Dataset
from alefx.models import TreeModel, eval_model_batch, fit_regression_tree


def brute_best_split(X, y, min_leaf=1):
    """Exhaustive search over features and midpoints; returns (sse, feature, threshold)."""
    best = (np.inf, -1, 0.0)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for a, b in zip(vals[:-1], vals[1:]):
            t = 0.5 * (a + b)
            left = X[:, f] <= t
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[~left] - y[~left].mean()) ** 2).sum()
            if sse < best[0] - 1e-12:
                best = (sse, f, t)
    return best


class TestExamples:
    def test_single_leaf_model(self):
        m = TreeModel.leaf(2.5, 3)
        np.testing.assert_array_equal(eval_model_batch(m, np.zeros((4, 3))), 2.5)

    def test_depth_one(self):
        m = TreeModel([0, -1, -1], [0.5, 0, 0], [1, -1, -1], [2, -1, -1], [0.5, 0.0, 1.0], 1)
        np.testing.assert_array_equal(m.predict(np.array([[0.2], [0.9]])), [0.0, 1.0])

    def test_step_recovered(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(200, 1))
        y = (x[:, 0] > 0.5).astype(float)
        tree = fit_regression_tree(Dataset(["x1"], x, y), max_leaves=2)
        _, f, t = brute_best_split(x, y)
        assert tree.n_leaves == 2
        assert tree.feature[0] == f == 0
        assert tree.threshold[0] == t
        assert abs(t - 0.5) < 0.02
        np.testing.assert_array_equal(sorted(tree.value[1:]), [0.0, 1.0])

    def test_budget_one_is_mean(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 2))
        y = rng.normal(size=50)
        tree = fit_regression_tree(Dataset(["a", "b"], X, y), max_leaves=1)
        np.testing.assert_allclose(tree.predict(X), y.mean())

    def test_mse_decreases_with_budget(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(size=(100, 1))
        data = Dataset(["x1"], x, x[:, 0])
        mses = []
        for L in range(1, 101):
            tree = fit_regression_tree(data, max_leaves=L, min_leaf=1)
            mses.append(np.mean((tree.predict(x) - x[:, 0]) ** 2))
            if mses[-1] == 0:
                break
        assert all(b < a for a, b in zip(mses, mses[1:]))


class TestStructure:
    @pytest.fixture
    def fitted(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(300, 3))
        y = np.sin(6 * X[:, 0]) + X[:, 1] ** 2 + rng.normal(scale=0.1, size=300)
        data = Dataset(["a", "b", "c"], X, y)
        return data, fit_regression_tree(data, max_leaves=25, min_leaf=3)

    def test_leaf_budget(self, fitted):
        _, tree = fitted
        assert tree.n_leaves == 25

    def test_leaves_hold_resident_means(self, fitted):
        data, tree = fitted
        leaf = tree.apply(data.values)
        assert np.all(tree.feature[leaf] < 0)
        for node in np.unique(leaf):
            resident = data.response[leaf == node]
            assert len(resident) >= 3
            assert tree.value[node] == pytest.approx(resident.mean(), rel=1e-12)

    def test_piecewise_constant(self, fitted):
        data, tree = fitted
        leaf = tree.apply(data.values)
        rng = np.random.default_rng(4)
        for node in np.unique(leaf)[:10]:
            members = data.values[leaf == node]
            lo, hi = members.min(axis=0), members.max(axis=0)
            probe = rng.uniform(lo, hi, size=(20, 3))
            np.testing.assert_array_equal(tree.apply(probe), node)
            np.testing.assert_array_equal(tree.predict(probe), tree.value[node])

    def test_root_is_exhaustive_optimum(self, fitted):
        data, tree = fitted
        _, f, t = brute_best_split(data.values, data.response, min_leaf=3)
        assert (tree.feature[0], tree.threshold[0]) == (f, t)


class TestEdgeCases:
    def test_constant_response(self):
        X = np.random.default_rng(5).normal(size=(30, 2))
        tree = fit_regression_tree(Dataset(["a", "b"], X, np.full(30, 4.0)), max_leaves=10)
        assert tree.n_leaves == 1

    def test_tie_goes_to_lower_feature(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        tree = fit_regression_tree(Dataset(["a", "b"], X, [0.0, 0.0, 1.0, 1.0]), max_leaves=2)
        assert tree.feature[0] == 0

    def test_tie_goes_to_lower_threshold(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        tree = fit_regression_tree(Dataset(["a"], X, [0.0, 1.0, 1.0, 2.0]), max_leaves=2)
        assert tree.threshold[0] == 0.5

    def test_needs_response(self):
        with pytest.raises(DataError):
            fit_regression_tree(Dataset(["a"], [[0.0], [1.0]]))

    def test_min_leaf_too_large(self):
        with pytest.raises(DataError):
            fit_regression_tree(Dataset(["a"], [[0.0], [1.0], [2.0]], [1, 2, 3]), min_leaf=2)

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        X = rng.integers(0, 4, size=(80, 3)).astype(float)
        data = Dataset(["a", "b", "c"], X, rng.normal(size=80))
        t1 = fit_regression_tree(data, max_leaves=15)
        t2 = fit_regression_tree(data, max_leaves=15)
        np.testing.assert_array_equal(t1.feature, t2.feature)
        np.testing.assert_array_equal(t1.threshold, t2.threshold)
