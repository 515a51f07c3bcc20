import numpy as np
import pytest

from drivecast.errors import ValidationError
from drivecast.learn import Dataset, fit_cart, fit_forest
from drivecast.synth import make_piecewise_dataset


def dataset(X, y):
    names = tuple(f"f{i}" for i in range(X.shape[1]))
    return Dataset(X=np.asarray(X, float), y=np.asarray(y, float),
                   feature_names=names, categorical=())


def test_same_seed_identical_predictions():
    data, _ = make_piecewise_dataset(n_rows=600, seed=1)
    test, _ = make_piecewise_dataset(n_rows=100, seed=2)
    a = fit_forest(data, n_trees=20, seed=9)
    b = fit_forest(data, n_trees=20, seed=9)
    assert np.array_equal(a.predict(test.X), b.predict(test.X))


def test_different_seed_differs():
    data, _ = make_piecewise_dataset(n_rows=600, seed=1)
    test, _ = make_piecewise_dataset(n_rows=100, seed=2)
    a = fit_forest(data, n_trees=5, seed=1)
    b = fit_forest(data, n_trees=5, seed=2)
    assert not np.array_equal(a.predict(test.X), b.predict(test.X))


def test_degenerate_forest_equals_cart():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(300, 4)), rng.normal(size=300)
    data = dataset(X, y)
    forest = fit_forest(data, n_trees=1, min_leaf=3, features_per_split=4,
                        bootstrap=False, seed=5)
    tree = fit_cart(data, min_leaf=3)
    assert np.array_equal(forest.predict(X), tree.predict(X))
    assert forest.trees[0].n_leaves == tree.n_leaves


def test_prediction_is_mean_of_tree_predictions():
    data, _ = make_piecewise_dataset(n_rows=400, seed=4)
    test, _ = make_piecewise_dataset(n_rows=50, seed=5)
    forest = fit_forest(data, n_trees=8, seed=2)
    per_tree = np.vstack([t.predict(test.X) for t in forest.trees])
    assert np.allclose(forest.predict(test.X), per_tree.mean(axis=0), atol=1e-12)


def test_zero_noise_fit_is_strong():
    data, truth = make_piecewise_dataset(n_rows=2000, seed=6, noise_sd=0.0)
    train = Dataset(X=data.X[:1600], y=data.y[:1600])
    test_X, test_y = data.X[1600:], data.y[1600:]
    forest = fit_forest(train, n_trees=60, seed=0)
    pred = forest.predict(test_X)
    ss_res = np.sum((test_y - pred) ** 2)
    ss_tot = np.sum((test_y - test_y.mean()) ** 2)
    assert 1.0 - ss_res / ss_tot >= 0.95


def test_default_mtry_is_one_third():
    data, _ = make_piecewise_dataset(n_rows=200, seed=7)
    forest = fit_forest(data, n_trees=2, seed=0)
    assert forest.params["features_per_split"] == 3    # 9 features // 3


def test_invalid_forest_params_rejected():
    data, _ = make_piecewise_dataset(n_rows=50, seed=8)
    with pytest.raises(ValidationError):
        fit_forest(data, n_trees=0)
    with pytest.raises(ValidationError):
        fit_forest(data, features_per_split=0)
    with pytest.raises(ValidationError):
        fit_forest(data, features_per_split=10)
