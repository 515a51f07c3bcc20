import numpy as np
import pytest

from drivecast.errors import ValidationError
from drivecast.learn import Dataset, fit_forest, fit_linear, fit_m5, leaf_count
from drivecast.synth import make_piecewise_dataset


def dataset(X, y, categorical=()):
    X = np.asarray(X, dtype=np.float64)
    names = tuple(f"f{i}" for i in range(X.shape[1]))
    return Dataset(X=X, y=np.asarray(y, dtype=np.float64),
                   feature_names=names, categorical=categorical)


def test_globally_linear_collapses_to_one_leaf():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 3))
    y = X @ np.array([2.0, -1.0, 0.5]) + 3.0
    data = dataset(X, y)
    model = fit_m5(data, smoothing_k=0.0)
    assert model.n_leaves == 1
    linear = fit_linear(data)
    assert np.allclose(model.predict(X), linear.predict(X), atol=1e-6)


def test_two_regimes_give_two_leaves_with_their_coefficients():
    rng = np.random.default_rng(1)
    s = rng.uniform(0.0, 20.0, 500)
    y = np.where(s < 10.0, 2.0 * s + 1.0, -3.0 * s + 200.0)
    X = np.column_stack([s, rng.normal(size=500)])
    model = fit_m5(dataset(X, y), smoothing_k=0.0)
    assert model.n_leaves == 2
    root = model.root
    assert root.feature == 0
    assert 9.0 < root.threshold < 11.0
    lo, hi = sorted((root.left, root.right), key=lambda n: n.coef[0])
    assert hi.coef[0] == pytest.approx(2.0, abs=1e-3)
    assert hi.intercept == pytest.approx(1.0, abs=1e-2)
    assert lo.coef[0] == pytest.approx(-3.0, abs=1e-3)
    assert lo.intercept == pytest.approx(200.0, abs=1e-2)


def test_v_shaped_response_recovered_away_from_boundary():
    # the variance-optimal first split is not the regime boundary, so a
    # narrow mixed leaf may straddle it; beyond that band the piecewise
    # lines must be hit exactly
    rng = np.random.default_rng(2)
    s = rng.uniform(0.0, 20.0, 400)
    y = np.where(s < 10.0, 2.0 * s + 1.0, -3.0 * s + 60.0)
    X = np.column_stack([s, rng.normal(size=400)])
    model = fit_m5(dataset(X, y), smoothing_k=0.0)
    grid_s = np.concatenate([np.linspace(0.5, 9.0, 25),
                             np.linspace(11.0, 19.5, 25)])
    grid = np.column_stack([grid_s, np.zeros(50)])
    want = np.where(grid_s < 10.0, 2.0 * grid_s + 1.0, -3.0 * grid_s + 60.0)
    assert np.allclose(model.predict(grid), want, atol=1e-6)


def test_far_fewer_leaves_than_a_forest():
    data, _ = make_piecewise_dataset(n_rows=3000, seed=3)
    m5 = fit_m5(data)
    forest = fit_forest(data, n_trees=20, min_leaf=1, seed=0)
    assert leaf_count(m5) <= 0.05 * leaf_count(forest)


def test_pruning_record_is_consistent():
    data, _ = make_piecewise_dataset(n_rows=1000, seed=4)
    model = fit_m5(data)
    rec = model.pruning_record
    assert rec["leaves_after"] == model.n_leaves
    assert rec["leaves_grown"] >= rec["leaves_after"]
    assert rec["nodes_pruned"] >= 0


def test_smoothing_changes_predictions_near_boundaries():
    data, _ = make_piecewise_dataset(n_rows=1500, seed=5)
    smooth = fit_m5(data, smoothing_k=15.0)
    raw = fit_m5(data, smoothing_k=0.0)
    test, _ = make_piecewise_dataset(n_rows=200, seed=6)
    assert not np.allclose(smooth.predict(test.X), raw.predict(test.X))
    assert smooth.n_leaves == raw.n_leaves      # smoothing is predict-time only


def test_sdr_stop_limits_growth():
    data, _ = make_piecewise_dataset(n_rows=1000, seed=7)
    tight = fit_m5(data, sdr_stop=0.5)
    loose = fit_m5(data, sdr_stop=0.01)
    assert tight.pruning_record["leaves_grown"] < \
           loose.pruning_record["leaves_grown"]


def test_handles_missing_and_categorical_features():
    data, _ = make_piecewise_dataset(n_rows=800, seed=8)
    X = data.X.copy()
    X[::17, 3] = np.nan
    noisy = Dataset(X=X, y=data.y)
    model = fit_m5(noisy)
    preds = model.predict(X)
    assert np.isfinite(preds).all()


def test_invalid_params_rejected():
    data, _ = make_piecewise_dataset(n_rows=100, seed=9)
    with pytest.raises(ValidationError):
        fit_m5(data, min_split=1)
    with pytest.raises(ValidationError):
        fit_m5(data, sdr_stop=-0.1)
    with pytest.raises(ValidationError):
        fit_m5(data, smoothing_k=-1.0)
