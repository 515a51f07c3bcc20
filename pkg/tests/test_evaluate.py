import dataclasses

import numpy as np
import pytest

from drivecast.errors import ValidationError
from drivecast.evaluate import (aggregate, binned_impact, cross_validate,
                                ecdf, kfold, mae, mdi, r_squared,
                                train_test_matrix)
from drivecast.learn import Dataset, fit_forest
from drivecast.synth import SynthConfig, make_piecewise_dataset, synth_trace
from drivecast.trace import join_samples


# --- metrics -----------------------------------------------------------------

def test_r2_perfect_and_mean_predictor():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == 0.0


def test_r2_hand_case():
    got = r_squared([1.0, 2.0, 3.0, 4.0], [1.5, 2.0, 3.0, 3.5])
    assert got == pytest.approx(0.9, abs=1e-12)    # 1 - 0.5/5


def test_r2_undefined_for_constant_actuals():
    with pytest.raises(ValidationError):
        r_squared([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_mae_cases():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae([0.0, 10.0], [1.0, 9.0]) == 1.0
    rng = np.random.default_rng(0)
    y = rng.normal(size=50)
    assert mae(y, y + 0.75) == pytest.approx(0.75, abs=1e-12)


def test_metric_inputs_validated():
    with pytest.raises(ValidationError):
        r_squared([1.0], [1.0])                    # needs two points
    with pytest.raises(ValidationError):
        mae([1.0, 2.0], [1.0])                     # length mismatch
    with pytest.raises(ValidationError):
        mae([1.0, np.nan], [1.0, 2.0])             # non-finite


# --- folds -------------------------------------------------------------------

def test_kfold_partitions_everything():
    folds = kfold(100, k=10, seed=0)
    assert len(folds) == 10
    all_test = np.concatenate([te for _, te in folds])
    assert sorted(all_test) == list(range(100))
    for tr, te in folds:
        assert len(te) == 10
        assert set(tr) | set(te) == set(range(100))
        assert not set(tr) & set(te)


def test_kfold_uneven_sizes_differ_by_at_most_one():
    folds = kfold(13, k=10, seed=1)
    sizes = sorted(len(te) for _, te in folds)
    assert sizes == [1, 1, 1, 1, 1, 1, 1, 2, 2, 2]


def test_kfold_seeded_determinism():
    a = kfold(40, k=5, seed=7)
    b = kfold(40, k=5, seed=7)
    c = kfold(40, k=5, seed=8)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    assert any(not np.array_equal(x[1], y[1]) for x, y in zip(a, c))


def test_kfold_size_gate():
    with pytest.raises(ValidationError, match="5 folds from 3 rows"):
        kfold(3, k=5)


# --- aggregation ---------------------------------------------------------------

@pytest.fixture(scope="module")
def mno_samples():
    res = synth_trace(SynthConfig(duration=1200.0, cadence=2.0, seed=5))
    return join_samples(res.trace).samples


def test_aggregate_by_mno(mno_samples):
    agg = aggregate(mno_samples, "mno", k=10)
    keys = [key for key, _ in agg.groups]
    assert keys == [("A",), ("B",), ("C",)]
    total = sum(d.n for _, d in agg.groups) + sum(n for _, n in agg.dropped)
    assert total == len(mno_samples)


def test_aggregate_by_cell_matches_group_by(mno_samples):
    agg = aggregate(mno_samples, "cell", k=2)
    brute = {}
    for s in mno_samples:
        brute.setdefault((s.mno, s.cell_id), []).append(s.label)
    for key, data in agg.groups:
        assert sorted(data.y) == sorted(brute[key])
    kept = {key for key, _ in agg.groups}
    small = {key for key, n in agg.dropped}
    assert kept | small == set(brute)
    assert all(len(brute[k]) < 4 for k in small)       # N < 2k gate


def test_aggregate_unknown_level(mno_samples):
    with pytest.raises(ValidationError):
        aggregate(mno_samples, "region")


# --- cross-validation ----------------------------------------------------------

def test_cross_validate_strong_on_noiseless_data():
    data, _ = make_piecewise_dataset(n_rows=2000, seed=1, noise_sd=0.0)
    rep = cross_validate("rf", data, k=5, seed=0,
                         learner_params={"n_trees": 40})
    assert rep.r2 >= 0.95
    assert rep.n == 2000 and rep.k == 5
    assert len(rep.folds) == 5
    assert rep.r2_fold_mean == pytest.approx(
        np.mean([f[2] for f in rep.folds]), abs=1e-12)


def test_cross_validate_no_signal_scores_near_zero():
    rng = np.random.default_rng(3)
    data = Dataset(X=rng.normal(size=(400, 9)), y=rng.normal(size=400),
                   categorical=())
    rep = cross_validate("linear", data, k=5, seed=0)
    assert rep.r2 < 0.1


def test_cross_validate_deterministic():
    data, _ = make_piecewise_dataset(n_rows=500, seed=2)
    a = cross_validate("rf", data, k=4, seed=3, learner_params={"n_trees": 10})
    b = cross_validate("rf", data, k=4, seed=3, learner_params={"n_trees": 10})
    assert a.r2 == b.r2 and a.mae == b.mae


# --- transfer matrix -----------------------------------------------------------

def test_matrix_identical_groups_near_symmetric():
    a, _ = make_piecewise_dataset(n_rows=1500, seed=4)
    b, _ = make_piecewise_dataset(n_rows=1500, seed=5)
    res = train_test_matrix([("p", a), ("q", b)], "rf", k=5, seed=0,
                            learner_params={"n_trees": 30})
    r2 = res.r2
    assert r2.shape == (2, 2)
    # same generating rule: training elsewhere barely hurts
    for i in range(2):
        for j in range(2):
            if i != j:
                assert r2[i, j] >= r2[j, j] - 0.05


def test_matrix_disjoint_rules_transfer_poorly():
    a, _ = make_piecewise_dataset(n_rows=1500, seed=6, rule="standard")
    b, _ = make_piecewise_dataset(n_rows=1500, seed=7, rule="mirrored")
    res = train_test_matrix([("std", a), ("mir", b)], "rf", k=5, seed=0,
                            learner_params={"n_trees": 30})
    r2 = res.r2
    assert r2[0, 1] < r2[1, 1] - 0.3
    assert r2[1, 0] < r2[0, 0] - 0.3


def test_matrix_hand_check_off_diagonal():
    a, _ = make_piecewise_dataset(n_rows=400, seed=8)
    b, _ = make_piecewise_dataset(n_rows=300, seed=9)
    res = train_test_matrix([("a", a), ("b", b)], "rf", k=3, seed=1,
                            learner_params={"n_trees": 10})
    model = fit_forest(a, n_trees=10, seed=_row_seed(1, 0))
    want = r_squared(b.y, model.predict(b.X))
    assert res.r2[0, 1] == pytest.approx(want, abs=1e-12)


def _row_seed(seed, row):
    import numpy as np
    ss = np.random.SeedSequence(seed).spawn(row + 1)[row]
    return int(ss.generate_state(1)[0] >> 1)


def test_matrix_needs_two_groups():
    a, _ = make_piecewise_dataset(n_rows=100, seed=10)
    with pytest.raises(ValidationError):
        train_test_matrix([("a", a)], "linear")


# --- importance ----------------------------------------------------------------

def test_single_feature_signal_dominates_importance():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(800, 4))
    y = np.sin(X[:, 2]) * 5.0
    data = Dataset(X=X, y=y, feature_names=("a", "b", "c", "d"),
                   categorical=())
    forest = fit_forest(data, n_trees=30, seed=0, features_per_split=4)
    scores = mdi(forest)
    assert scores[2] > 0.9
    assert scores.sum() == pytest.approx(1.0, abs=1e-9)


def test_constant_feature_has_exactly_zero_importance():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(500, 3))
    X[:, 1] = 7.0                                  # never splittable
    y = X[:, 0] * 2.0 + rng.normal(scale=0.1, size=500)
    data = Dataset(X=X, y=y, feature_names=("a", "b", "c"), categorical=())
    forest = fit_forest(data, n_trees=20, seed=1)
    scores = mdi(forest)
    assert scores[1] == 0.0
    assert scores[0] > scores[2]


def test_symmetric_features_get_similar_importance():
    rng = np.random.default_rng(13)
    diffs = []
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        X = rng.normal(size=(300, 2))
        y = X[:, 0] + X[:, 1]
        data = Dataset(X=X, y=y, feature_names=("a", "b"), categorical=())
        scores = mdi(fit_forest(data, n_trees=15, seed=seed))
        diffs.append(abs(scores[0] - scores[1]))
    assert np.mean(diffs) < 0.1


# --- indicator impact and ecdf ---------------------------------------------------

def test_binned_impact_constant_labels(mno_samples):
    flat = [dataclasses.replace(s, label=5.0) for s in mno_samples[:200]]
    bins = binned_impact(flat, "sinr", n_bins=4)
    for b in bins:
        assert b.mean == 5.0
        assert b.ci_lo == b.ci_hi == 5.0


def test_binned_impact_matches_direct_computation(mno_samples):
    bins = binned_impact(mno_samples, "rsrp", n_bins=8)
    xs = np.array([s.features.rsrp for s in mno_samples], dtype=float)
    ys = np.array([s.label for s in mno_samples])
    lo, hi = xs.min(), xs.max()
    edges = np.linspace(lo, hi, 9)
    k = 0
    for b_idx in range(8):
        a, b = edges[b_idx], edges[b_idx + 1]
        if b_idx == 7:
            mask = (xs >= a) & (xs <= b)
        else:
            mask = (xs >= a) & (xs < b)
        if not mask.any():
            continue
        got = bins[k]
        assert got.count == int(mask.sum())
        assert got.mean == pytest.approx(ys[mask].mean(), abs=1e-12)
        k += 1
    assert k == len(bins)


def test_binned_impact_single_bin_is_global_mean(mno_samples):
    bins = binned_impact(mno_samples, "sinr", n_bins=1)
    ys = np.array([s.label for s in mno_samples])
    assert len(bins) == 1
    assert bins[0].mean == pytest.approx(ys.mean(), abs=1e-12)
    assert bins[0].count == len(mno_samples)


def test_ecdf_frozen_cases():
    assert ecdf([5.0]) == [(5.0, 1.0)]
    assert ecdf([1.0, 2.0, 2.0, 4.0]) == [(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]


def test_ecdf_monotone_and_complete():
    rng = np.random.default_rng(14)
    pts = ecdf(rng.integers(0, 20, size=300).astype(float))
    xs = [p[0] for p in pts]
    ps = [p[1] for p in pts]
    assert xs == sorted(xs) and ps == sorted(ps)
    assert ps[-1] == 1.0
    with pytest.raises(ValidationError):
        ecdf([])
