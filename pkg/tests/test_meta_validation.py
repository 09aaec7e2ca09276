"""Meta-datasets, holdout splits, eta, the lambda sweep and the elbow."""

import numpy as np
import pytest

from fleetgroup.community import CommunityPartition
from fleetgroup.errors import EmptyValidation, LengthMismatch, TooFewObservations, TooFewPoints
from fleetgroup.fleet_data import EntityDataset, FleetDataset
from fleetgroup.graph import DissimilarityMatrix, cross_rse_matrix, fit_fleet, off_diagonal, symmetrize
from fleetgroup.meta_validation import (
    MetaDataset,
    SweepConfig,
    SweepResult,
    elbow_from_curve,
    elbow_scores,
    eta_from_errors,
    find_elbow,
    lambda_grid,
    lambda_sweep,
    merge_groups,
    meta_accuracy,
    split_train_validation,
)
from fleetgroup.regression import BasisSpec, fit_entity_model, rse

from conftest import line_fleet


def _dis(fleet):
    return symmetrize(cross_rse_matrix(fit_fleet(fleet), fleet))


def test_merge_groups_concatenates_members():
    fleet = line_fleet([1, 2, 3, 4], n_obs=5)
    metas = merge_groups(fleet, [1, 0, 1, 0])
    assert [m.member_entity_ids for m in metas] == [["e1", "e3"], ["e0", "e2"]]
    assert metas[0].n_obs == 10 and metas[0].unit_count == 2
    np.testing.assert_array_equal(metas[0].y, np.concatenate([fleet[1].y, fleet[3].y]))
    with pytest.raises(LengthMismatch):
        merge_groups(fleet, [0, 1])


def test_split_is_stratified_and_deterministic():
    fleet = line_fleet([1, 2], n_obs=10)
    meta = MetaDataset(0, tuple(fleet))
    train, val = split_train_validation(meta, 0.7, seed=3)
    assert train.n_obs == 14 and val.n_obs == 6
    again = split_train_validation(meta, 0.7, seed=3)
    assert again[0] == train and again[1] == val
    other = split_train_validation(meta, 0.7, seed=4)
    assert not other[1] == val


def test_split_rows_partition_each_member():
    fleet = line_fleet([1, 2, 3], n_obs=7, noise=1.0)
    train, val = split_train_validation(MetaDataset(0, tuple(fleet)))
    all_y = np.sort(np.concatenate([e.y for e in fleet]))
    np.testing.assert_array_equal(np.sort(np.concatenate([train.y, val.y])), all_y)


def test_member_split_does_not_depend_on_group():
    fleet = line_fleet([1, 2, 3], n_obs=10, noise=1.0)
    _, alone = split_train_validation(MetaDataset(0, (fleet[1],)))
    _, grouped = split_train_validation(MetaDataset(5, (fleet[0], fleet[1])))
    assert set(alone.y) <= set(grouped.y)


def test_single_observation_members_leave_no_validation():
    e = EntityDataset("a", np.array([[1.0]]), np.array([1.0]))
    f = EntityDataset("b", np.array([[2.0]]), np.array([2.0]))
    with pytest.raises(EmptyValidation):
        split_train_validation(MetaDataset(0, (e, f)))


def test_eta_formula():
    assert eta_from_errors([1.0, 3.0], [3, 1], 4) == pytest.approx(100 - 6 / 4)


def test_meta_accuracy_recomputed_by_hand():
    fleet = line_fleet([1.0, 1.1, 5.0], n_obs=12, noise=0.5)
    part = np.array([0, 0, 1])
    eta, errors = meta_accuracy(fleet, part)
    expected = []
    for meta in merge_groups(fleet, part):
        train, val = split_train_validation(meta)
        expected.append(rse(fit_entity_model(train), val))
    assert errors == expected
    assert eta == pytest.approx(100 - (2 * expected[0] + expected[1]) / 3)


def test_noise_free_fleet_scores_100():
    fleet = line_fleet([2.0, 2.0, 2.0])
    eta, _ = meta_accuracy(fleet, [0, 0, 0])
    assert eta == pytest.approx(100.0, abs=1e-9)


def test_meta_accuracy_too_few_rows():
    fleet = line_fleet([1.0, 2.0], n_obs=2)
    with pytest.raises(TooFewObservations):
        meta_accuracy(fleet, [0, 1], BasisSpec(1))


def test_large_error_warns():
    fleet = line_fleet([1.0, 1000.0], n_obs=10, intercepts=[0.0, 5000.0])
    with pytest.warns(RuntimeWarning):
        eta, _ = meta_accuracy(fleet, [0, 0])
    assert eta < 0


def test_lambda_grid_covers_min_and_max():
    fleet = line_fleet([1, 2, 3, 4, 5], noise=0.5)
    dis = _dis(fleet)
    grid = lambda_grid(dis, 40)
    vals = off_diagonal(dis.values)
    assert grid[0] >= vals.min() and grid[0] - vals.min() < 1e-9
    assert grid[-1] >= vals.max()
    assert np.all(np.diff(grid) > 0)
    assert len(grid) <= 41


def test_sweep_extremes():
    fleet = line_fleet([1, 2, 3, 4], noise=0.5)
    dis = _dis(fleet)
    vals = off_diagonal(dis.values)
    low = lambda_sweep(fleet, dis, config=SweepConfig(lambdas=(vals.min() / 2,)))
    assert low.records[0].k == 4
    high = lambda_sweep(fleet, dis, config=SweepConfig(lambdas=(vals.max() * 2,)))
    assert high.records[0].k == 1


def test_sweep_records_failures_and_continues():
    fleet = line_fleet([1, 2, 3], n_obs=2)
    dis = _dis(fleet)
    vals = off_diagonal(dis.values)
    res = lambda_sweep(fleet, dis, config=SweepConfig(lambdas=(vals.min() / 2, vals.max() * 2)))
    assert [r.failed for r in res.records] == [True, False]
    assert res.n_failed == 1 and list(res.best_per_k) == [1]


def test_best_per_k_keeps_max_eta():
    fleet = line_fleet([1, 1.05, 3, 3.1, 6], noise=0.8, seed=2)
    res = lambda_sweep(fleet, _dis(fleet))
    for k, rec in res.best_per_k.items():
        assert rec.eta == max(r.eta for r in res.records if r.k == k and not r.failed)


def test_elbow_on_sharp_corner():
    ks = np.arange(1, 16)
    d = np.where(ks < 4, 40.0 / ks, 1.0)
    rep = elbow_from_curve(ks, 100 - d)
    assert rep.verdict == "clear_grouping" and rep.k_star == 4


def test_elbow_on_pure_one_over_k_curve():
    ks = np.arange(1, 31)
    rep = elbow_from_curve(ks, 100 - 40.0 / ks)
    assert rep.verdict == "no_grouping"
    assert rep.curvature_score < 0.05


def test_elbow_on_flat_curve():
    rep = elbow_from_curve([1, 2, 3], [90, 90, 90])
    assert rep == type(rep)("no_grouping", None, 0.0, None)


def test_elbow_reference_bend_is_located():
    rep = elbow_from_curve([1, 2, 5, 10, 15], [60, 80, 95, 96, 96.5])
    assert rep.candidate_k == 5


def test_elbow_thresholds_are_respected():
    ks = np.arange(1, 16)
    eta = 100 - np.where(ks < 4, 40.0 / ks, 1.0)
    score = elbow_from_curve(ks, eta).curvature_score
    assert elbow_from_curve(ks, eta, clear_threshold=score + 0.01, fuzzy_threshold=0.1).verdict == "fuzzy_grouping"
    assert elbow_from_curve(ks, eta, clear_threshold=1.0, fuzzy_threshold=1.0).verdict == "no_grouping"
    with pytest.raises(ValueError):
        elbow_from_curve(ks, eta, clear_threshold=0.1, fuzzy_threshold=0.2)


def test_elbow_needs_three_points():
    with pytest.raises(TooFewPoints):
        elbow_from_curve([1, 2], [50, 60])
    with pytest.raises(TooFewPoints):
        find_elbow(SweepResult(()))


def test_elbow_scores_are_in_unit_interval(rng):
    for _ in range(50):
        ks = np.unique(rng.integers(1, 40, size=8))
        if ks.size < 3:
            continue
        s = elbow_scores(ks, 100 - rng.uniform(0, 50, size=ks.size))
        assert np.all((s >= 0) & (s <= 1))
        assert s[0] == 0 and s[-1] == 0
