"""Batch-plan statistics against binomial oracles, plus coverage and determinism."""

import numpy as np
import pytest

from altsample.data import LabeledSet, PseudoLabeledSet, exponential_profile
from altsample.errors import ConfigError, DataError
from altsample.samplers import (
    SOURCE_LABELED,
    SOURCE_PSEUDO,
    balanced_steps,
    class_balanced_batches,
    merge_per_class,
    mixed_union_batches,
    per_class_rows,
    random_batches,
)


def labels_from_profile(profile):
    return np.repeat(np.arange(profile.num_classes), profile.counts)


def test_random_batches_cover_each_id_once():
    plan = random_batches(103, 16, seed=0)
    ids = np.sort(plan.all_rows()[:, 1])
    np.testing.assert_array_equal(ids, np.arange(103))
    sizes = [len(b) for b in plan]
    assert sizes[:-1] == [16] * (len(sizes) - 1)
    assert sizes[-1] == 103 - 16 * (len(sizes) - 1)


def test_random_batches_deterministic():
    a = random_batches(50, 8, seed=9)
    b = random_batches(50, 8, seed=9)
    np.testing.assert_array_equal(a.all_rows(), b.all_rows())
    c = random_batches(50, 8, seed=10)
    assert not np.array_equal(a.all_rows(), c.all_rows())


def test_random_batches_class_share_matches_prior():
    # over >= 1e5 sampled ids from the imb=100 profile, the class-0 share
    # sits within +-0.01 of n_0 / N (binomial oracle; coverage makes it tight)
    profile = exponential_profile(10, 5000, 100)
    labels = labels_from_profile(profile)
    n = profile.total
    drawn = 0
    hits = 0
    epoch = 0
    while drawn < 10**5:
        plan = random_batches(n, 256, seed=epoch)
        ids = plan.all_rows()[:, 1]
        hits += int((labels[ids] == 0).sum())
        drawn += len(ids)
        epoch += 1
    assert abs(hits / drawn - profile.counts[0] / n) < 0.01


def test_class_balanced_frequencies_within_four_sigma():
    profile = exponential_profile(10, 5000, 100)
    labels = labels_from_profile(profile)
    per_class = per_class_rows(labels, 10, SOURCE_LABELED)
    draws = 10**5
    plan = class_balanced_batches(per_class, 1000, draws // 1000, seed=11)
    got = labels[plan.all_rows()[:, 1]]
    freq = np.bincount(got, minlength=10) / draws
    sigma = np.sqrt(0.1 * 0.9 / draws)
    assert np.all(np.abs(freq - 0.1) < 4 * sigma)


def test_class_balanced_uniform_data_matches_uniform_sampling():
    # n_j = N/C for all j: picking class then instance is uniform over samples
    labels = np.repeat(np.arange(4), 25)
    per_class = per_class_rows(labels, 4, SOURCE_LABELED)
    plan = class_balanced_batches(per_class, 500, 80, seed=5)
    ids = plan.all_rows()[:, 1]
    counts = np.bincount(ids, minlength=100)
    expected = len(ids) / 100
    sigma = np.sqrt(len(ids) * (1 / 100) * (99 / 100))
    assert np.all(np.abs(counts - expected) < 5 * sigma)


def test_class_balanced_singleton_class_share():
    labels = np.array([0] * 99 + [1])
    per_class = per_class_rows(labels, 2, SOURCE_LABELED)
    plan = class_balanced_batches(per_class, 1000, 50, seed=2)
    ids = plan.all_rows()[:, 1]
    share = (ids == 99).mean()
    assert abs(share - 0.5) < 0.02


def test_class_balanced_rejects_empty_class():
    labels = np.array([0, 0, 2])
    per_class = per_class_rows(labels, 3, SOURCE_LABELED)
    with pytest.raises(DataError, match="class 1"):
        class_balanced_batches(per_class, 4, 2, seed=0)


def test_class_balanced_deterministic():
    labels = np.repeat(np.arange(3), 7)
    per_class = per_class_rows(labels, 3, SOURCE_LABELED)
    a = class_balanced_batches(per_class, 5, 4, seed=3)
    b = class_balanced_batches(per_class, 5, 4, seed=3)
    np.testing.assert_array_equal(a.all_rows(), b.all_rows())


def make_union(n, m, d=2):
    rng = np.random.default_rng(0)
    labeled = LabeledSet(rng.normal(size=(n, d)), np.zeros(n, dtype=np.int64), 2)
    pseudo = PseudoLabeledSet(np.arange(m), np.ones(m, dtype=np.int64), 2)
    return labeled, pseudo


def test_mixed_union_covers_both_sets_once():
    labeled, pseudo = make_union(100, 500)
    plan = mixed_union_batches(labeled, pseudo, 64, seed=1)
    rows = plan.all_rows()
    assert len(rows) == 600
    lab = rows[rows[:, 0] == SOURCE_LABELED][:, 1]
    pse = rows[rows[:, 0] == SOURCE_PSEUDO][:, 1]
    np.testing.assert_array_equal(np.sort(lab), np.arange(100))
    np.testing.assert_array_equal(np.sort(pse), np.arange(500))


def test_mixed_union_empty_pseudo_reduces_to_random():
    labeled, pseudo = make_union(40, 0)
    plan = mixed_union_batches(labeled, pseudo, 8, seed=4)
    rows = plan.all_rows()
    assert np.all(rows[:, 0] == SOURCE_LABELED)
    np.testing.assert_array_equal(np.sort(rows[:, 1]), np.arange(40))


def test_mixed_union_labeled_fraction_matches_prior():
    # expected labeled fraction per batch is N / (N + M); averaged over many
    # batches the empirical mean lands within +-0.01 (hypergeometric oracle)
    labeled, pseudo = make_union(100, 500)
    fractions = []
    seed = 0
    while len(fractions) < 10**4:
        plan = mixed_union_batches(labeled, pseudo, 60, seed=seed)
        fractions.extend((b[:, 0] == SOURCE_LABELED).mean() for b in plan)
        seed += 1
    assert abs(np.mean(fractions) - 100 / 600) < 0.01


def test_merge_per_class_concatenates_sources():
    a = per_class_rows(np.array([0, 1, 1]), 2, SOURCE_LABELED)
    b = per_class_rows(np.array([1, 0, 0]), 2, SOURCE_PSEUDO)
    merged = merge_per_class(a, b)
    assert len(merged[0]) == 3 and len(merged[1]) == 3
    assert set(merged[0][:, 0]) == {SOURCE_LABELED, SOURCE_PSEUDO}


def test_balanced_steps_ceil():
    assert balanced_steps(100, 32) == 4
    assert balanced_steps(96, 32) == 3
    assert balanced_steps(1, 32) == 1


def test_bad_batch_sizes_rejected():
    with pytest.raises(ConfigError):
        random_batches(10, 0, seed=0)
    with pytest.raises(ConfigError):
        class_balanced_batches([np.zeros((1, 2), dtype=np.int64)], 4, 0, seed=0)
