"""Shared small tasks and configs for trainer-level tests."""

import pytest

from altsample.data import RankBuckets, exponential_profile, synth_gaussian_task
from altsample.training import TrainConfig


@pytest.fixture(scope="session")
def lt_task():
    """Small long-tailed task: 6 classes, counts [90, 45, 23, 11, 6, 3]."""
    profile = exponential_profile(6, 90, 30)
    return synth_gaussian_task(
        profile, d_in=8, unlabeled_factor=4, class_sep=3.0, noise_sigma=1.2,
        test_per_class=50, seed=17, split_mode=RankBuckets(2, 2),
    )


@pytest.fixture(scope="session")
def lt_cfg():
    return TrainConfig(
        init_embed_epochs=20, init_classifier_epochs=5, loops=2, stage2_epochs=5,
        stage3_epochs=3, batch_size=32, widths=(24, 24), seed=17,
    )


@pytest.fixture(scope="session")
def mid_task():
    """Closer to the headline task geometry; used for loss-curve checks."""
    profile = exponential_profile(10, 200, 100)
    return synth_gaussian_task(
        profile, d_in=16, unlabeled_factor=5, class_sep=3.5, noise_sigma=1.5,
        test_per_class=60, seed=21,
    )


@pytest.fixture(scope="session")
def mid_cfg():
    return TrainConfig(
        init_embed_epochs=30, init_classifier_epochs=5, loops=2, stage2_epochs=8,
        stage3_epochs=4, batch_size=32, widths=(32, 32), seed=21,
    )


@pytest.fixture(scope="session")
def separable_task():
    """3 well-separated noiseless blobs; anything sensible scores 100%."""
    profile = exponential_profile(3, 30, 5)
    return synth_gaussian_task(
        profile, d_in=4, unlabeled_factor=3, class_sep=4.0, noise_sigma=0.0,
        test_per_class=20, seed=5, split_mode=RankBuckets(1, 1),
    )
