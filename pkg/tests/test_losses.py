"""Loss oracles (closed forms, scipy cross-checks) and prediction-memory semantics."""

import numpy as np
import pytest
from scipy.stats import entropy as scipy_kl

from altsample.errors import ContractViolation
from altsample.losses import (
    LossValue,
    PredictionMemory,
    ce_grad,
    clamp_stats,
    consistency_kl,
    cross_entropy,
    kl_grad,
    semi_loss,
    semi_loss_grad,
    sup_loss_grad,
)
from altsample.network import backward_batch, forward_batch, grad_check, init_model

LN10 = 2.302585092994046  # ln 10, frozen from a 50-digit evaluation
KL_HALF_VS_91 = 0.5108256237659907  # 0.5*ln(5/9) + 0.5*ln(5), same source


def test_cross_entropy_one_hot_is_zero():
    assert cross_entropy(np.array([0.0, 1.0, 0.0]), 1) == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_uniform_ln10():
    assert cross_entropy(np.full(10, 0.1), 3) == pytest.approx(LN10, abs=1e-9)


def test_cross_entropy_two_class_closed_form():
    assert cross_entropy(np.array([0.75, 0.25]), 1) == pytest.approx(1.3862943611198906, abs=1e-12)


def test_kl_identity_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    assert consistency_kl(p, p) == pytest.approx(0.0, abs=1e-15)
    one_hot = np.array([1.0, 0.0])
    assert consistency_kl(one_hot, one_hot) == pytest.approx(0.0, abs=1e-15)


def test_kl_closed_form_value():
    got = consistency_kl(np.array([0.5, 0.5]), np.array([0.9, 0.1]))
    assert got == pytest.approx(KL_HALF_VS_91, abs=1e-6)


def test_kl_nonnegative_and_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = rng.dirichlet(np.ones(6))
        q = rng.dirichlet(np.ones(6))
        got = consistency_kl(p, q)
        assert got >= 0.0
        np.testing.assert_allclose(got, scipy_kl(p, q), rtol=1e-10)


def test_kl_clamp_counter_fires_on_zero_support():
    clamp_stats.reset()
    consistency_kl(np.array([0.5, 0.5]), np.array([1.0, 0.0]))
    assert clamp_stats.count == 1


def test_kl_grad_agrees_with_scalar_op():
    rng = np.random.default_rng(8)
    probs = rng.dirichlet(np.ones(5), size=4)
    prev = rng.dirichlet(np.ones(5), size=4)
    mask = np.array([True, True, False, True])
    value, _ = kl_grad(probs, prev, mask)
    expected = sum(consistency_kl(prev[i], probs[i]) for i in range(4) if mask[i]) / 4
    assert value == pytest.approx(expected, rel=1e-12)


def test_semi_loss_additivity_exact():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=(6, 4))
    labels = rng.integers(0, 4, size=6)
    prev = rng.dirichlet(np.ones(4), size=6)
    mask = np.ones(6, dtype=bool)
    value, _ = semi_loss_grad(logits, labels, prev, mask, lam=0.7)
    assert abs(value.total - (value.ce_part + 0.7 * value.consistency_part)) <= 1e-12


def test_semi_loss_lambda_zero_equals_plain_ce():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=(5, 3))
    labels = rng.integers(0, 3, size=5)
    prev = rng.dirichlet(np.ones(3), size=5)
    value, dlogits = semi_loss_grad(logits, labels, prev, np.ones(5, dtype=bool), lam=0.0)
    ce, d_ce = ce_grad(logits, labels)
    assert value.total == pytest.approx(ce, rel=1e-15)
    np.testing.assert_array_equal(dlogits, d_ce)


def test_semi_loss_cold_start_has_zero_consistency():
    model = init_model(4, (6,), 3, np.random.default_rng(0))
    memory = PredictionMemory(4, 0, 3)
    x = np.random.default_rng(1).normal(size=(4, 4))
    labels = np.array([0, 1, 2, 0])
    sources = np.zeros(4, dtype=np.int64)
    ids = np.arange(4)
    value = semi_loss(x, labels, sources, ids, model, memory, lam=1.0)
    assert value.consistency_part == 0.0


def test_semi_loss_stationary_model_has_zero_consistency():
    model = init_model(4, (6,), 3, np.random.default_rng(0))
    memory = PredictionMemory(4, 0, 3)
    x = np.random.default_rng(1).normal(size=(4, 4))
    labels = np.array([0, 1, 2, 0])
    sources = np.zeros(4, dtype=np.int64)
    ids = np.arange(4)
    semi_loss(x, labels, sources, ids, model, memory, lam=1.0)
    memory.advance_epoch()
    value = semi_loss(x, labels, sources, ids, model, memory, lam=1.0)
    assert value.consistency_part == pytest.approx(0.0, abs=1e-15)


def test_memory_roundtrip_ordering():
    memory = PredictionMemory(3, 2, 4)
    sources = np.array([0, 1])
    ids = np.array([2, 0])
    probs = np.array([[0.1, 0.2, 0.3, 0.4], [0.25, 0.25, 0.25, 0.25]])
    memory.store(sources, ids, probs)
    _, mask = memory.lookup(sources, ids)
    assert not mask.any()  # current epoch's writes are invisible until advance
    memory.advance_epoch()
    prev, mask = memory.lookup(sources, ids)
    assert mask.all()
    np.testing.assert_array_equal(prev, probs)
    memory.advance_epoch()  # nothing stored this epoch: entries drop out
    _, mask = memory.lookup(sources, ids)
    assert not mask.any()


def test_semi_gradient_matches_finite_differences_through_kl():
    rng = np.random.default_rng(12)
    model = init_model(5, (8, 6), 3, rng)
    x = rng.normal(size=(4, 5))
    labels = rng.integers(0, 3, size=4)
    prev = rng.dirichlet(np.ones(3), size=4)
    mask = np.ones(4, dtype=bool)

    def loss_fn():
        cache = forward_batch(x, model.embedding, model.head_random)
        value, _ = semi_loss_grad(cache.logits, labels, prev, mask, lam=1.0)
        return value.total

    cache = forward_batch(x, model.embedding, model.head_random)
    _, dlogits = semi_loss_grad(cache.logits, labels, prev, mask, lam=1.0)
    grads = backward_batch(cache, dlogits, model.embedding, model.head_random)
    params = model.embedding.params() + model.head_random.params()
    assert grad_check(loss_fn, params, grads.params(), eps=1e-5) < 1e-4


def test_sup_loss_perfect_classifier_is_zero():
    logits = np.array([[30.0, 0.0], [0.0, 30.0]])
    value, _ = sup_loss_grad(logits, np.array([0, 1]))
    assert value.total == pytest.approx(0.0, abs=1e-12)


def test_sup_loss_uniform_ln10():
    value, _ = sup_loss_grad(np.zeros((3, 10)), np.array([0, 5, 9]))
    assert value.total == pytest.approx(LN10, abs=1e-12)


def test_sup_loss_rejects_pseudo_sources():
    with pytest.raises(ContractViolation):
        sup_loss_grad(np.zeros((2, 3)), np.array([0, 1]), sources=np.array([0, 1]))


def test_loss_value_total_property():
    v = LossValue(ce_part=1.5, consistency_part=0.25, lam=2.0)
    assert v.total == 2.0
