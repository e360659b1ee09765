"""Evaluation against a brute-force confusion-matrix oracle, and report files."""

import numpy as np
import pytest

from altsample.data import LabeledSet, PseudoLabeledSet, SplitSpec
from altsample.errors import ConfigError, UnsupportedOperation
from altsample.metrics import (
    MetricsReport,
    comparison_grid,
    emit_report,
    evaluate,
    parse_report,
    pseudo_accuracy,
)
from altsample.network import BALANCED, ClassifierParams, EmbeddingParams, ModelState

SPLITS_4 = SplitSpec(["many", "medium", "few", "few"])


def identity_model(num_classes):
    """Model whose balanced head predicts argmax of the input features."""
    d = num_classes
    emb = EmbeddingParams([np.eye(d)], [np.zeros(d)])
    head = ClassifierParams(np.eye(num_classes), np.zeros(num_classes))
    other = ClassifierParams(np.zeros((num_classes, d)), np.zeros(num_classes))
    return ModelState(emb, head, other)


def one_hot_set(labels, num_classes):
    feats = np.eye(num_classes)[labels] * 10.0
    return LabeledSet(feats, np.asarray(labels, dtype=np.int64), num_classes)


def test_perfect_predictor_scores_one_everywhere():
    labels = np.tile(np.arange(4), 5)
    rep = evaluate(identity_model(4), BALANCED, one_hot_set(labels, 4), SPLITS_4)
    assert rep.overall == 1.0
    assert all(v == 1.0 for v in rep.split_acc.values())
    np.testing.assert_array_equal(rep.per_class, np.ones(4))


def test_constant_predictor_on_balanced_test():
    model = identity_model(4)
    model.head_balanced.weight[:] = 0.0  # zero logits: argmax tie-break to class 0
    labels = np.tile(np.arange(4), 5)
    rep = evaluate(model, BALANCED, one_hot_set(labels, 4), SPLITS_4)
    assert rep.overall == pytest.approx(0.25)
    assert rep.split_acc["many"] == 1.0
    assert rep.split_acc["few"] == 0.0


def confusion_oracle(true, pred, num_classes):
    cm = np.zeros((num_classes, num_classes), dtype=int)
    for t, p in zip(true, pred):
        cm[t, p] += 1
    return cm


def test_split_accuracy_matches_confusion_matrix_oracle():
    rng = np.random.default_rng(3)
    labels = np.tile(np.arange(4), 25)
    test = one_hot_set(labels, 4)
    # corrupt some features so predictions are imperfect but deterministic
    test.features[rng.random(100) < 0.4] = np.eye(4)[0] * 10.0
    model = identity_model(4)
    rep = evaluate(model, BALANCED, test, SPLITS_4)
    pred = test.features.argmax(axis=1)
    cm = confusion_oracle(test.labels, pred, 4)
    for split, classes in (("many", [0]), ("medium", [1]), ("few", [2, 3])):
        correct = sum(cm[c, c] for c in classes)
        total = sum(cm[c, :].sum() for c in classes)
        assert rep.split_acc[split] == pytest.approx(correct / total)
    assert rep.overall == pytest.approx(np.trace(cm) / 100)
    weighted = (rep.per_class * np.bincount(test.labels, minlength=4)).sum() / 100
    assert rep.overall == pytest.approx(weighted)


def test_evaluate_rejects_missing_class():
    labels = np.array([0, 1, 2, 0, 1, 2])
    with pytest.raises(ConfigError, match="class 3"):
        evaluate(identity_model(4), BALANCED, one_hot_set(labels, 4), SPLITS_4)


def test_evaluate_warns_on_unbalanced_test():
    labels = np.array([0, 0, 0, 1, 2, 3])
    with pytest.warns(UserWarning, match="balanced"):
        evaluate(identity_model(4), BALANCED, one_hot_set(labels, 4), SPLITS_4)


def test_pseudo_accuracy_all_correct():
    hidden = np.array([0, 1, 2, 3, 3])
    pseudo = PseudoLabeledSet(np.arange(5), hidden.copy(), 4)
    rep = pseudo_accuracy(pseudo, hidden, SPLITS_4)
    assert rep.overall == 1.0
    assert all(v == 1.0 for v in rep.split_acc.values())


def test_pseudo_accuracy_weighted_by_long_tail():
    # 90 many-shot samples all correct, 10 few-shot all wrong: head dominates
    hidden = np.array([0] * 90 + [3] * 10)
    guesses = np.array([0] * 90 + [0] * 10)
    pseudo = PseudoLabeledSet(np.arange(100), guesses, 4)
    rep = pseudo_accuracy(pseudo, hidden, SPLITS_4)
    assert rep.overall == pytest.approx(0.9)
    assert rep.overall > 90 / 100 * 1.0 - 1e-12
    assert rep.split_acc["few"] == 0.0


def test_pseudo_accuracy_matches_recount():
    rng = np.random.default_rng(8)
    hidden = rng.integers(0, 4, size=200)
    guesses = rng.integers(0, 4, size=200)
    pseudo = PseudoLabeledSet(np.arange(200), guesses, 4)
    rep = pseudo_accuracy(pseudo, hidden, SPLITS_4)
    assert rep.overall == pytest.approx((hidden == guesses).mean())


def test_pseudo_accuracy_requires_hidden_labels():
    pseudo = PseudoLabeledSet(np.arange(3), np.zeros(3, dtype=np.int64), 4)
    with pytest.raises(UnsupportedOperation):
        pseudo_accuracy(pseudo, None, SPLITS_4)


def sample_report(loop=0):
    return MetricsReport(
        overall=0.625,
        split_acc={"many": 0.9, "medium": 0.5, "few": 0.25},
        per_class=np.array([0.9, 0.5, 0.3, 0.2]),
        split_counts={"many": 40, "medium": 40, "few": 20},
        config_hash="cafe1234",
        seed=7,
        loop=loop,
    )


def test_emit_parse_roundtrip_rows_text(tmp_path):
    path = str(tmp_path / "report.txt")
    emit_report([sample_report(0), sample_report(1)], path, "rows-text")
    back = parse_report(path)
    assert back["config_hash"] == "cafe1234"
    assert back["seed"] == 7
    assert back["rows"][1]["loop"] == 1
    assert back["rows"][0]["overall"] == pytest.approx(0.625)
    assert back["rows"][0]["few"] == pytest.approx(0.25)


def test_emit_parse_roundtrip_structured(tmp_path):
    path = str(tmp_path / "report.json")
    emit_report([sample_report()], path, "structured", extra={"batch_size": 64})
    back = parse_report(path)
    assert back["rows"][0]["overall"] == pytest.approx(0.625)
    assert back["config_hash"] == "cafe1234"


def test_emit_empty_reports_header_only(tmp_path):
    path = str(tmp_path / "empty.txt")
    emit_report([], path, "rows-text", config_hash="x", seed=1)
    lines = open(path).read().splitlines()
    assert lines[0] == "# config_hash=x"
    assert lines[2].startswith("loop\t")
    assert len(lines) == 3


def test_emit_deterministic_bytes(tmp_path):
    p1, p2 = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    emit_report([sample_report()], p1, "rows-text")
    emit_report([sample_report()], p2, "rows-text")
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_comparison_grid_layout():
    grid = comparison_grid([("train", sample_report()), ("ablate:R+R", sample_report())])
    lines = grid.splitlines()
    assert lines[0].split() == ["method", "overall", "many", "medium", "few"]
    assert lines[1].startswith("train")
    assert "62.50" in lines[1]


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ConfigError):
        emit_report([], str(tmp_path / "x"), "csv")
