"""Decoupled initialization, the three-stage alternate learning loop, the
matched-budget pseudo-label baseline, and the sampling/data ablation variants.

Stage contracts enforced here:
  * Stage 1 assigns pseudo labels with the balanced head; no thresholding.
  * Stage 2 fine-tunes the embedding and the random-trained head on the union
    of true and pseudo labels; the balanced head is untouched.
  * Stage 3 fine-tunes the balanced head alone on labeled data under
    class-balanced sampling; the embedding and the random head are untouched.

Cosine schedules and momentum buffers restart at each phase boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledSet, PseudoLabeledSet, SplitSpec, UnlabeledSet
from .errors import ConfigError, NumericError
from .losses import PredictionMemory, ce_grad, semi_loss_grad, sup_loss_grad
from .metrics import MetricsReport, evaluate, pseudo_accuracy
from .network import (
    BALANCED,
    SGD,
    ModelState,
    backward_batch,
    embed,
    forward_batch,
    head_backward,
    head_logits,
    init_classifier,
    init_model,
    predict_labels,
)
from .samplers import (
    SOURCE_LABELED,
    SOURCE_PSEUDO,
    balanced_steps,
    class_balanced_batches,
    merge_per_class,
    mixed_union_batches,
    per_class_rows,
    random_batches,
)

VARIANTS = ("R+C", "R+R", "C+R", "C+C", "classifier_on_union", "no_unsup_embed")


@dataclass
class TrainConfig:
    """Hyperparameters; the defaults mirror the full-scale training recipe."""

    init_embed_epochs: int = 200
    init_classifier_epochs: int = 10
    loops: int = 5
    stage2_epochs: int = 40
    stage3_epochs: int = 10
    batch_size: int = 128
    base_lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    lam: float = 1.0
    seed: int = 0
    widths: tuple[int, ...] = (64, 64)
    memory_reset_per_loop: bool = True

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        for name in ("init_embed_epochs", "init_classifier_epochs", "stage2_epochs", "stage3_epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.loops < 0:
            raise ConfigError(f"loops must be >= 0, got {self.loops}")
        if self.base_lr < 0 or not 0 <= self.momentum < 1 or self.weight_decay < 0 or self.lam < 0:
            raise ConfigError("base_lr, momentum, weight_decay, lam out of range")
        if not self.widths:
            raise ConfigError("widths must name at least one layer")


@dataclass
class LoopRow:
    loop: int
    pseudo: MetricsReport | None = None
    test: MetricsReport | None = None
    stage2_ce: list[float] = field(default_factory=list)
    stage2_total: list[float] = field(default_factory=list)
    stage3_loss: list[float] = field(default_factory=list)


@dataclass
class LoopTrace:
    rows: list[LoopRow] = field(default_factory=list)
    init_test: MetricsReport | None = None
    embedding_epochs: int = 0
    classifier_epochs: int = 0


def _rng(*tags) -> np.random.Generator:
    return np.random.default_rng(list(tags))


def _fetch(rows, labeled: LabeledSet, unlabeled: UnlabeledSet | None, pseudo: PseudoLabeledSet | None):
    """Materialize a batch: features and labels per (source, id) row."""
    src, ids = rows[:, 0], rows[:, 1]
    is_lab = src == SOURCE_LABELED
    if is_lab.all():
        return labeled.features[ids], labeled.labels[ids]
    x = np.empty((len(rows), labeled.features.shape[1]))
    y = np.empty(len(rows), dtype=np.int64)
    x[is_lab] = labeled.features[ids[is_lab]]
    y[is_lab] = labeled.labels[ids[is_lab]]
    x[~is_lab] = unlabeled.features[ids[~is_lab]]
    y[~is_lab] = pseudo.labels[ids[~is_lab]]
    return x, y


def _check_finite(value: float, phase: str, loop: int | None, epoch: int, step: int):
    if not np.isfinite(value):
        where = f"{phase} loop={loop} epoch={epoch} step={step}" if loop is not None else f"{phase} epoch={epoch} step={step}"
        raise NumericError(f"training diverged: loss={value} at {where}")


def init_decoupled(labeled: LabeledSet, cfg: TrainConfig) -> ModelState:
    """Two-phase initialization on labeled data only.

    Phase A trains the embedding and the random head jointly under random
    sampling. Phase B re-initializes the balanced head and trains it alone
    under class-balanced sampling with the embedding frozen.
    """
    if len(labeled) == 0 or np.any(labeled.class_counts == 0):
        raise ConfigError("initialization needs at least one sample per class")
    d_in = labeled.features.shape[1]
    model = init_model(d_in, cfg.widths, labeled.num_classes, _rng(cfg.seed, 0))

    emb, head = model.embedding, model.head_random
    opt = SGD(emb.params() + head.params(), cfg.base_lr, cfg.momentum, cfg.weight_decay, cfg.init_embed_epochs)
    for epoch in range(cfg.init_embed_epochs):
        opt.set_epoch(epoch)
        plan = random_batches(len(labeled), cfg.batch_size, (cfg.seed, 1, epoch))
        for step, rows in enumerate(plan):
            x, y = _fetch(rows, labeled, None, None)
            cache = forward_batch(x, emb, head)
            ce, dlogits = ce_grad(cache.logits, y)
            _check_finite(ce, "init/embedding", None, epoch, step)
            grads = backward_batch(cache, dlogits, emb, head, train_embedding=True)
            opt.step(grads.params())

    model.head_balanced = init_classifier(labeled.num_classes, emb.dim_out, _rng(cfg.seed, 2))
    _train_head_balanced(
        model,
        z=embed(labeled.features, emb)[0],
        labels=labeled.labels,
        sources=np.zeros(len(labeled), dtype=np.int64),
        num_classes=labeled.num_classes,
        epochs=cfg.init_classifier_epochs,
        cfg=cfg,
        seed_tags=(cfg.seed, 3),
        phase="init/classifier",
        sampling="balanced",
        strict_supervised=True,
    )
    return model


def _train_head_balanced(model, z, labels, sources, num_classes, epochs, cfg, seed_tags, phase,
                         sampling="balanced", strict_supervised=True, loop: int | None = None):
    """Head-only training on precomputed embeddings (the embedding is frozen,
    so features can be embedded once per phase)."""
    head = model.head_balanced
    opt = SGD(head.params(), cfg.base_lr, cfg.momentum, cfg.weight_decay, epochs)
    rows_by_class = [
        np.column_stack([sources[labels == j], np.nonzero(labels == j)[0]]).astype(np.int64)
        for j in range(num_classes)
    ]
    steps = balanced_steps(len(labels), cfg.batch_size)
    epoch_losses = []
    for epoch in range(epochs):
        opt.set_epoch(epoch)
        if sampling == "balanced":
            plan = class_balanced_batches(rows_by_class, cfg.batch_size, steps, (*seed_tags, epoch))
        else:
            plan = random_batches(len(labels), cfg.batch_size, (*seed_tags, epoch))
        total, count = 0.0, 0
        for step, rows in enumerate(plan):
            # ids here index the precomputed embedding matrix directly
            zb = z[rows[:, 1]]
            yb = labels[rows[:, 1]]
            logits = head_logits(zb, head)
            value, dlogits = sup_loss_grad(logits, yb, sources[rows[:, 1]] if strict_supervised else None)
            _check_finite(value.total, phase, loop, epoch, step)
            opt.step(head_backward(zb, dlogits).params())
            total += value.total * len(rows)
            count += len(rows)
        epoch_losses.append(total / count)
    return epoch_losses


def assign_pseudo_labels(model: ModelState, unlabeled: UnlabeledSet) -> PseudoLabeledSet:
    """Argmax of the balanced head over every unlabeled sample; no thresholding."""
    labels = predict_labels(unlabeled.features, model, BALANCED)
    return PseudoLabeledSet(np.arange(len(unlabeled)), labels, unlabeled.num_classes)


def stage2_semi_finetune(
    model: ModelState,
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    pseudo: PseudoLabeledSet,
    cfg: TrainConfig,
    epochs: int | None = None,
    memory: PredictionMemory | None = None,
    loop: int = 0,
    sampling: str = "random",
) -> tuple[list[float], list[float]]:
    """Fine-tune embedding and random head on labeled plus pseudo-labeled data.

    Returns per-epoch mean CE and mean total loss. ``sampling`` is "random"
    (shuffle over the union) or "balanced" (class-balanced over the union,
    balancing on pseudo labels for the unlabeled part).
    """
    if len(pseudo) != len(unlabeled):
        raise ConfigError("pseudo labels must cover the whole unlabeled set")
    epochs = cfg.stage2_epochs if epochs is None else epochs
    if memory is None:
        memory = PredictionMemory(len(labeled), len(unlabeled), labeled.num_classes)
    emb, head = model.embedding, model.head_random
    opt = SGD(emb.params() + head.params(), cfg.base_lr, cfg.momentum, cfg.weight_decay, epochs)
    if sampling == "balanced":
        union_rows = merge_per_class(
            per_class_rows(labeled.labels, labeled.num_classes, SOURCE_LABELED),
            per_class_rows(pseudo.labels, labeled.num_classes, SOURCE_PSEUDO),
        )
        steps = balanced_steps(len(labeled) + len(pseudo), cfg.batch_size)
    elif sampling != "random":
        raise ConfigError(f"unknown stage-2 sampling {sampling!r}")
    ce_curve, total_curve = [], []
    for epoch in range(epochs):
        opt.set_epoch(epoch)
        if sampling == "random":
            plan = mixed_union_batches(labeled, pseudo, cfg.batch_size, (cfg.seed, 4, loop, epoch))
        else:
            plan = class_balanced_batches(union_rows, cfg.batch_size, steps, (cfg.seed, 4, loop, epoch))
        ce_sum, total_sum, count = 0.0, 0.0, 0
        for step, rows in enumerate(plan):
            x, y = _fetch(rows, labeled, unlabeled, pseudo)
            cache = forward_batch(x, emb, head)
            prev, mask = memory.lookup(rows[:, 0], rows[:, 1])
            value, dlogits = semi_loss_grad(cache.logits, y, prev, mask, cfg.lam)
            _check_finite(value.total, "stage2", loop, epoch, step)
            memory.store(rows[:, 0], rows[:, 1], cache.probs)
            grads = backward_batch(cache, dlogits, emb, head, train_embedding=True)
            opt.step(grads.params())
            ce_sum += value.ce_part * len(rows)
            total_sum += value.total * len(rows)
            count += len(rows)
        memory.advance_epoch()
        ce_curve.append(ce_sum / count)
        total_curve.append(total_sum / count)
    return ce_curve, total_curve


def stage3_sup_finetune(
    model: ModelState,
    labeled: LabeledSet,
    cfg: TrainConfig,
    epochs: int | None = None,
    loop: int = 0,
    sampling: str = "balanced",
    unlabeled: UnlabeledSet | None = None,
    pseudo: PseudoLabeledSet | None = None,
) -> list[float]:
    """Fine-tune the balanced head; the embedding only computes features.

    By default trains on labeled data alone (strict: pseudo rows are a
    contract violation). Ablations may pass the pseudo-labeled set to train
    the head on the union instead, or switch to random sampling.
    """
    epochs = cfg.stage3_epochs if epochs is None else epochs
    z_lab = embed(labeled.features, model.embedding)[0]
    if pseudo is None:
        z = z_lab
        labels = labeled.labels
        sources = np.zeros(len(labeled), dtype=np.int64)
        strict = True
    else:
        z = np.concatenate([z_lab, embed(unlabeled.features, model.embedding)[0][pseudo.sample_ids]])
        labels = np.concatenate([labeled.labels, pseudo.labels])
        sources = np.concatenate(
            [np.zeros(len(labeled), dtype=np.int64), np.ones(len(pseudo), dtype=np.int64)]
        )
        strict = False
    return _train_head_balanced(
        model,
        z=z,
        labels=labels,
        sources=sources,
        num_classes=labeled.num_classes,
        epochs=epochs,
        cfg=cfg,
        seed_tags=(cfg.seed, 5, loop),
        phase="stage3",
        sampling=sampling,
        strict_supervised=strict,
        loop=loop,
    )


def _run_loops(
    model: ModelState,
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    cfg: TrainConfig,
    test: LabeledSet | None,
    splits: SplitSpec | None,
    stage2_sampling: str = "random",
    stage3_sampling: str = "balanced",
    stage3_on_union: bool = False,
    skip_stage2: bool = False,
    on_loop_end=None,
) -> LoopTrace:
    trace = LoopTrace(embedding_epochs=cfg.init_embed_epochs, classifier_epochs=cfg.init_classifier_epochs)
    if test is not None and splits is not None:
        trace.init_test = evaluate(model, BALANCED, test, splits)
    memory = None
    for loop in range(cfg.loops):
        row = LoopRow(loop=loop)
        pseudo = assign_pseudo_labels(model, unlabeled)
        if splits is not None and unlabeled.hidden_labels is not None:
            row.pseudo = pseudo_accuracy(pseudo, unlabeled.hidden_labels, splits)
            row.pseudo.loop = loop
        if not skip_stage2:
            if cfg.memory_reset_per_loop or memory is None:
                memory = PredictionMemory(len(labeled), len(unlabeled), labeled.num_classes)
            row.stage2_ce, row.stage2_total = stage2_semi_finetune(
                model, labeled, unlabeled, pseudo, cfg,
                memory=memory, loop=loop, sampling=stage2_sampling,
            )
            trace.embedding_epochs += cfg.stage2_epochs
        row.stage3_loss = stage3_sup_finetune(
            model, labeled, cfg, loop=loop, sampling=stage3_sampling,
            unlabeled=unlabeled if stage3_on_union else None,
            pseudo=pseudo if stage3_on_union else None,
        )
        trace.classifier_epochs += cfg.stage3_epochs
        if test is not None and splits is not None:
            row.test = evaluate(model, BALANCED, test, splits)
            row.test.loop = loop
        trace.rows.append(row)
        if on_loop_end is not None:
            on_loop_end(loop, model, row)
    return trace


def alternate_learn(
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    cfg: TrainConfig,
    test: LabeledSet | None = None,
    splits: SplitSpec | None = None,
    on_loop_end=None,
) -> tuple[ModelState, LoopTrace]:
    """Initialization followed by N loops of label assignment, semi-supervised
    embedding fine-tuning, and supervised class-balanced head fine-tuning."""
    model = init_decoupled(labeled, cfg)
    trace = _run_loops(model, labeled, unlabeled, cfg, test, splits, on_loop_end=on_loop_end)
    return model, trace


def baseline_pseudo_label(
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    cfg: TrainConfig,
    test: LabeledSet | None = None,
    splits: SplitSpec | None = None,
) -> tuple[ModelState, MetricsReport | None]:
    """Pseudo-Label baseline at matched budget: labels assigned once from the
    initialized model, then one long semi-supervised fine-tune of
    loops * stage2_epochs epochs and a single supervised head pass."""
    model = init_decoupled(labeled, cfg)
    pseudo = assign_pseudo_labels(model, unlabeled)
    stage2_semi_finetune(model, labeled, unlabeled, pseudo, cfg, epochs=cfg.loops * cfg.stage2_epochs)
    stage3_sup_finetune(model, labeled, cfg)
    report = None
    if test is not None and splits is not None:
        report = evaluate(model, BALANCED, test, splits)
    return model, report


def ablation_variant(
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    cfg: TrainConfig,
    variant: str,
    test: LabeledSet | None = None,
    splits: SplitSpec | None = None,
) -> tuple[ModelState, MetricsReport | None]:
    """Alternate learning with one training choice swapped.

    Sampling variants are named {stage-2 sampling}+{stage-3 sampling} with R
    random and C class-balanced; the default scheme is "R+C". The data
    variants train the balanced head on the union of true and pseudo labels,
    with ("classifier_on_union") or without ("no_unsup_embed") the
    semi-supervised embedding updates.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    kwargs = {
        "R+C": {},
        "R+R": {"stage3_sampling": "random"},
        "C+R": {"stage2_sampling": "balanced", "stage3_sampling": "random"},
        "C+C": {"stage2_sampling": "balanced"},
        "classifier_on_union": {"stage3_on_union": True},
        "no_unsup_embed": {"stage3_on_union": True, "skip_stage2": True},
    }[variant]
    model = init_decoupled(labeled, cfg)
    _run_loops(model, labeled, unlabeled, cfg, test, splits, **kwargs)
    report = None
    if test is not None and splits is not None:
        report = evaluate(model, BALANCED, test, splits)
    return model, report
