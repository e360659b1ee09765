"""Alternate-sampling semi-supervised learning on long-tailed data.

A small numpy library covering the full pipeline: long-tailed corpus
synthesis, a minimal dense network with analytic gradients, random and
class-balanced batch plans, the semi-supervised and supervised losses with
epoch-to-epoch consistency, the three-stage alternate training loop, and
split-aware evaluation and reporting.
"""

from .data import (
    ClassProfile,
    CountThresholds,
    LabeledSet,
    PseudoLabeledSet,
    RankBuckets,
    SplitSpec,
    SyntheticTask,
    UnlabeledSet,
    assign_splits,
    exponential_profile,
    ingest_cifar10_binary,
    lomax_profile,
    lomax_shape_profile,
    subsample_to_profile,
    synth_gaussian_task,
)
from .losses import LossValue, PredictionMemory, consistency_kl, cross_entropy, semi_loss
from .metrics import MetricsReport, comparison_grid, emit_report, evaluate, parse_report, pseudo_accuracy
from .network import (
    BALANCED,
    RANDOM,
    SGD,
    ClassifierParams,
    EmbeddingParams,
    ModelState,
    cosine_lr,
    forward,
    grad_check,
    init_model,
)
from .samplers import BatchPlan, class_balanced_batches, mixed_union_batches, random_batches
from .training import (
    LoopTrace,
    TrainConfig,
    ablation_variant,
    alternate_learn,
    assign_pseudo_labels,
    baseline_pseudo_label,
    init_decoupled,
    stage2_semi_finetune,
    stage3_sup_finetune,
)

__version__ = "0.1.0"
