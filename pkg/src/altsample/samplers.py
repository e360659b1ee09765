"""Seeded batch plans: random (shuffle) sampling and class-balanced sampling.

A plan is a list of (source, id) batches. Random plans cover every index
exactly once per epoch; class-balanced plans draw a class uniformly, then an
instance within it with replacement, so tail classes are over-sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledSet, PseudoLabeledSet
from .errors import ConfigError, DataError

SOURCE_LABELED = 0
SOURCE_PSEUDO = 1


@dataclass
class BatchPlan:
    """Ordered batches; each batch is an (k, 2) int array of [source, id] rows."""

    batches: list[np.ndarray]
    seed: int

    def __iter__(self):
        return iter(self.batches)

    def __len__(self) -> int:
        return len(self.batches)

    @property
    def num_draws(self) -> int:
        return sum(len(b) for b in self.batches)

    def all_rows(self) -> np.ndarray:
        return np.concatenate(self.batches) if self.batches else np.empty((0, 2), dtype=np.int64)


def _chunk(rows: np.ndarray, batch_size: int, seed: int) -> BatchPlan:
    batches = [rows[lo : lo + batch_size] for lo in range(0, len(rows), batch_size)]
    return BatchPlan(batches=batches, seed=seed)


def random_batches(set_size: int, batch_size: int, seed: int, source: int = SOURCE_LABELED) -> BatchPlan:
    """A seeded uniform shuffle of all indices, chunked; one epoch of coverage."""
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(seed)
    ids = rng.permutation(set_size)
    rows = np.column_stack([np.full(set_size, source, dtype=np.int64), ids])
    return _chunk(rows, batch_size, seed)


def class_balanced_batches(per_class: list[np.ndarray], batch_size: int, steps: int, seed: int) -> BatchPlan:
    """steps*batch_size draws: class uniform over C, instance uniform with replacement.

    ``per_class[j]`` is an (k_j, 2) array of [source, id] rows for class j.
    """
    if batch_size < 1 or steps < 1:
        raise ConfigError(f"need batch_size >= 1 and steps >= 1, got {batch_size}, {steps}")
    sizes = np.array([len(rows) for rows in per_class])
    empty = np.nonzero(sizes == 0)[0]
    if len(empty):
        raise DataError(f"class {int(empty[0])} has no samples to balance over")
    rng = np.random.default_rng(seed)
    total = steps * batch_size
    classes = rng.integers(0, len(per_class), size=total)
    picks = rng.integers(0, sizes[classes])
    starts = np.concatenate([[0], np.cumsum(sizes[:-1])])
    stacked = np.concatenate(per_class)
    rows = stacked[starts[classes] + picks]
    return _chunk(rows, batch_size, seed)


def per_class_rows(labels: np.ndarray, num_classes: int, source: int) -> list[np.ndarray]:
    """Group sample ids by class into [source, id] row arrays."""
    out = []
    for j in range(num_classes):
        ids = np.nonzero(labels == j)[0]
        out.append(np.column_stack([np.full(len(ids), source, dtype=np.int64), ids]))
    return out


def merge_per_class(a: list[np.ndarray], b: list[np.ndarray]) -> list[np.ndarray]:
    return [np.concatenate([x, y]) for x, y in zip(a, b)]


def mixed_union_batches(labeled: LabeledSet, pseudo: PseudoLabeledSet, batch_size: int, seed: int) -> BatchPlan:
    """Random sampling over the union of labeled and pseudo-labeled samples.

    Each row keeps its source tag so the consumer fetches the right label.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be >= 1, got {batch_size}")
    n, m = len(labeled), len(pseudo)
    rows = np.empty((n + m, 2), dtype=np.int64)
    rows[:n, 0] = SOURCE_LABELED
    rows[:n, 1] = np.arange(n)
    rows[n:, 0] = SOURCE_PSEUDO
    rows[n:, 1] = pseudo.sample_ids
    rng = np.random.default_rng(seed)
    rows = rows[rng.permutation(n + m)]
    return _chunk(rows, batch_size, seed)


def balanced_steps(set_size: int, batch_size: int) -> int:
    """Epoch length under class-balanced sampling: ceil(N / batch)."""
    return max(1, -(-set_size // batch_size))
