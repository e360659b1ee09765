"""Cross-entropy, temporal-consistency KL, and their combination.

The consistency term compares each sample's current class probabilities with
the ones stored for it in the previous epoch; the stored vector is a constant
(no gradient flows into the memory). Both terms are reduced by batch mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation, NumericError
from .network import forward_batch, log_softmax, softmax

KL_CLAMP = 1e-12


class ClampStats:
    """Counts how often the KL stability clamp fired."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


clamp_stats = ClampStats()


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log p[label] for one probability vector."""
    probs = np.asarray(probs, dtype=float)
    if not np.isfinite(probs).all():
        raise NumericError("non-finite probabilities")
    if not 0 <= label < probs.shape[-1]:
        raise ConfigError(f"label {label} out of range for C={probs.shape[-1]}")
    return float(-np.log(max(probs[label], KL_CLAMP)))


def consistency_kl(prev: np.ndarray, cur: np.ndarray) -> float:
    """KL(prev || cur) with 0*log(0/x) = 0 and a stability clamp on cur."""
    prev = np.asarray(prev, dtype=float)
    cur = np.asarray(cur, dtype=float)
    support = prev > 0.0
    cur_s = cur[support]
    if np.any(cur_s < KL_CLAMP):
        clamp_stats.count += int(np.sum(cur_s < KL_CLAMP))
        cur_s = np.maximum(cur_s, KL_CLAMP)
    prev_s = prev[support]
    return float(np.sum(prev_s * (np.log(prev_s) - np.log(cur_s))))


@dataclass
class LossValue:
    ce_part: float
    consistency_part: float
    lam: float

    @property
    def total(self) -> float:
        return self.ce_part + self.lam * self.consistency_part


class PredictionMemory:
    """Per-sample class probabilities from the previous epoch.

    Rows 0..n_labeled-1 hold labeled samples, the rest pseudo-labeled ones.
    Reads come from the previous epoch's snapshot; writes go to the current
    one. ``advance_epoch`` rolls current into previous, so a vector written
    during epoch e is exactly what epoch e+1 reads back, and samples not
    visited in an epoch drop out of the snapshot.
    """

    def __init__(self, n_labeled: int, n_pseudo: int, num_classes: int):
        n = n_labeled + n_pseudo
        self.n_labeled = n_labeled
        self.num_classes = num_classes
        self._prev = np.zeros((n, num_classes))
        self._prev_mask = np.zeros(n, dtype=bool)
        self._cur = np.zeros((n, num_classes))
        self._cur_mask = np.zeros(n, dtype=bool)
        self.epoch = 0

    def _rows(self, sources: np.ndarray, ids: np.ndarray) -> np.ndarray:
        return np.where(sources == 0, ids, ids + self.n_labeled)

    def lookup(self, sources: np.ndarray, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Previous-epoch probabilities for a batch, plus a presence mask."""
        rows = self._rows(sources, ids)
        return self._prev[rows], self._prev_mask[rows]

    def store(self, sources: np.ndarray, ids: np.ndarray, probs: np.ndarray) -> None:
        rows = self._rows(sources, ids)
        self._cur[rows] = probs
        self._cur_mask[rows] = True

    def advance_epoch(self) -> None:
        self._prev, self._cur = self._cur, self._prev
        self._prev_mask, self._cur_mask = self._cur_mask, self._prev_mask
        self._cur_mask[:] = False
        self.epoch += 1

    def reset(self) -> None:
        self._prev_mask[:] = False
        self._cur_mask[:] = False
        self.epoch = 0


def ce_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-mean cross entropy from logits and its logit gradient."""
    n = len(labels)
    logp = log_softmax(logits)
    ce = float(-logp[np.arange(n), labels].mean())
    if not np.isfinite(ce):
        raise NumericError(f"non-finite cross entropy over batch of {n}")
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return ce, dlogits


def kl_grad(probs: np.ndarray, prev: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Batch-mean KL(prev || current probs) and its logit gradient.

    Samples with ``mask`` False contribute zero to both. ``prev`` rows are
    treated as constants.
    """
    n = len(probs)
    dlogits = np.zeros_like(probs)
    if not mask.any():
        return 0.0, dlogits
    p = prev[mask]
    q = probs[mask]
    support = p > 0.0
    clamps = int(np.sum(support & (q < KL_CLAMP)))
    if clamps:
        clamp_stats.count += clamps
    q = np.maximum(q, KL_CLAMP)
    terms = np.where(support, p * (np.log(np.maximum(p, KL_CLAMP)) - np.log(q)), 0.0)
    dlogits[mask] = (probs[mask] - p) / n
    return float(terms.sum()) / n, dlogits


def semi_loss_grad(
    logits: np.ndarray,
    labels: np.ndarray,
    prev: np.ndarray,
    mask: np.ndarray,
    lam: float,
) -> tuple[LossValue, np.ndarray]:
    """Combined semi-supervised loss (CE + lam * consistency) and logit gradient."""
    ce, d_ce = ce_grad(logits, labels)
    kl, d_kl = kl_grad(softmax(logits), prev, mask)
    return LossValue(ce_part=ce, consistency_part=kl, lam=lam), d_ce + lam * d_kl


def semi_loss(batch_x, labels, sources, ids, model, memory: PredictionMemory, lam: float) -> LossValue:
    """Value-only semi-supervised loss through the random-trained head.

    Evaluates the batch, reads previous-epoch probabilities from ``memory``,
    and stores the current ones back for the next epoch.
    """
    cache = forward_batch(batch_x, model.embedding, model.head_random)
    prev, mask = memory.lookup(sources, ids)
    value, _ = semi_loss_grad(cache.logits, labels, prev, mask, lam)
    memory.store(sources, ids, cache.probs)
    return value


def sup_loss_grad(logits: np.ndarray, labels: np.ndarray, sources: np.ndarray | None = None) -> tuple[LossValue, np.ndarray]:
    """Supervised class-balanced loss: plain batch-mean CE through the balanced head.

    Rejects pseudo-labeled samples; only ground truth may reach this loss.
    """
    if sources is not None and np.any(sources != 0):
        raise ContractViolation("pseudo-labeled sample reached the supervised loss")
    ce, dlogits = ce_grad(logits, labels)
    return LossValue(ce_part=ce, consistency_part=0.0, lam=0.0), dlogits
