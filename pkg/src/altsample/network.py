"""Minimal dense network with hand-written backpropagation.

The model is deliberately small: a rectifier MLP embedding feeding two
independent linear-softmax heads, one trained under random sampling and one
under class-balanced sampling. Everything is float64 numpy; gradients are
analytic and verified against central finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

BALANCED = "balanced"
RANDOM = "random"


@dataclass
class EmbeddingParams:
    """Stacked dense layers, rectifier after every layer.

    ``weights[i]`` has shape (out, in); ``biases[i]`` has shape (out,).
    The output of the last layer (post-rectifier) is the embedding.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if not self.weights:
            raise ConfigError("embedding needs at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ConfigError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ConfigError(f"layer {i}: input dim {w.shape[1]} breaks the layer chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ConfigError(f"layer {i}: non-finite parameters")

    @property
    def dim_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.weights[-1].shape[0]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def copy(self) -> "EmbeddingParams":
        return EmbeddingParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class ClassifierParams:
    """Linear softmax head: weight (C, d), bias (C,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ConfigError(f"classifier weight {self.weight.shape} and bias {self.bias.shape} do not match")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ConfigError("classifier has non-finite parameters")

    @property
    def num_classes(self) -> int:
        return self.weight.shape[0]

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(self.weight.copy(), self.bias.copy())


@dataclass
class ModelState:
    """Embedding plus the two classifier heads; both heads persist across loops."""

    embedding: EmbeddingParams
    head_balanced: ClassifierParams
    head_random: ClassifierParams

    def __post_init__(self):
        d = self.embedding.dim_out
        for name, head in (("balanced", self.head_balanced), ("random", self.head_random)):
            if head.weight.shape[1] != d:
                raise ConfigError(f"{name} head expects dim {head.weight.shape[1]}, embedding gives {d}")
        if self.head_balanced.num_classes != self.head_random.num_classes:
            raise ConfigError("heads disagree on the number of classes")

    @property
    def num_classes(self) -> int:
        return self.head_balanced.num_classes

    def head(self, which: str) -> ClassifierParams:
        if which == BALANCED:
            return self.head_balanced
        if which == RANDOM:
            return self.head_random
        raise ConfigError(f"unknown head {which!r}")

    def copy(self) -> "ModelState":
        return ModelState(self.embedding.copy(), self.head_balanced.copy(), self.head_random.copy())


def init_embedding(dim_in: int, widths: tuple[int, ...], rng: np.random.Generator) -> EmbeddingParams:
    """He-scaled random layers: dim_in -> widths[0] -> ... -> widths[-1]."""
    if dim_in < 1 or not widths or any(w < 1 for w in widths):
        raise ConfigError(f"bad embedding shape: dim_in={dim_in}, widths={widths}")
    weights, biases = [], []
    fan_in = dim_in
    for w in widths:
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(w, fan_in)))
        biases.append(np.zeros(w))
        fan_in = w
    return EmbeddingParams(weights, biases)


def init_classifier(num_classes: int, dim: int, rng: np.random.Generator) -> ClassifierParams:
    if num_classes < 2 or dim < 1:
        raise ConfigError(f"bad classifier shape: C={num_classes}, d={dim}")
    return ClassifierParams(rng.normal(0.0, math.sqrt(1.0 / dim), size=(num_classes, dim)), np.zeros(num_classes))


def init_model(dim_in: int, widths: tuple[int, ...], num_classes: int, rng: np.random.Generator) -> ModelState:
    emb = init_embedding(dim_in, widths, rng)
    return ModelState(
        emb,
        init_classifier(num_classes, emb.dim_out, rng),
        init_classifier(num_classes, emb.dim_out, rng),
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class ForwardCache:
    """Activations kept for the backward pass."""

    x: np.ndarray
    preacts: list[np.ndarray]
    acts: list[np.ndarray]  # acts[-1] is the embedding
    logits: np.ndarray
    probs: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.acts[-1]


def embed(x: np.ndarray, emb: EmbeddingParams) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    a = x
    preacts, acts = [], []
    for w, b in zip(emb.weights, emb.biases):
        pre = a @ w.T + b
        a = np.maximum(pre, 0.0)
        preacts.append(pre)
        acts.append(a)
    return a, preacts, acts


def forward_batch(x: np.ndarray, emb: EmbeddingParams, head: ClassifierParams) -> ForwardCache:
    """Run a (B, dim_in) batch through embedding and one head."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != emb.dim_in:
        raise ConfigError(f"input shape {x.shape} does not match embedding dim_in={emb.dim_in}")
    if not np.isfinite(x).all():
        raise NumericError("non-finite input batch")
    z, preacts, acts = embed(x, emb)
    logits = z @ head.weight.T + head.bias
    return ForwardCache(x=x, preacts=preacts, acts=acts, logits=logits, probs=softmax(logits))


def forward(x: np.ndarray, model: ModelState, head: str = BALANCED) -> tuple[np.ndarray, np.ndarray]:
    """Single-sample prediction: returns (embedding z, class probabilities)."""
    cache = forward_batch(np.asarray(x, dtype=float).reshape(1, -1), model.embedding, model.head(head))
    return cache.z[0], cache.probs[0]


def predict_labels(x: np.ndarray, model: ModelState, head: str = BALANCED, batch: int = 4096) -> np.ndarray:
    """Argmax predictions over a (N, dim_in) matrix; ties go to the lowest class index."""
    out = np.empty(len(x), dtype=np.int64)
    for lo in range(0, len(x), batch):
        cache = forward_batch(x[lo : lo + batch], model.embedding, model.head(head))
        out[lo : lo + batch] = np.argmax(cache.logits, axis=1)
    return out


@dataclass
class Gradients:
    """Mirrors trainable parameter shapes. ``embedding`` is None when frozen."""

    embedding: list[np.ndarray] | None
    head: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        out = list(self.embedding) if self.embedding is not None else []
        return out + list(self.head)


def backward_batch(
    cache: ForwardCache,
    dlogits: np.ndarray,
    emb: EmbeddingParams,
    head: ClassifierParams,
    train_embedding: bool = True,
) -> Gradients:
    """Backpropagate a (B, C) logit gradient through head and, optionally, the embedding."""
    z = cache.acts[-1]
    d_head = [dlogits.T @ z, dlogits.sum(axis=0)]
    if not train_embedding:
        return Gradients(embedding=None, head=d_head)
    da = dlogits @ head.weight
    d_emb: list[np.ndarray] = []
    for i in range(len(emb.weights) - 1, -1, -1):
        dpre = da * (cache.preacts[i] > 0.0)
        a_in = cache.acts[i - 1] if i > 0 else cache.x
        d_emb[:0] = [dpre.T @ a_in, dpre.sum(axis=0)]
        if i > 0:
            da = dpre @ emb.weights[i]
    return Gradients(embedding=d_emb, head=d_head)


def head_logits(z: np.ndarray, head: ClassifierParams) -> np.ndarray:
    """Head-only forward for precomputed embeddings (frozen-embedding stages)."""
    return z @ head.weight.T + head.bias


def head_backward(z: np.ndarray, dlogits: np.ndarray) -> Gradients:
    return Gradients(embedding=None, head=[dlogits.T @ z, dlogits.sum(axis=0)])


def cosine_lr(epoch: int, total: int, base: float) -> float:
    """Cosine annealing: base at epoch 0, 0 at epoch == total."""
    if total < 1:
        raise ConfigError(f"cosine schedule needs total >= 1, got {total}")
    if not 0 <= epoch <= total:
        raise ConfigError(f"epoch {epoch} outside [0, {total}]")
    return base * 0.5 * (1.0 + math.cos(math.pi * epoch / total))


class SGD:
    """SGD with momentum and coupled weight decay.

    Update rule, applied elementwise and in place:
        v <- momentum * v + grad + weight_decay * param
        param <- param - lr * v
    """

    def __init__(self, params: list[np.ndarray], base_lr: float, momentum: float, weight_decay: float, total_epochs: int):
        if base_lr < 0:
            raise ConfigError("learning rate must be >= 0")
        if total_epochs < 1:
            raise ConfigError("total_epochs must be >= 1")
        self.params = params
        self.base_lr = base_lr
        self.lr = base_lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.total_epochs = total_epochs
        self.epoch = 0
        self.velocity = [np.zeros_like(p) for p in params]

    def set_epoch(self, epoch: int) -> float:
        self.epoch = epoch
        self.lr = cosine_lr(epoch, self.total_epochs, self.base_lr)
        return self.lr

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ConfigError(f"got {len(grads)} gradients for {len(self.params)} parameters")
        for p, g, v in zip(self.params, grads, self.velocity):
            if g.shape != p.shape:
                raise ConfigError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            v *= self.momentum
            v += g
            if self.weight_decay:
                v += self.weight_decay * p
            p -= self.lr * v


def grad_check(loss_fn, params: list[np.ndarray], analytic: list[np.ndarray], eps: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn`` must be a pure function of the current contents of ``params``;
    entries are perturbed in place. Intended for small nets only.
    """
    if eps <= 0:
        raise ConfigError("finite-difference step must be > 0")
    worst = 0.0
    for p, a in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_a = a.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + eps
            hi = loss_fn()
            flat_p[i] = orig - eps
            lo = loss_fn()
            flat_p[i] = orig
            fd = (hi - lo) / (2.0 * eps)
            err = abs(flat_a[i] - fd) / max(abs(flat_a[i]), abs(fd), 1e-6)
            worst = max(worst, err)
    return worst
