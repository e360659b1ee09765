#!/usr/bin/env python3
"""The minimal dense network: forward pass, analytic backprop, gradient check,
SGD with momentum and weight decay, and the cosine schedule."""

import numpy as np

from altsample.losses import ce_grad
from altsample.network import (
    SGD,
    backward_batch,
    cosine_lr,
    forward,
    forward_batch,
    grad_check,
    init_model,
)

rng = np.random.default_rng(0)
model = init_model(dim_in=8, widths=(32, 32), num_classes=5, rng=rng)

x = rng.normal(size=8)
z, probs = forward(x, model, head="balanced")
print(f"embedding dim {len(z)}, probs {np.round(probs, 3)} (sum {probs.sum():.12f})")

# analytic gradients vs central finite differences over every parameter
batch = rng.normal(size=(8, 8))
labels = rng.integers(0, 5, size=8)
params = model.embedding.params() + model.head_random.params()


def loss_fn():
    cache = forward_batch(batch, model.embedding, model.head_random)
    return ce_grad(cache.logits, labels)[0]


cache = forward_batch(batch, model.embedding, model.head_random)
_, dlogits = ce_grad(cache.logits, labels)
grads = backward_batch(cache, dlogits, model.embedding, model.head_random)
err = grad_check(loss_fn, params, grads.params(), eps=1e-5)
print(f"gradient check over {sum(p.size for p in params)} parameters: max rel err {err:.2e}")

# a few SGD epochs with the cosine schedule
opt = SGD(params, base_lr=0.1, momentum=0.9, weight_decay=5e-4, total_epochs=10)
for epoch in range(10):
    lr = opt.set_epoch(epoch)
    cache = forward_batch(batch, model.embedding, model.head_random)
    ce, dlogits = ce_grad(cache.logits, labels)
    opt.step(backward_batch(cache, dlogits, model.embedding, model.head_random).params())
    if epoch % 3 == 0:
        print(f"epoch {epoch}: lr={lr:.4f} ce={ce:.4f}")

print("schedule endpoints:", cosine_lr(0, 10, 0.1), cosine_lr(5, 10, 0.1), cosine_lr(10, 10, 0.1))
