"""Versioned model checkpoints: one .npz holding every parameter array plus a
JSON metadata record (format version, config hash, free-form extras)."""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import FormatError
from .network import ClassifierParams, EmbeddingParams, ModelState

FORMAT_VERSION = 1


def save_model(model: ModelState, path: str, config_hash: str = "", extra: dict | None = None) -> str:
    arrays = {}
    for i, (w, b) in enumerate(zip(model.embedding.weights, model.embedding.biases)):
        arrays[f"emb_w{i}"] = w
        arrays[f"emb_b{i}"] = b
    arrays["bal_w"] = model.head_balanced.weight
    arrays["bal_b"] = model.head_balanced.bias
    arrays["rnd_w"] = model.head_random.weight
    arrays["rnd_b"] = model.head_random.bias
    meta = {
        "format_version": FORMAT_VERSION,
        "num_layers": len(model.embedding.weights),
        "config_hash": config_hash,
    }
    if extra:
        meta["extra"] = extra
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, path)
    return path


def load_model(path: str) -> tuple[ModelState, dict]:
    with np.load(path) as arrays:
        if "meta" not in arrays:
            raise FormatError(f"{path}: not a model checkpoint (no metadata record)")
        meta = json.loads(str(arrays["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {meta.get('format_version')}")
        n = meta["num_layers"]
        emb = EmbeddingParams(
            [arrays[f"emb_w{i}"] for i in range(n)],
            [arrays[f"emb_b{i}"] for i in range(n)],
        )
        model = ModelState(
            emb,
            ClassifierParams(arrays["bal_w"], arrays["bal_b"]),
            ClassifierParams(arrays["rnd_w"], arrays["rnd_b"]),
        )
    return model, meta
