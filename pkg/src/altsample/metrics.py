"""Accuracy metrics over balanced test sets and long-tailed unlabeled subsets,
plus deterministic report files (delimited rows and structured JSON)."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .data import FEW, MANY, MEDIUM, SPLITS, LabeledSet, PseudoLabeledSet, SplitSpec
from .errors import ConfigError, UnsupportedOperation
from .network import ModelState, predict_labels


@dataclass
class MetricsReport:
    overall: float
    split_acc: dict[str, float]
    per_class: np.ndarray
    split_counts: dict[str, int]
    config_hash: str = ""
    seed: int | None = None
    loop: int | None = None

    def row(self) -> dict:
        return {
            "loop": self.loop,
            "overall": self.overall,
            MANY: self.split_acc.get(MANY, float("nan")),
            MEDIUM: self.split_acc.get(MEDIUM, float("nan")),
            FEW: self.split_acc.get(FEW, float("nan")),
        }


def _accuracy_report(true: np.ndarray, pred: np.ndarray, num_classes: int, splits: SplitSpec) -> MetricsReport:
    correct = pred == true
    per_class = np.zeros(num_classes)
    counts = np.bincount(true, minlength=num_classes)
    for j in range(num_classes):
        per_class[j] = correct[true == j].mean() if counts[j] else 0.0
    split_acc, split_counts = {}, {}
    for s in SPLITS:
        members = np.isin(true, splits.classes(s))
        split_counts[s] = int(members.sum())
        split_acc[s] = float(correct[members].mean()) if split_counts[s] else float("nan")
    return MetricsReport(
        overall=float(correct.mean()) if len(true) else float("nan"),
        split_acc=split_acc,
        per_class=per_class,
        split_counts=split_counts,
    )


def evaluate(model: ModelState, head: str, test: LabeledSet, splits: SplitSpec) -> MetricsReport:
    """Score a head on a balanced test set; split accuracies are micro within the split."""
    if splits.num_classes != test.num_classes:
        raise ConfigError("split spec and test set disagree on the number of classes")
    if np.any(test.class_counts == 0):
        missing = int(np.nonzero(test.class_counts == 0)[0][0])
        raise ConfigError(f"class {missing} absent from the test set")
    if len(np.unique(test.class_counts)) > 1:
        warnings.warn("test set is not balanced; overall accuracy is count-weighted", stacklevel=2)
    pred = predict_labels(test.features, model, head)
    return _accuracy_report(test.labels, pred, test.num_classes, splits)


def pseudo_accuracy(pseudo: PseudoLabeledSet, hidden_labels: np.ndarray | None, splits: SplitSpec) -> MetricsReport:
    """Pseudo-label accuracy over the unlabeled subset's own (long-tailed) distribution.

    The overall number is dominated by head classes; the split rows carry the
    signal about tail progress.
    """
    if hidden_labels is None:
        raise UnsupportedOperation("unlabeled set carries no hidden labels to score against")
    true = np.asarray(hidden_labels, dtype=np.int64)[pseudo.sample_ids]
    return _accuracy_report(true, pseudo.labels, pseudo.num_classes, splits)


# --- report files ----------------------------------------------------------

ROW_FIELDS = ("loop", "overall", MANY, MEDIUM, FEW)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def emit_report(reports: list[MetricsReport], path: str, fmt: str = "rows-text",
                config_hash: str = "", seed: int | None = None, extra: dict | None = None) -> str:
    """Write reports with a deterministic field order; returns the path written.

    rows-text: '# key=value' header lines, one tab-separated row per report.
    structured: JSON embedding the same rows plus any extra config payload.
    """
    header_hash = config_hash or (reports[0].config_hash if reports else "")
    header_seed = seed if seed is not None else (reports[0].seed if reports else None)
    if fmt == "rows-text":
        lines = [f"# config_hash={header_hash}", f"# seed={header_seed}", "\t".join(ROW_FIELDS)]
        for r in reports:
            row = r.row()
            lines.append("\t".join(_fmt(row[f]) for f in ROW_FIELDS))
        payload = "\n".join(lines) + "\n"
    elif fmt == "structured":
        doc = {
            "config_hash": header_hash,
            "seed": header_seed,
            "fields": list(ROW_FIELDS),
            "rows": [r.row() for r in reports],
            "per_class": [r.per_class.tolist() for r in reports],
            "split_counts": [r.split_counts for r in reports],
        }
        if extra:
            doc["config"] = extra
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return path


def parse_report(path: str) -> dict:
    """Read back either report format into {config_hash, seed, rows}."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return {"config_hash": doc["config_hash"], "seed": doc["seed"], "rows": doc["rows"]}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    meta = {}
    rows = []
    fields = None
    for ln in lines:
        if ln.startswith("#"):
            k, _, v = ln[1:].strip().partition("=")
            meta[k] = v
        elif fields is None:
            fields = ln.split("\t")
        else:
            vals = ln.split("\t")
            row = {}
            for f, v in zip(fields, vals):
                if f == "loop":
                    row[f] = None if v == "-" else int(v)
                else:
                    row[f] = float("nan") if v == "-" else float(v)
            rows.append(row)
    seed = meta.get("seed")
    return {
        "config_hash": meta.get("config_hash", ""),
        "seed": None if seed in (None, "None") else int(seed),
        "rows": rows,
    }


def comparison_grid(named_runs: list[tuple[str, MetricsReport]]) -> str:
    """Assemble a fixed-width method-by-split accuracy grid from finished runs."""
    header = f"{'method':<24}{'overall':>10}{'many':>10}{'medium':>10}{'few':>10}"
    lines = [header]
    for name, rep in named_runs:
        row = rep.row()
        lines.append(
            f"{name:<24}"
            + "".join(f"{row[f] * 100:>10.2f}" for f in ("overall", MANY, MEDIUM, FEW))
        )
    return "\n".join(lines) + "\n"
