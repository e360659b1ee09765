"""Long-tailed corpus construction: count profiles, synthetic Gaussian tasks,
CIFAR-10 binary ingestion, subsampling, and many/medium/few split bookkeeping.

All randomness flows through explicit seeds; generation functions are pure.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, FormatError

MANY = "many"
MEDIUM = "medium"
FEW = "few"
SPLITS = (MANY, MEDIUM, FEW)

CIFAR_RECORD = 3073  # 1 label byte + 3 * 32 * 32 pixel bytes, channel-planar
CIFAR_CLASSES = 10


def round_half_away(x: float) -> int:
    """Round half away from zero (0.5 -> 1), unlike Python's bankers rounding."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass
class ClassProfile:
    """Per-class labeled-count targets, sorted non-increasing by class index."""

    counts: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1 or len(self.counts) < 1:
            raise ConfigError("profile needs a 1-D count vector")
        if np.any(np.diff(self.counts) > 0):
            raise ConfigError("profile counts must be non-increasing")
        if np.any(self.counts < 1):
            raise ConfigError("profile counts must be >= 1")

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def exponential_profile(num_classes: int, n_max: int, imbalance: float) -> ClassProfile:
    """counts[j] = round(n_max * imbalance^(-j/(C-1))), clamped to >= 1."""
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if imbalance < 1:
        raise ConfigError(f"imbalance factor must be >= 1, got {imbalance}")
    if n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max}")
    counts = [
        max(1, round_half_away(n_max * imbalance ** (-j / (num_classes - 1))))
        for j in range(num_classes)
    ]
    return ClassProfile(np.array(counts), "exponential", {"n_max": n_max, "imbalance": imbalance})


def lomax_draws(n: int, alpha: float, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Raw Lomax samples via inverse CDF: scale * (U^(-1/alpha) - 1), U in (0, 1]."""
    if alpha <= 0 or scale <= 0:
        raise ConfigError(f"Lomax needs alpha > 0 and scale > 0, got {alpha}, {scale}")
    u = 1.0 - rng.random(n)
    return scale * (u ** (-1.0 / alpha) - 1.0)


def lomax_profile(num_classes: int, alpha: float, scale: float, cap: int, floor: int, seed: int) -> ClassProfile:
    """Per-class counts drawn from a Lomax, rounded, clamped into [floor, cap], sorted."""
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if not cap >= floor >= 1:
        raise ConfigError(f"need cap >= floor >= 1, got cap={cap}, floor={floor}")
    rng = np.random.default_rng(seed)
    draws = lomax_draws(num_classes, alpha, scale, rng)
    counts = np.clip([round_half_away(s) for s in draws], floor, cap)
    counts = np.sort(counts)[::-1]
    return ClassProfile(
        counts, "lomax", {"alpha": alpha, "scale": scale, "cap": cap, "floor": floor, "seed": seed}
    )


def lomax_shape_profile(num_classes: int, alpha: float, scale: float, n_max: int, floor: int) -> ClassProfile:
    """Deterministic profile tracing the Lomax density over the class index.

    counts[j] = round(n_max * (1 + j/scale)^-(alpha+1)), clamped to >= floor.
    With 1000 classes, alpha=6, scale=1000, n_max=250, floor=2 this yields
    41,134 samples in total, tail counts hitting the floor naturally.
    """
    if num_classes < 2 or n_max < 1 or floor < 1:
        raise ConfigError("bad lomax_shape_profile parameters")
    if alpha <= 0 or scale <= 0:
        raise ConfigError(f"Lomax needs alpha > 0 and scale > 0, got {alpha}, {scale}")
    counts = [
        max(floor, round_half_away(n_max * (1.0 + j / scale) ** (-(alpha + 1.0))))
        for j in range(num_classes)
    ]
    return ClassProfile(
        np.array(counts),
        "lomax_shape",
        {"alpha": alpha, "scale": scale, "n_max": n_max, "floor": floor},
    )


def explicit_profile(counts) -> ClassProfile:
    return ClassProfile(np.asarray(counts), "explicit")


@dataclass
class LabeledSet:
    """Feature matrix plus labels; per-class counts are tallied and validated."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    class_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError(f"features {self.features.shape} vs labels {self.labels.shape}")
        if len(self.labels) and not (0 <= self.labels.min() and self.labels.max() < self.num_classes):
            raise DataError(f"labels outside [0, {self.num_classes})")
        if not np.isfinite(self.features).all():
            raise DataError("non-finite features")
        self.class_counts = np.bincount(self.labels, minlength=self.num_classes)

    def __len__(self) -> int:
        return len(self.labels)

    def example(self, i: int) -> tuple[np.ndarray, int]:
        return self.features[i], int(self.labels[i])


@dataclass
class UnlabeledSet:
    """Features only. ``hidden_labels`` exist solely so pseudo-label accuracy can
    be scored on generated tasks; the training path never touches them."""

    features: np.ndarray
    num_classes: int
    hidden_labels: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DataError(f"features must be 2-D, got {self.features.shape}")
        if self.hidden_labels is not None:
            self.hidden_labels = np.asarray(self.hidden_labels, dtype=np.int64)
            if len(self.hidden_labels) != len(self.features):
                raise DataError("hidden labels do not match feature count")

    def __len__(self) -> int:
        return len(self.features)


@dataclass
class PseudoLabeledSet:
    """Pseudo labels for every sample of an UnlabeledSet, by sample id."""

    sample_ids: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.sample_ids) != len(self.labels):
            raise DataError("one pseudo label per sample id required")
        if len(self.labels) and self.labels.max() >= self.num_classes:
            raise DataError("pseudo label outside class range")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class CountThresholds:
    """many: n > hi, medium: lo < n <= hi, few: n <= lo."""

    hi: int
    lo: int


@dataclass(frozen=True)
class RankBuckets:
    """many: top ``many_k`` classes by count rank, medium: next ``medium_k``, few: rest."""

    many_k: int
    medium_k: int


@dataclass
class SplitSpec:
    """Every class tagged with exactly one of many/medium/few."""

    tags: list[str]

    def __post_init__(self):
        bad = [t for t in self.tags if t not in SPLITS]
        if bad:
            raise ConfigError(f"unknown split tags: {bad}")

    @property
    def num_classes(self) -> int:
        return len(self.tags)

    def classes(self, split: str) -> np.ndarray:
        return np.array([j for j, t in enumerate(self.tags) if t == split], dtype=np.int64)

    def masks(self) -> dict[str, np.ndarray]:
        tags = np.array(self.tags)
        return {s: tags == s for s in SPLITS}


def assign_splits(profile: ClassProfile, mode) -> SplitSpec:
    """Tag classes many/medium/few from labeled counts or count rank."""
    counts = profile.counts
    if isinstance(mode, CountThresholds):
        if not mode.hi > mode.lo >= 1:
            raise ConfigError(f"need hi > lo >= 1, got hi={mode.hi}, lo={mode.lo}")
        tags = [MANY if n > mode.hi else MEDIUM if n > mode.lo else FEW for n in counts]
    elif isinstance(mode, RankBuckets):
        if mode.many_k < 0 or mode.medium_k < 0 or mode.many_k + mode.medium_k > len(counts):
            raise ConfigError(f"bucket sizes {mode.many_k}+{mode.medium_k} exceed C={len(counts)}")
        # counts are non-increasing by class index, so rank order is index
        # order; equal counts keep the lower class index first.
        tags = [
            MANY if j < mode.many_k else MEDIUM if j < mode.many_k + mode.medium_k else FEW
            for j in range(len(counts))
        ]
    else:
        raise ConfigError(f"unknown split mode {mode!r}")
    spec = SplitSpec(tags)
    for s in SPLITS:
        if len(spec.classes(s)) == 0:
            warnings.warn(f"split {s!r} is empty", stacklevel=2)
    return spec


@dataclass
class SyntheticTask:
    labeled: LabeledSet
    unlabeled: UnlabeledSet
    test: LabeledSet
    splits: SplitSpec
    means: np.ndarray
    seed: int


def _apportion(weights: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder split of ``total`` proportional to ``weights``.

    Every share is the floor or ceiling of its exact quota, which keeps
    |share/total - weight/sum| < 1/total for every class. Ties go to the
    lower class index.
    """
    quotas = weights * (total / weights.sum())
    shares = np.floor(quotas).astype(np.int64)
    remainder = total - int(shares.sum())
    order = np.argsort(-(quotas - shares), kind="stable")
    shares[order[:remainder]] += 1
    return shares


def _place_means(num_classes: int, d_in: int, class_sep: float, rng: np.random.Generator) -> np.ndarray:
    """Seeded random directions, rescaled so the min pairwise distance is class_sep."""
    means = rng.normal(size=(num_classes, d_in))
    dists = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
    min_dist = dists[~np.eye(num_classes, dtype=bool)].min()
    if min_dist <= 0.0:
        raise ConfigError(f"cannot separate {num_classes} class means in {d_in} dimensions")
    return means * (class_sep / min_dist)


def synth_gaussian_task(
    profile: ClassProfile,
    d_in: int,
    unlabeled_factor: float,
    class_sep: float,
    noise_sigma: float,
    test_per_class: int,
    seed: int,
    split_mode=RankBuckets(3, 3),
) -> SyntheticTask:
    """Gaussian-blob stand-in for a long-tailed image corpus.

    The labeled set follows ``profile`` exactly. The unlabeled set holds
    round(factor * N) samples apportioned to classes by largest remainder
    (labels retained but hidden), so per-class shares match the labeled
    distribution to within 1/M; integer factors give exactly factor * n_j.
    The test set is balanced with ``test_per_class`` samples per class.
    """
    if unlabeled_factor <= 0:
        raise ConfigError(f"unlabeled_factor must be > 0, got {unlabeled_factor}")
    if d_in < 1:
        raise ConfigError(f"d_in must be >= 1, got {d_in}")
    if noise_sigma < 0 or class_sep <= 0:
        raise ConfigError("need noise_sigma >= 0 and class_sep > 0")
    if test_per_class < 1:
        raise ConfigError("test_per_class must be >= 1")
    num_classes = profile.num_classes
    rng = np.random.default_rng(seed)
    means = _place_means(num_classes, d_in, class_sep, rng)

    def draw(count_per_class):
        feats, labels = [], []
        for j, nj in enumerate(count_per_class):
            feats.append(means[j] + noise_sigma * rng.normal(size=(int(nj), d_in)))
            labels.append(np.full(int(nj), j, dtype=np.int64))
        return np.concatenate(feats), np.concatenate(labels)

    lab_x, lab_y = draw(profile.counts)
    unl_counts = _apportion(profile.counts, round_half_away(unlabeled_factor * profile.total))
    unl_x, unl_y = draw(unl_counts)
    test_x, test_y = draw([test_per_class] * num_classes)

    return SyntheticTask(
        labeled=LabeledSet(lab_x, lab_y, num_classes),
        unlabeled=UnlabeledSet(unl_x, num_classes, hidden_labels=unl_y),
        test=LabeledSet(test_x, test_y, num_classes),
        splits=assign_splits(profile, split_mode),
        means=means,
        seed=seed,
    )


def subsample_to_profile(dataset: LabeledSet, profile: ClassProfile, seed: int) -> LabeledSet:
    """Uniform without-replacement per-class subsample; counts match the profile exactly."""
    if profile.num_classes != dataset.num_classes:
        raise ConfigError(
            f"profile has {profile.num_classes} classes, dataset has {dataset.num_classes}"
        )
    rng = np.random.default_rng(seed)
    keep = []
    for j, want in enumerate(profile.counts):
        pool = np.nonzero(dataset.labels == j)[0]
        if len(pool) < want:
            raise DataError(f"class {j} has {len(pool)} samples, profile wants {int(want)}")
        keep.append(rng.choice(pool, size=int(want), replace=False))
    keep = np.concatenate(keep)
    return LabeledSet(dataset.features[keep], dataset.labels[keep], dataset.num_classes)


def ingest_cifar10_binary(paths) -> LabeledSet:
    """Read CIFAR-10 binary files (3073-byte records), pixels scaled to [0, 1]."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    feats, labels = [], []
    for path in paths:
        raw = np.fromfile(path, dtype=np.uint8)
        if raw.size % CIFAR_RECORD != 0:
            offset = (raw.size // CIFAR_RECORD) * CIFAR_RECORD
            raise FormatError(
                f"{path}: {raw.size} bytes is not a whole number of {CIFAR_RECORD}-byte "
                f"records (trailing fragment starts at byte {offset})"
            )
        if raw.size == 0:
            continue
        records = raw.reshape(-1, CIFAR_RECORD)
        labels.append(records[:, 0].astype(np.int64))
        feats.append(records[:, 1:].astype(float) / 255.0)
    if not feats:
        return LabeledSet(np.empty((0, CIFAR_RECORD - 1)), np.empty(0, dtype=np.int64), CIFAR_CLASSES)
    return LabeledSet(np.concatenate(feats), np.concatenate(labels), CIFAR_CLASSES)


# --- manifest and on-disk task layout -------------------------------------

MANIFEST_NAME = "manifest.json"
ARRAYS_NAME = "arrays.npz"


def save_task(task: SyntheticTask, out_dir: str, extra: dict | None = None) -> str:
    """Write arrays plus a manifest describing the task; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    arrays = {
        "labeled_x": task.labeled.features,
        "labeled_y": task.labeled.labels,
        "unlabeled_x": task.unlabeled.features,
        "test_x": task.test.features,
        "test_y": task.test.labels,
        "means": task.means,
    }
    if task.unlabeled.hidden_labels is not None:
        arrays["unlabeled_hidden_y"] = task.unlabeled.hidden_labels
    arrays_path = os.path.join(out_dir, ARRAYS_NAME)
    tmp = arrays_path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, arrays_path)

    manifest = {
        "num_classes": task.labeled.num_classes,
        "feature_dim": task.labeled.features.shape[1],
        "seed": task.seed,
        "labeled_counts": task.labeled.class_counts.tolist(),
        "unlabeled_counts": (
            np.bincount(task.unlabeled.hidden_labels, minlength=task.labeled.num_classes).tolist()
            if task.unlabeled.hidden_labels is not None
            else None
        ),
        "unlabeled_total": len(task.unlabeled),
        "split_tags": task.splits.tags,
        "files": {"arrays": ARRAYS_NAME},
    }
    if extra:
        manifest.update(extra)
    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    tmp = manifest_path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return manifest_path


def load_task(in_dir: str) -> SyntheticTask:
    with open(os.path.join(in_dir, MANIFEST_NAME)) as fh:
        manifest = json.load(fh)
    arrays = np.load(os.path.join(in_dir, manifest["files"]["arrays"]))
    num_classes = manifest["num_classes"]
    hidden = arrays["unlabeled_hidden_y"] if "unlabeled_hidden_y" in arrays else None
    return SyntheticTask(
        labeled=LabeledSet(arrays["labeled_x"], arrays["labeled_y"], num_classes),
        unlabeled=UnlabeledSet(arrays["unlabeled_x"], num_classes, hidden_labels=hidden),
        test=LabeledSet(arrays["test_x"], arrays["test_y"], num_classes),
        splits=SplitSpec(list(manifest["split_tags"])),
        means=arrays["means"],
        seed=manifest["seed"],
    )
