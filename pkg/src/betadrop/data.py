"""Dataset model, file ingestion, splitters, paired files, synthetic generator.

Datasets are id-keyed feature vectors with integer labels, read from
JSONL ({"id", "label", "embedding"}) or CSV (header id,label,e0..e{d-1}).
Splits cover the evaluation protocols: stratified 80/20 with a
validation carve-out, k-shot-per-class with a fixed held-out test set,
zero-shot, and 5-fold cross-validation, all deterministic per
(seed, repetition).
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from ._rng import seed_seq
from .errors import ValidationError

VAL_FRACTION = 0.15  # of the training pool, carved out for early stopping
TEST_FRACTION = 0.20


@dataclass
class Dataset:
    ids: list[str]
    features: np.ndarray  # (n x feature_dim)
    labels: np.ndarray  # (n,) ints in [0, class_count)
    class_count: int = 2

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-d array")
        n = self.features.shape[0]
        if len(self.ids) != n or self.labels.shape != (n,):
            raise ValidationError("ids, features and labels must have equal length")
        if len(set(self.ids)) != n:
            raise ValidationError("duplicate example ids")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("non-finite feature values")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValidationError(f"labels outside [0, {self.class_count})")

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            ids=[self.ids[i] for i in indices],
            features=self.features[indices],
            labels=self.labels[indices],
            class_count=self.class_count,
        )

    def index_of(self) -> dict[str, int]:
        return {ex_id: i for i, ex_id in enumerate(self.ids)}


@dataclass
class PairedDataset:
    """Id-joined original/replacement feature pairs for the rescore workflow."""

    ids: list[str]
    features_original: np.ndarray
    features_replacement: np.ndarray
    labels: np.ndarray
    class_count: int
    missing_count: int  # original ids absent from the replacement file


@dataclass
class SplitPlan:
    mode: str  # full_80_20 | few_shot | zero_shot | kfold
    shots: int = 0
    folds: int = 5
    repetitions: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("full_80_20", "few_shot", "zero_shot", "kfold"):
            raise ValidationError(f"unknown split mode {self.mode!r}")
        if self.mode == "few_shot" and self.shots < 1:
            raise ValidationError("few_shot requires shots >= 1")
        if self.mode == "kfold" and self.folds < 2:
            raise ValidationError("kfold requires folds >= 2")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")


@dataclass
class Split:
    train: Dataset
    val: Dataset
    test: Dataset
    repetition: int
    fold: int | None = None


# ---------------------------------------------------------------------------
# file ingestion


def _err(path, line_no, msg) -> ValidationError:
    return ValidationError(f"{path}:{line_no}: {msg}")


def _check_vector(path, line_no, vec, dim):
    if not isinstance(vec, (list, tuple)) or not vec:
        raise _err(path, line_no, "embedding must be a nonempty list of numbers")
    if dim is not None and len(vec) != dim:
        raise _err(path, line_no, f"embedding length {len(vec)} != expected {dim}")
    for v in vec:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise _err(path, line_no, f"non-finite or non-numeric embedding value {v!r}")


def _check_label(path, line_no, label):
    if isinstance(label, bool) or not isinstance(label, int) or label < 0:
        raise _err(path, line_no, f"label must be a nonnegative integer, got {label!r}")


def _load_jsonl(path: Path):
    ids, vectors, labels = [], [], []
    seen = set()
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise _err(path, line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise _err(path, line_no, "row must be a JSON object")
            for key in ("id", "label", "embedding"):
                if key not in row:
                    raise _err(path, line_no, f"missing key {key!r}")
            ex_id = row["id"]
            if not isinstance(ex_id, str) or not ex_id:
                raise _err(path, line_no, f"id must be a nonempty string, got {ex_id!r}")
            if ex_id in seen:
                raise _err(path, line_no, f"duplicate id {ex_id!r}")
            _check_label(path, line_no, row["label"])
            _check_vector(path, line_no, row["embedding"], dim)
            seen.add(ex_id)
            ids.append(ex_id)
            labels.append(row["label"])
            vectors.append(row["embedding"])
            dim = len(row["embedding"]) if dim is None else dim
    return ids, vectors, labels


def _load_csv(path: Path):
    ids, vectors, labels = [], [], []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise _err(path, 1, "empty file") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise _err(path, 1, "header must be id,label,e0..e{d-1}")
        dim = len(header) - 2
        expected = [f"e{i}" for i in range(dim)]
        if header[2:] != expected:
            raise _err(path, 1, "embedding columns must be named e0..e{d-1} in order")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise _err(path, line_no, f"expected {dim + 2} columns, got {len(row)}")
            ex_id = row[0]
            if not ex_id:
                raise _err(path, line_no, "empty id")
            if ex_id in seen:
                raise _err(path, line_no, f"duplicate id {ex_id!r}")
            try:
                label = int(row[1])
            except ValueError:
                raise _err(path, line_no, f"label must be an integer, got {row[1]!r}") from None
            _check_label(path, line_no, label)
            try:
                vec = [float(v) for v in row[2:]]
            except ValueError:
                raise _err(path, line_no, "non-numeric embedding value") from None
            _check_vector(path, line_no, vec, dim)
            seen.add(ex_id)
            ids.append(ex_id)
            labels.append(label)
            vectors.append(vec)
    return ids, vectors, labels


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("jsonl", "csv"):
            raise ValidationError(f"unknown dataset format {fmt!r}")
        return fmt
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise ValidationError(f"cannot infer format from {path.name!r}; pass format explicitly")


def load_dataset(path, fmt: str | None = None, class_count: int | None = None) -> Dataset:
    """Load and validate a dataset file; errors cite the offending line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    kind = _infer_format(path, fmt)
    ids, vectors, labels = _load_jsonl(path) if kind == "jsonl" else _load_csv(path)
    if not ids:
        raise ValidationError(f"{path}: no examples")
    if class_count is None:
        class_count = max(2, max(labels) + 1)
    return Dataset(
        ids=ids,
        features=np.asarray(vectors, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        class_count=class_count,
    )


def _atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(ds: Dataset, path, fmt: str | None = None):
    """Write a dataset atomically; floats use repr so reload is exact."""
    path = Path(path)
    kind = _infer_format(path, fmt)
    lines = []
    if kind == "jsonl":
        for ex_id, vec, label in zip(ds.ids, ds.features, ds.labels):
            row = {"id": ex_id, "label": int(label), "embedding": [float(v) for v in vec]}
            lines.append(json.dumps(row, separators=(", ", ": ")))
    else:
        header = ["id", "label"] + [f"e{i}" for i in range(ds.feature_dim)]
        lines.append(",".join(header))
        for ex_id, vec, label in zip(ds.ids, ds.features, ds.labels):
            lines.append(",".join([ex_id, str(int(label))] + [repr(float(v)) for v in vec]))
    _atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# splitting


def _per_class_indices(labels: np.ndarray) -> dict[int, np.ndarray]:
    return {int(c): np.flatnonzero(labels == c) for c in np.unique(labels)}


def _stratified_take(labels, fraction, rng, min_per_class=1):
    """Pick ~fraction of indices per class; returns (taken, rest), both sorted."""
    taken = []
    for _, idx in sorted(_per_class_indices(labels).items()):
        k = max(min_per_class, int(round(fraction * idx.size))) if idx.size else 0
        k = min(k, idx.size)
        order = rng.permutation(idx.size)
        taken.extend(idx[order[:k]])
    taken = np.sort(np.asarray(taken, dtype=np.int64))
    rest = np.setdiff1d(np.arange(labels.size), taken)
    return taken, rest


def _carve_validation(ds: Dataset, pool: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Split a training pool into (train, val) with a stratified val carve-out."""
    val_rel, train_rel = _stratified_take(ds.labels[pool], VAL_FRACTION, rng)
    return pool[train_rel], pool[val_rel]


def _fixed_test(ds: Dataset, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed_seq(seed, 0))
    test, pool = _stratified_take(ds.labels, TEST_FRACTION, rng)
    return test, pool


def make_splits(ds: Dataset, plan: SplitPlan) -> list[Split]:
    """Materialize the plan into (train, val, test) triples, disjoint by id."""
    if len(ds) == 0:
        raise ValidationError("cannot split an empty dataset")
    splits: list[Split] = []

    if plan.mode == "full_80_20":
        for rep in range(plan.repetitions):
            rng = np.random.default_rng(seed_seq(plan.seed, rep + 1))
            test, pool = _stratified_take(ds.labels, TEST_FRACTION, rng)
            train, val = _carve_validation(ds, pool, rng)
            if train.size == 0 or val.size == 0 or test.size == 0:
                raise ValidationError("dataset too small for an 80/20 split with validation")
            splits.append(
                Split(train=ds.subset(train), val=ds.subset(val), test=ds.subset(test), repetition=rep)
            )
        return splits

    if plan.mode in ("few_shot", "zero_shot"):
        test, pool = _fixed_test(ds, plan.seed)
        if test.size == 0:
            raise ValidationError("dataset too small to hold out a test set")
        empty = ds.subset([])
        for rep in range(plan.repetitions):
            if plan.mode == "zero_shot":
                splits.append(
                    Split(train=empty, val=empty, test=ds.subset(test), repetition=rep)
                )
                continue
            rng = np.random.default_rng(seed_seq(plan.seed, rep + 1))
            train_parts = []
            for cls, idx in sorted(_per_class_indices(ds.labels[pool]).items()):
                if idx.size < plan.shots + 1:
                    raise ValidationError(
                        f"class {cls} has {idx.size} non-test examples; "
                        f"few_shot({plan.shots}) needs at least {plan.shots + 1}"
                    )
                order = rng.permutation(idx.size)
                train_parts.append(pool[idx[order[: plan.shots]]])
            train = np.sort(np.concatenate(train_parts))
            remainder = np.setdiff1d(pool, train)
            val_rel, _ = _stratified_take(ds.labels[remainder], VAL_FRACTION, rng)
            val = remainder[val_rel]
            splits.append(
                Split(train=ds.subset(train), val=ds.subset(val), test=ds.subset(test), repetition=rep)
            )
        return splits

    # kfold: stratified round-robin fold assignment per repetition
    for rep in range(plan.repetitions):
        rng = np.random.default_rng(seed_seq(plan.seed, rep + 1))
        fold_of = np.empty(len(ds), dtype=np.int64)
        offset = 0
        for _, idx in sorted(_per_class_indices(ds.labels).items()):
            order = rng.permutation(idx.size)
            fold_of[idx[order]] = (np.arange(idx.size) + offset) % plan.folds
            offset += idx.size
        for fold in range(plan.folds):
            test = np.flatnonzero(fold_of == fold)
            pool = np.flatnonzero(fold_of != fold)
            train, val = _carve_validation(ds, pool, rng)
            if train.size == 0 or val.size == 0 or test.size == 0:
                raise ValidationError(f"dataset too small for {plan.folds}-fold splitting")
            splits.append(
                Split(
                    train=ds.subset(train),
                    val=ds.subset(val),
                    test=ds.subset(test),
                    repetition=rep,
                    fold=fold,
                )
            )
    return splits


# ---------------------------------------------------------------------------
# synthetic data with known ground-truth probabilities


@dataclass
class SynthSpec:
    n: int = 1000
    dim: int = 2
    class_separation: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 10:
            raise ValidationError("synthetic n must be >= 10")
        if self.dim < 2:
            raise ValidationError("synthetic dim must be >= 2")
        if self.class_separation < 0:
            raise ValidationError("class_separation must be nonnegative")


def synth_generate(spec: SynthSpec) -> tuple[Dataset, np.ndarray]:
    """Two unit-variance Gaussian blobs separated along the first axis.

    Returns the dataset plus each example's exact positive-class
    posterior, which for symmetric equal-covariance blobs is
    sigmoid(separation * x[0]).
    """
    rng = np.random.default_rng(seed_seq(spec.seed))
    n0 = spec.n // 2
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(spec.n - n0, dtype=np.int64)])
    half = spec.class_separation / 2.0
    means = np.where(labels[:, None] == 1, half, -half) * np.eye(spec.dim)[0]
    features = means + rng.standard_normal((spec.n, spec.dim))
    order = rng.permutation(spec.n)
    features, labels = features[order], labels[order]
    true_probs = expit(spec.class_separation * features[:, 0])
    ids = [f"s{i:06d}" for i in range(spec.n)]
    ds = Dataset(ids=ids, features=features, labels=labels, class_count=2)
    return ds, true_probs


def save_true_probs(ids, probs, path):
    lines = [
        json.dumps({"id": ex_id, "true_positive_prob": float(p)}, separators=(", ", ": "))
        for ex_id, p in zip(ids, probs)
    ]
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def load_true_probs(path) -> dict[str, float]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                out[row["id"]] = float(row["true_positive_prob"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise _err(path, line_no, f"invalid sidecar row: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# paired files for rescoring


def load_paired(original_path, replacement_path) -> PairedDataset:
    """Join an original dataset with a replacement-features file by id.

    Replacement ids must all exist in the original; originals missing
    from the replacement restrict the pairing to the intersection and
    are counted as a warning.
    """
    original = load_dataset(original_path)
    replacement = load_dataset(replacement_path)
    if original.feature_dim != replacement.feature_dim:
        raise ValidationError(
            f"feature_dim mismatch: original {original.feature_dim}, "
            f"replacement {replacement.feature_dim}"
        )
    orig_index = original.index_of()
    unknown = [ex_id for ex_id in replacement.ids if ex_id not in orig_index]
    if unknown:
        raise ValidationError(
            f"replacement ids not present in original: {', '.join(sorted(unknown)[:5])}"
        )
    repl_index = replacement.index_of()
    ids = [ex_id for ex_id in original.ids if ex_id in repl_index]
    missing = len(original.ids) - len(ids)
    orig_rows = [orig_index[i] for i in ids]
    repl_rows = [repl_index[i] for i in ids]
    return PairedDataset(
        ids=ids,
        features_original=original.features[orig_rows],
        features_replacement=replacement.features[repl_rows],
        labels=original.labels[orig_rows],
        class_count=original.class_count,
        missing_count=missing,
    )
