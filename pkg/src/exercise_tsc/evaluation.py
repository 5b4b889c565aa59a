"""Participant-grouped splits, probability-averaging ensembles and metrics."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._store import dumps_json
from .errors import (EmptyIntersectionError, ShapeMismatchError, TooFewParticipantsError,
                     UnknownLabelError, ValidationError)

log = logging.getLogger(__name__)

NUM_SPLITS = 3
TEST_FRACTION = 0.30
VALIDATION_FRACTION = 0.15
MIN_PARTICIPANTS = 10
REPORT_SCHEMA_VERSION = 1


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Split:
    train: tuple
    validation: tuple
    test: tuple
    seed: int

    @property
    def fit_participants(self) -> tuple:
        """Train plus validation: what the final model is trained on."""
        return tuple(sorted(self.train + self.validation))


@dataclass(frozen=True)
class SplitPlan:
    splits: tuple
    test_fraction: float = TEST_FRACTION
    validation_fraction: float = VALIDATION_FRACTION

    def to_dict(self) -> dict:
        return {
            "test_fraction": self.test_fraction,
            "validation_fraction": self.validation_fraction,
            "splits": [
                {"train": list(s.train), "validation": list(s.validation),
                 "test": list(s.test), "seed": s.seed}
                for s in self.splits
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitPlan":
        splits = tuple(Split(tuple(s["train"]), tuple(s["validation"]), tuple(s["test"]),
                             int(s["seed"])) for s in d["splits"])
        return cls(splits, d["test_fraction"], d["validation_fraction"])


def make_splits(participants, seed: int, num_splits: int = NUM_SPLITS,
                test_fraction: float = TEST_FRACTION,
                validation_fraction: float = VALIDATION_FRACTION) -> SplitPlan:
    """Draw ``num_splits`` independent participant-level train/validation/test partitions.

    Split ``i`` shuffles the sorted participant ids with
    ``PCG64(SeedSequence(seed, spawn_key=(i,)))``; the first
    ``round(test_fraction * n)`` go to test, then ``round(validation_fraction *
    rest)`` of the remainder to validation (rounding half up).
    """
    ids = sorted({str(p) for p in participants})
    if len(ids) < MIN_PARTICIPANTS:
        raise TooFewParticipantsError(
            f"{len(ids)} participants; at least {MIN_PARTICIPANTS} required")
    n_test = round_half_up(test_fraction * len(ids))
    splits = []
    for i in range(num_splits):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
        perm = [ids[j] for j in rng.permutation(len(ids))]
        test, rest = perm[:n_test], perm[n_test:]
        n_val = round_half_up(validation_fraction * len(rest))
        val, train = rest[:n_val], rest[n_val:]
        splits.append(Split(tuple(sorted(train)), tuple(sorted(val)), tuple(sorted(test)), seed))
    return SplitPlan(tuple(splits), test_fraction, validation_fraction)


def ensemble_predict(probability_matrices, classes=None):
    """Average per-model class probabilities; return ``(probabilities, label_indices)``.

    With ``classes`` given, labels are returned instead of indices. Ties go to
    the lowest class index.
    """
    mats = [np.asarray(p, dtype=np.float64) for p in probability_matrices]
    if not mats:
        raise ValidationError("no probability matrices given")
    shape = mats[0].shape
    if len(shape) != 2 or any(m.shape != shape for m in mats):
        raise ShapeMismatchError(f"probability matrices differ in shape: {[m.shape for m in mats]}")
    for m in mats:
        if not np.allclose(m.sum(axis=1), 1.0, atol=1e-6):
            raise ValidationError("probability rows must sum to 1")
    avg = np.mean(np.stack(mats), axis=0)
    idx = np.argmax(avg, axis=1)
    if classes is not None:
        return avg, np.asarray(classes, dtype=object)[idx]
    return avg, idx


def check_class_order(models_classes) -> tuple:
    first = tuple(models_classes[0])
    for c in models_classes[1:]:
        if tuple(c) != first:
            raise ShapeMismatchError(f"class order mismatch: {first} vs {tuple(c)}")
    return first


@dataclass
class SplitMetrics:
    accuracy: float
    precision: dict
    recall: dict
    confusion: list           # rows = truth, columns = prediction
    test_counts: dict
    train_counts: dict = field(default_factory=dict)


def evaluate(predictions, truth, classes) -> SplitMetrics:
    classes = tuple(classes)
    pred = np.asarray(predictions, dtype=object)
    true = np.asarray(truth, dtype=object)
    if pred.shape != true.shape:
        raise ShapeMismatchError("predictions and truth differ in length")
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        pi = np.array([lookup[p] for p in pred], dtype=np.int64)
        ti = np.array([lookup[t] for t in true], dtype=np.int64)
    except KeyError as exc:
        raise UnknownLabelError(f"label {exc} not in classes {classes}") from None
    k = len(classes)
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (ti, pi), 1)
    total = cm.sum()
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    diag = np.diag(cm)
    precision = {c: float(diag[i] / col[i]) if col[i] else 0.0 for i, c in enumerate(classes)}
    recall = {c: float(diag[i] / row[i]) if row[i] else 0.0 for i, c in enumerate(classes)}
    return SplitMetrics(
        accuracy=float(diag.sum() / total) if total else 0.0,
        precision=precision, recall=recall, confusion=cm.tolist(),
        test_counts={c: int(row[i]) for i, c in enumerate(classes)},
    )


def class_counts(labels, classes) -> dict:
    labels = list(labels)
    return {c: labels.count(c) for c in classes}


def fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class EvaluationReport:
    name: str
    classes: tuple
    splits: list
    config: dict = field(default_factory=dict)

    @property
    def accuracies(self) -> list:
        return [s.accuracy for s in self.splits]

    @property
    def mean_accuracy(self) -> float:
        return float(sum(self.accuracies) / len(self.splits)) if self.splits else 0.0

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "name": self.name,
            "classes": list(self.classes),
            "config_fingerprint": fingerprint(self.config),
            "config": self.config,
            "mean_accuracy": self.mean_accuracy,
            "splits": [asdict(s) for s in self.splits],
        }

    def to_json(self) -> str:
        return dumps_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        if d.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValidationError(f"unsupported report schema {d.get('schema_version')}")
        return cls(d["name"], tuple(d["classes"]), [SplitMetrics(**s) for s in d["splits"]],
                   d.get("config", {}))

    def to_text(self) -> str:
        lines = [f"{self.name}", ""]
        width = max(8, max((len(c) for c in self.classes), default=0) + 2)
        lines.append(f"{'Split':<8}{'Accuracy':>10}")
        for i, s in enumerate(self.splits, 1):
            lines.append(f"{i:<8}{s.accuracy:>10.4f}")
        lines.append(f"{'Mean':<8}{self.mean_accuracy:>10.4f}")
        lines.append("")
        header = f"{'Class':<{width}}" + "".join(
            f"{h:>11}" for h in ("Train", "Test", "Precision", "Recall"))
        lines.append(header)
        for c in self.classes:
            train = np.mean([s.train_counts.get(c, 0) for s in self.splits])
            test = np.mean([s.test_counts.get(c, 0) for s in self.splits])
            prec = np.mean([s.precision[c] for s in self.splits])
            rec = np.mean([s.recall[c] for s in self.splits])
            lines.append(f"{c:<{width}}{train:>11.1f}{test:>11.1f}{prec:>11.3f}{rec:>11.3f}")
        lines.append("")
        for i, s in enumerate(self.splits, 1):
            lines.append(f"Confusion matrix, split {i} (rows = truth)")
            lines.append(" " * width + "".join(f"{c:>8}" for c in self.classes))
            for c, row in zip(self.classes, s.confusion):
                lines.append(f"{c:<{width}}" + "".join(f"{v:>8d}" for v in row))
            lines.append("")
        return "\n".join(lines)


def pair_modalities(imu_samples, video_samples) -> list:
    """Join repetitions of two modalities on ``(participant, label, repetition)``.

    Returns ``[(imu_sample, video_sample), ...]`` sorted by key. Keys present in
    only one modality are dropped with a warning.
    """
    def index(samples, what):
        out = {}
        for s in samples:
            if s.key in out:
                raise ValidationError(f"duplicate {what} repetition key {s.key}")
            out[s.key] = s
        return out

    a = index(imu_samples, "IMU")
    b = index(video_samples, "video")
    common = sorted(set(a) & set(b), key=lambda k: (str(k[0]), str(k[1]), k[2]))
    if not common:
        raise EmptyIntersectionError("no repetition is present in both modalities")
    dropped = len(a) + len(b) - 2 * len(common)
    if dropped:
        log.warning("pair_modalities: dropped %d unmatched repetitions", dropped)
    return [(a[k], b[k]) for k in common]
