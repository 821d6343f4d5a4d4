"""Calibration and classification scoring, probability-band triage,
and before/after comparison of rescored predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    brier: float
    support: int
    positive_class_id: int
    zero_division: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "brier": self.brier,
            "support": self.support,
            "positive_class_id": self.positive_class_id,
            "zero_division": self.zero_division,
        }


def brier_score(predicted_positive_probs, outcomes) -> float:
    """Mean squared gap between positive-class probabilities and 0/1 outcomes."""
    probs = np.asarray(predicted_positive_probs, dtype=np.float64)
    outs = np.asarray(outcomes)
    if probs.ndim != 1 or outs.ndim != 1:
        raise ValidationError("brier_score expects 1-d inputs")
    if probs.size != outs.size:
        raise ValidationError(f"length mismatch: {probs.size} probabilities vs {outs.size} outcomes")
    if probs.size == 0:
        raise ValidationError("brier_score needs at least one prediction")
    if np.any(probs < 0.0) or np.any(probs > 1.0) or not np.all(np.isfinite(probs)):
        raise ValidationError("probabilities must lie in [0, 1]")
    if not np.all((outs == 0) | (outs == 1)):
        raise ValidationError("outcomes must be 0 or 1")
    diff = probs - outs.astype(np.float64)
    return float(np.mean(diff * diff))


def classification_metrics(
    predicted_labels,
    true_labels,
    positive_class: int = 1,
    positive_probs=None,
) -> MetricsReport:
    """Binary precision/recall/F1/accuracy against one positive class.

    Brier uses positive_probs when given; otherwise the hard 0/1
    predictions stand in as probabilities. Zero-division cases report 0
    and set the flag.
    """
    pred = np.asarray(predicted_labels)
    true = np.asarray(true_labels)
    if pred.ndim != 1 or true.ndim != 1 or pred.size != true.size:
        raise ValidationError("predicted and true labels must be equal-length 1-d sequences")
    if pred.size == 0:
        raise ValidationError("need at least one prediction")
    for name, arr in (("predicted", pred), ("true", true)):
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValidationError(f"{name} labels must be integers")
        if arr.min() < 0:
            raise ValidationError(f"unknown {name} label value {arr.min()}")

    pred_pos = pred == positive_class
    true_pos = true == positive_class
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    zero_division = False
    if tp + fp == 0:
        precision, zero_division = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, zero_division = 0.0, True
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f1 = 0.0
        zero_division = zero_division or (tp + fp > 0 or tp + fn > 0)
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    accuracy = float(np.mean(pred == true))
    if positive_probs is not None:
        brier = brier_score(positive_probs, true_pos.astype(np.int64))
    else:
        brier = brier_score(pred_pos.astype(np.float64), true_pos.astype(np.int64))
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        brier=brier,
        support=int(pred.size),
        positive_class_id=positive_class,
        zero_division=zero_division,
    )


# ---------------------------------------------------------------------------
# probability bands and triage


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    lo_open: bool
    hi_open: bool
    label: str

    def contains(self, v: float) -> bool:
        above = v > self.lo if self.lo_open else v >= self.lo
        below = v < self.hi if self.hi_open else v <= self.hi
        return above and below

    def pretty(self) -> str:
        return f"{'(' if self.lo_open else '['}{self.lo}, {self.hi}{')' if self.hi_open else ']'}"


@dataclass
class BandSpec:
    """Disjoint intervals covering [0, 1] exactly, one designated uncertain."""

    bands: list[Band]
    uncertain_index: int

    def __post_init__(self):
        if not self.bands:
            raise ValidationError("band spec needs at least one band")
        if not (0 <= self.uncertain_index < len(self.bands)):
            raise ValidationError("uncertain_index out of range")
        for b in self.bands:
            if not (0.0 <= b.lo <= b.hi <= 1.0):
                raise ValidationError(f"band {b.pretty()} outside [0, 1] or inverted")
            if b.lo == b.hi and not (b.lo_open and b.hi_open):
                raise ValidationError(f"zero-width band {b.pretty()} must be open on both sides")
        # probe boundaries and midpoints: each point must land in exactly one band
        edges = sorted({0.0, 1.0} | {b.lo for b in self.bands} | {b.hi for b in self.bands})
        probes = list(edges)
        probes.extend((a + b) / 2.0 for a, b in zip(edges, edges[1:]))
        for v in probes:
            hits = sum(1 for b in self.bands if b.contains(v))
            if hits != 1:
                raise ValidationError(
                    f"bands must partition [0, 1]: value {v} matched {hits} bands"
                )

    @property
    def uncertain(self) -> Band:
        return self.bands[self.uncertain_index]

    def band_index(self, v: float) -> int:
        for i, b in enumerate(self.bands):
            if b.contains(v):
                return i
        raise ValidationError(f"probability {v} outside [0, 1]")

    @classmethod
    def default(cls) -> "BandSpec":
        return cls(
            bands=[
                Band(0.0, 0.3, False, False, "confident_low"),
                Band(0.3, 0.45, True, False, "lean_low"),
                Band(0.45, 0.55, True, True, "uncertain"),
                Band(0.55, 0.7, False, True, "lean_high"),
                Band(0.7, 1.0, False, False, "confident_high"),
            ],
            uncertain_index=2,
        )

    @classmethod
    def from_edges(cls, edges, uncertain: tuple[float, float]) -> "BandSpec":
        """Build a partition from sorted edges; the (lo, hi) uncertain interval
        (whose endpoints must be edges) becomes open on both sides.

        Interior edge points belong to the band on their left, except
        that the band following a nonempty uncertain interval keeps its
        left endpoint. A zero-width uncertain interval on an interior
        edge yields an empty open band.
        """
        edges = [float(e) for e in edges]
        if len(edges) < 2 or edges[0] != 0.0 or edges[-1] != 1.0 or sorted(edges) != edges:
            raise ValidationError("band edges must be sorted and run from 0.0 to 1.0")
        u_lo, u_hi = float(uncertain[0]), float(uncertain[1])
        if u_lo not in edges or u_hi not in edges or u_lo > u_hi:
            raise ValidationError("uncertain interval endpoints must be (ordered) band edges")
        if u_lo == u_hi and not (0.0 < u_lo < 1.0):
            raise ValidationError("zero-width uncertain band must sit on an interior edge")
        bands: list[Band] = []
        uncertain_index = None
        for j, (lo, hi) in enumerate(zip(edges, edges[1:])):
            if u_lo == u_hi and lo == u_lo:
                uncertain_index = len(bands)
                bands.append(Band(u_lo, u_hi, True, True, "uncertain"))
            if (lo, hi) == (u_lo, u_hi):
                uncertain_index = len(bands)
                bands.append(Band(lo, hi, True, True, "uncertain"))
                continue
            after_uncertain = u_lo < u_hi and lo == u_hi
            lo_open = j > 0 and not after_uncertain
            bands.append(Band(lo, hi, lo_open, False, f"band_{lo}_{hi}"))
        if uncertain_index is None:
            raise ValidationError("uncertain interval must align with consecutive edges")
        return cls(bands=bands, uncertain_index=uncertain_index)


@dataclass
class BandReport:
    label: str
    interval: str
    count: int
    correct: int
    accuracy: float | None
    is_uncertain: bool


@dataclass
class TriageReport:
    bands: list[BandReport]
    flagged_ids: list[str]
    total: int

    def to_dict(self) -> dict:
        return {
            "bands": [
                {
                    "label": b.label,
                    "interval": b.interval,
                    "count": b.count,
                    "correct": b.correct,
                    "accuracy": b.accuracy,
                    "is_uncertain": b.is_uncertain,
                }
                for b in self.bands
            ],
            "flagged_ids": list(self.flagged_ids),
            "total": self.total,
        }


def bucket_predictions(
    summaries,
    truths,
    bands: BandSpec,
    ids=None,
    positive_class: int = 1,
) -> TriageReport:
    """Assign each prediction to a band by its positive-class mean probability."""
    summaries = list(summaries)
    truths = list(truths)
    if len(summaries) != len(truths):
        raise ValidationError("summaries and truths must have equal length")
    if ids is None:
        ids = [str(i) for i in range(len(summaries))]
    ids = list(ids)
    if len(ids) != len(summaries):
        raise ValidationError("ids and summaries must have equal length")

    counts = [0] * len(bands.bands)
    corrects = [0] * len(bands.bands)
    flagged: list[str] = []
    for ex_id, summary, truth in zip(ids, summaries, truths):
        p_pos = float(summary.mean_prob[positive_class])
        k = bands.band_index(p_pos)
        counts[k] += 1
        if summary.predicted_class == truth:
            corrects[k] += 1
        if k == bands.uncertain_index:
            flagged.append(ex_id)
    reports = [
        BandReport(
            label=b.label,
            interval=b.pretty(),
            count=counts[k],
            correct=corrects[k],
            accuracy=(corrects[k] / counts[k]) if counts[k] else None,
            is_uncertain=(k == bands.uncertain_index),
        )
        for k, b in enumerate(bands.bands)
    ]
    return TriageReport(bands=reports, flagged_ids=flagged, total=len(summaries))


# ---------------------------------------------------------------------------
# before/after comparison for the rescore workflow


@dataclass
class ComparisonReport:
    flagged_count: int
    accuracy_before: float | None
    accuracy_after: float | None
    accuracy_delta: float | None
    accuracy_delta_relative: float | None
    brier_before: float | None
    brier_after: float | None
    brier_delta: float | None
    brier_delta_relative: float | None
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "flagged_count": self.flagged_count,
            "accuracy_before": self.accuracy_before,
            "accuracy_after": self.accuracy_after,
            "accuracy_delta": self.accuracy_delta,
            "accuracy_delta_relative": self.accuracy_delta_relative,
            "brier_before": self.brier_before,
            "brier_after": self.brier_after,
            "brier_delta": self.brier_delta,
            "brier_delta_relative": self.brier_delta_relative,
            "warning": self.warning,
        }


def _normalize_keyed(entries) -> dict:
    if hasattr(entries, "items"):
        return dict(entries.items())
    out = {}
    for ex_id, summary, truth in entries:
        if ex_id in out:
            raise ValidationError(f"duplicate id {ex_id!r}")
        out[ex_id] = (summary, truth)
    return out


def rescore_compare(before, after, flagged_ids, positive_class: int = 1) -> ComparisonReport:
    """Accuracy and Brier on the flagged subset, before vs after replacement.

    `before` and `after` are (id -> (PredictiveSummary, truth)) mappings
    or (id, summary, truth) iterables keyed by identical ids. Deltas are
    after minus before, reported absolute and relative.
    """
    before = _normalize_keyed(before)
    after = _normalize_keyed(after)
    if set(before) != set(after):
        missing = set(before).symmetric_difference(after)
        raise ValidationError(f"before/after id mismatch: {', '.join(sorted(missing)[:5])}")
    flagged = list(flagged_ids)
    unknown = [i for i in flagged if i not in before]
    if unknown:
        raise ValidationError(f"flagged ids not present: {', '.join(sorted(unknown)[:5])}")
    for ex_id in flagged:
        if before[ex_id][1] != after[ex_id][1]:
            raise ValidationError(f"truth label changed between before/after for id {ex_id!r}")

    if not flagged:
        return ComparisonReport(
            flagged_count=0,
            accuracy_before=None,
            accuracy_after=None,
            accuracy_delta=None,
            accuracy_delta_relative=None,
            brier_before=None,
            brier_after=None,
            brier_delta=None,
            brier_delta_relative=None,
            warning="no flagged ids; nothing to compare",
        )

    def _scores(keyed):
        preds = [keyed[i][0].predicted_class for i in flagged]
        truths = [keyed[i][1] for i in flagged]
        probs = [float(keyed[i][0].mean_prob[positive_class]) for i in flagged]
        acc = float(np.mean(np.asarray(preds) == np.asarray(truths)))
        bri = brier_score(probs, [1 if t == positive_class else 0 for t in truths])
        return acc, bri

    acc_b, bri_b = _scores(before)
    acc_a, bri_a = _scores(after)
    return ComparisonReport(
        flagged_count=len(flagged),
        accuracy_before=acc_b,
        accuracy_after=acc_a,
        accuracy_delta=acc_a - acc_b,
        accuracy_delta_relative=((acc_a - acc_b) / acc_b) if acc_b > 0 else None,
        brier_before=bri_b,
        brier_after=bri_a,
        brier_delta=bri_a - bri_b,
        brier_delta_relative=((bri_a - bri_b) / bri_b) if bri_b > 0 else None,
    )
