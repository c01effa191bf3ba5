"""Binary classification metrics for prediction benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class Metrics:
    precision: float
    sensitivity: float
    accuracy: float
    f1: float
    mcc: float


def _ratio(num: float, den: float) -> float:
    # 0/0 reports as 0
    return num / den if den else 0.0


def confusion_metrics(c: ConfusionCounts) -> Metrics:
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn
    mcc_den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return Metrics(
        precision=_ratio(tp, tp + fp),
        sensitivity=_ratio(tp, tp + fn),
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
        mcc=_ratio(tp * tn - fp * fn, mcc_den),
    )


def confusion_from_sets(predicted, positives, negatives) -> ConfusionCounts:
    """Score predictions against a truth set and a negative set.

    Any prediction outside the truth set is a false positive; negatives that
    were not predicted are true negatives.
    """
    predicted, positives, negatives = set(predicted), set(positives), set(negatives)
    tp = len(predicted & positives)
    return ConfusionCounts(
        tp=tp,
        fp=len(predicted - positives),
        tn=len(negatives - predicted),
        fn=len(positives - predicted),
    )
