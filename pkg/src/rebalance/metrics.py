"""Confusion-matrix statistics, F-beta, and cross-validation aggregation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class CvSummary:
    scores: tuple[float, ...]
    mean: float
    variance: float


def confusion(y_true, y_pred, positive_label) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or len(y_true) < 1:
        raise ValueError("y_true and y_pred must be equal-length 1-D vectors")
    actual = y_true == positive_label
    predicted = y_pred == positive_label
    return ConfusionCounts(
        tp=int(np.count_nonzero(actual & predicted)),
        fp=int(np.count_nonzero(~actual & predicted)),
        fn=int(np.count_nonzero(actual & ~predicted)),
        tn=int(np.count_nonzero(~actual & ~predicted)),
    )


def precision(c: ConfusionCounts) -> float:
    denom = c.tp + c.fp
    return c.tp / denom if denom else 0.0


def recall(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return c.tp / denom if denom else 0.0


def f_beta(c: ConfusionCounts, beta: float) -> float:
    """(1 + b^2) * P * R / (b^2 * P + R), with zero denominators giving 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    p, r = precision(c), recall(c)
    denom = beta * beta * p + r
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * p * r / denom


def minority_accuracy(c: ConfusionCounts) -> float:
    return recall(c)


def overall_accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total if c.total else 0.0


def aggregate(folds) -> CvSummary:
    """Mean and population variance over per-fold scores."""
    scores = tuple(float(s) for s in folds)
    if not scores:
        raise ValueError("need at least one fold score")
    mean = sum(scores) / len(scores)
    variance = sum((s - mean) ** 2 for s in scores) / len(scores)
    return CvSummary(scores=scores, mean=mean, variance=variance)
