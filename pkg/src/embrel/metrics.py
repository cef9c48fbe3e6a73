"""Rank correlation, average precision and F1 with deterministic tie handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInput, LengthMismatch, NoPositives


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for field in ("tp", "fp", "fn", "tn"):
            if getattr(self, field) < 0:
                raise ValueError(f"{field} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_labels(cls, y_true, y_pred, positive: int = 1) -> "ConfusionCounts":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise LengthMismatch(f"{y_true.shape} vs {y_pred.shape}")
        t = y_true == positive
        p = y_pred == positive
        return cls(
            tp=int(np.sum(t & p)),
            fp=int(np.sum(~t & p)),
            fn=int(np.sum(t & ~p)),
            tn=int(np.sum(~t & ~p)),
        )


def rankdata_average(x) -> np.ndarray:
    """1-based fractional ranks; tied values share the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    ranks = np.empty(len(x), dtype=np.float64)
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], len(x)]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    return ranks


def spearman_rho(xs, ys) -> float:
    """Spearman's rank correlation with average-rank ties."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or ys.ndim != 1 or len(xs) != len(ys):
        raise LengthMismatch(f"sequences differ in length: {xs.shape} vs {ys.shape}")
    if len(xs) < 2:
        raise DegenerateInput("need at least two observations")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("inputs must be finite")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise DegenerateInput("constant sequence has no rank correlation")
    rx = rankdata_average(xs)
    ry = rankdata_average(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))
    return min(1.0, max(-1.0, rho))


def average_precision(scores, gold) -> float:
    """Non-interpolated average precision.

    Items are ranked by descending score; equal scores keep input order.
    AP is the mean, over positive items, of the precision at their rank.
    """
    scores = np.asarray(scores, dtype=np.float64)
    gold = np.asarray(gold)
    if scores.ndim != 1 or gold.shape != scores.shape:
        raise LengthMismatch(f"scores and labels differ in shape: {scores.shape} vs {gold.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not np.all((gold == 0) | (gold == 1)):
        raise ValueError("gold labels must be binary")
    n_pos = int(np.sum(gold == 1))
    if n_pos == 0:
        raise NoPositives("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = (gold[order] == 1).astype(np.float64)
    precision_at = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float(np.sum(precision_at * hits) / n_pos)


def f1_score(counts: ConfusionCounts) -> float:
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 0.0
    return 2 * counts.tp / denom
