"""Precision/recall/F-beta over binary detections (anomalous = positive)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_detections(cls, detections, labels) -> "ConfusionCounts":
        detected = np.asarray(detections, dtype=bool)
        positive = np.asarray(
            labels.anomalous if hasattr(labels, "anomalous") else labels, dtype=bool
        )
        if detected.shape != positive.shape:
            raise LengthMismatch("detections and labels differ in length")
        return cls(
            tp=int(np.sum(detected & positive)),
            fp=int(np.sum(detected & ~positive)),
            tn=int(np.sum(~detected & ~positive)),
            fn=int(np.sum(~detected & positive)),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def precision(counts: ConfusionCounts) -> float:
    if counts.tp == 0:
        return 0.0
    return counts.tp / (counts.tp + counts.fp)


def recall(counts: ConfusionCounts) -> float:
    if counts.tp == 0:
        return 0.0
    return counts.tp / (counts.tp + counts.fn)


def f_beta(counts: ConfusionCounts, beta: float) -> float:
    """F_beta = (1 + b^2) P R / (b^2 P + R), defined as 0 when tp = 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return float(
        f_beta_arrays(
            np.asarray([counts.tp]), np.asarray([counts.fp]), np.asarray([counts.fn]), beta
        )[0]
    )


def f_beta_arrays(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray, beta: float) -> np.ndarray:
    """Vectorised F_beta over aligned count arrays; 0 wherever tp = 0."""
    tp = np.asarray(tp, dtype=np.float64)
    fp = np.asarray(fp, dtype=np.float64)
    fn = np.asarray(fn, dtype=np.float64)
    out = np.zeros(tp.shape, dtype=np.float64)
    live = tp > 0
    p = tp[live] / (tp[live] + fp[live])
    r = tp[live] / (tp[live] + fn[live])
    b2 = beta * beta
    out[live] = (1.0 + b2) * p * r / (b2 * p + r)
    return out
