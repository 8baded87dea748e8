"""Evaluation protocol: F-beta metrics, month-ahead scoring, criticality.

The month-ahead protocol scores a model on the month immediately
following its training or tuning window, against labels derived from
OP-mode, power and wind speed.  The criticality trace turns detections
into an integer health counter in [0, 1000]: +1 for a detection during
normal operation, -1 for a quiet step during normal operation, constant
whenever the OP-mode is not normal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detector import DetectorModel, anomaly_scores
from .errors import EmptyResult, IoFailure, LengthMismatch
from .ingest import NORMAL_OPMODE, ScadaFrame, TurbineConfig, derive_labels
from .metrics import ConfusionCounts, f_beta, precision, recall
from .timebase import format_timestamp

__all__ = [
    "ConfusionCounts",
    "CriticalityTrace",
    "EvaluationResult",
    "ComparisonRow",
    "ComparisonReport",
    "CaseStudyTrace",
    "f_beta",
    "evaluate_month",
    "criticality",
    "compare_models",
    "case_study_report",
    "write_comparison_json",
    "write_comparison_csv",
    "write_case_study_csv",
]

CRITICALITY_MIN = 0
CRITICALITY_MAX = 1000


@dataclass(frozen=True, eq=False)
class CriticalityTrace:
    """Per-timestamp criticality values, clamped to [0, 1000]."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.int64)
        if arr.size:
            if arr.min() < CRITICALITY_MIN or arr.max() > CRITICALITY_MAX:
                raise ValueError("criticality values outside [0, 1000]")
            if arr.size > 1 and np.abs(np.diff(arr)).max() > 1:
                raise ValueError("criticality must change by at most 1 per step")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]


def criticality(detections, op_modes) -> CriticalityTrace:
    """Accumulate detections into the clamped criticality counter.

    Starts from 0; the clamp applies after every step.
    """
    detected = np.asarray(detections, dtype=bool)
    ops = np.asarray(op_modes)
    if detected.shape != ops.shape:
        raise LengthMismatch("detections and op_modes differ in length")
    normal_op = ops == NORMAL_OPMODE
    out = np.empty(detected.shape[0], dtype=np.int64)
    level = 0
    for i in range(detected.shape[0]):
        if normal_op[i]:
            level += 1 if detected[i] else -1
            if level < CRITICALITY_MIN:
                level = CRITICALITY_MIN
            elif level > CRITICALITY_MAX:
                level = CRITICALITY_MAX
        out[i] = level
    return CriticalityTrace(out)


@dataclass(frozen=True)
class EvaluationResult:
    counts: ConfusionCounts
    precision: float
    recall: float
    f_half: float


def evaluate_month(
    model: DetectorModel, frame: ScadaFrame, config: TurbineConfig
) -> EvaluationResult:
    """Score one evaluation month with beta = 1/2.

    The caller slices the frame to the month immediately following the
    model's training or tuning window.
    """
    if len(frame) == 0:
        raise EmptyResult("evaluation frame is empty")
    labels = derive_labels(frame, config)
    detections = anomaly_scores(model, frame) > model.threshold
    counts = ConfusionCounts.from_detections(detections, labels)
    return EvaluationResult(
        counts=counts,
        precision=precision(counts),
        recall=recall(counts),
        f_half=f_beta(counts, 0.5),
    )


@dataclass(frozen=True)
class ComparisonRow:
    model_id: str
    f_half: float
    delta_f_half: float
    precision: float
    recall: float


@dataclass(frozen=True)
class ComparisonReport:
    baseline_id: str
    rows: tuple[ComparisonRow, ...]


def compare_models(
    models: list[DetectorModel],
    eval_frame: ScadaFrame,
    config: TurbineConfig,
    baseline_id: str | None = None,
) -> ComparisonReport:
    """Evaluate several models on one month and diff F1/2 vs a baseline.

    ``baseline_id`` selects the baseline by model id; by default the
    first model is the baseline.
    """
    if not models:
        raise EmptyResult("no models to compare")
    ids = [m.model_id for m in models]
    if baseline_id is None:
        baseline_id = ids[0]
    if baseline_id not in ids:
        raise EmptyResult(f"baseline {baseline_id!r} not among models {ids}")

    results = [evaluate_month(m, eval_frame, config) for m in models]
    baseline_f = results[ids.index(baseline_id)].f_half
    rows = tuple(
        ComparisonRow(
            model_id=mid,
            f_half=res.f_half,
            delta_f_half=res.f_half - baseline_f,
            precision=res.precision,
            recall=res.recall,
        )
        for mid, res in zip(ids, results)
    )
    return ComparisonReport(baseline_id=baseline_id, rows=rows)


@dataclass(frozen=True, eq=False)
class CaseStudyTrace:
    """Plot-ready per-timestamp trace of one model over one period."""

    timestamps: np.ndarray
    scores: np.ndarray
    threshold: float
    detected: np.ndarray
    op_modes: np.ndarray
    criticality: np.ndarray


def case_study_report(
    model: DetectorModel, frame: ScadaFrame, config: TurbineConfig
) -> CaseStudyTrace:
    """Score, detect and accumulate criticality over a whole period."""
    scores = anomaly_scores(model, frame)
    detected = scores > model.threshold
    trace = criticality(detected, frame.op_modes)
    return CaseStudyTrace(
        timestamps=frame.timestamps,
        scores=scores,
        threshold=model.threshold,
        detected=detected,
        op_modes=frame.op_modes,
        criticality=trace.values,
    )


# ---------------------------------------------------------------------------
# Report emission


def comparison_as_dict(report: ComparisonReport) -> dict:
    return {
        "baseline_id": report.baseline_id,
        "rows": [
            {
                "model_id": row.model_id,
                "f_half": row.f_half,
                "delta_f_half": row.delta_f_half,
                "precision": row.precision,
                "recall": row.recall,
            }
            for row in report.rows
        ],
    }


def write_comparison_json(report: ComparisonReport, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(comparison_as_dict(report), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def write_comparison_csv(report: ComparisonReport, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_id", "f_half", "delta_f_half", "precision", "recall"])
            for row in report.rows:
                writer.writerow(
                    [row.model_id, repr(row.f_half), repr(row.delta_f_half),
                     repr(row.precision), repr(row.recall)]
                )
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def write_case_study_csv(trace: CaseStudyTrace, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["timestamp", "score", "threshold", "detected", "op_mode", "criticality"]
            )
            for i in range(len(trace.timestamps)):
                writer.writerow(
                    [
                        format_timestamp(trace.timestamps[i]),
                        repr(float(trace.scores[i])),
                        repr(trace.threshold),
                        "true" if trace.detected[i] else "false",
                        trace.op_modes[i],
                        int(trace.criticality[i]),
                    ]
                )
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
