"""Feature pipeline: prune columns, expand angles, min-max scale to [0, 1].

Fitting happens on the normal-behaviour training subset only.  Counters
and set points are dropped by role; low-variance columns (at most three
unique values) and columns that are mostly zero (strictly more than 80%)
are dropped by statistics; surviving angle columns become (sin, cos)
pairs before scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MissingColumn, NoFeaturesLeft
from .ingest import ColumnSchema, ScadaFrame

MAX_LOW_VARIANCE_UNIQUES = 3
MAX_ZERO_FRACTION = 0.8
_DROPPED_ROLES = ("counter", "setpoint")
_VARIANCE_RULE_ROLES = ("measurement", "angle")


@dataclass(frozen=True, eq=False)
class FeaturePipeline:
    """Fitted, immutable preprocessing transform."""

    kept_columns: tuple[str, ...]
    angle_columns: tuple[str, ...]
    feature_names: tuple[str, ...]
    min_vals: np.ndarray
    max_vals: np.ndarray

    def __post_init__(self):
        mins = np.ascontiguousarray(self.min_vals, dtype=np.float64)
        maxs = np.ascontiguousarray(self.max_vals, dtype=np.float64)
        expected = len(self.kept_columns) + len(self.angle_columns)
        if len(self.feature_names) != expected:
            raise LengthMismatch("feature_names inconsistent with kept/angle columns")
        if mins.shape != (len(self.feature_names),) or maxs.shape != mins.shape:
            raise LengthMismatch("min/max vectors must match feature_names")
        if not set(self.angle_columns) <= set(self.kept_columns):
            raise LengthMismatch("angle_columns must be a subset of kept_columns")
        if np.any(mins > maxs):
            raise LengthMismatch("min_vals must not exceed max_vals")
        mins.flags.writeable = False
        maxs.flags.writeable = False
        object.__setattr__(self, "kept_columns", tuple(self.kept_columns))
        object.__setattr__(self, "angle_columns", tuple(self.angle_columns))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "min_vals", mins)
        object.__setattr__(self, "max_vals", maxs)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Scaled model input aligned to the timestamps it came from."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    timestamps: np.ndarray


def fit_pipeline(frame: ScadaFrame, schema: list[ColumnSchema]) -> FeaturePipeline:
    """Fit pruning decisions and scaling bounds on a training frame."""
    if len(frame) == 0:
        raise NoFeaturesLeft("cannot fit a pipeline on an empty frame")
    roles = {c.name: c.role for c in schema}
    return fit_pipeline_matrix(frame.values, frame.column_names, roles)


def fit_pipeline_matrix(
    values: np.ndarray, column_names: tuple[str, ...], roles: dict[str, str]
) -> FeaturePipeline:
    """Matrix-level fit used directly when pooling several turbines."""
    kept: list[str] = []
    angles: list[str] = []
    for j, name in enumerate(column_names):
        role = roles.get(name, "measurement")
        if role in _DROPPED_ROLES:
            continue
        col = values[:, j]
        if role in _VARIANCE_RULE_ROLES and np.unique(col).size <= MAX_LOW_VARIANCE_UNIQUES:
            continue
        if np.mean(col == 0.0) > MAX_ZERO_FRACTION:
            continue
        kept.append(name)
        if role == "angle":
            angles.append(name)
    if not kept:
        raise NoFeaturesLeft("every column was pruned")

    feature_names = _expand_names(kept, angles)
    expanded = _expand_matrix(values, list(column_names), kept, angles)
    return FeaturePipeline(
        kept_columns=tuple(kept),
        angle_columns=tuple(angles),
        feature_names=tuple(feature_names),
        min_vals=expanded.min(axis=0),
        max_vals=expanded.max(axis=0),
    )


def apply_pipeline(pipeline: FeaturePipeline, frame: ScadaFrame) -> FeatureMatrix:
    """Transform a frame into the fitted feature space.

    Outputs are deliberately not clipped: rows outside the fitted range
    scale outside [0, 1] and stay visible to the reconstruction error.
    """
    values = transform_matrix(pipeline, frame.values, list(frame.column_names))
    return FeatureMatrix(
        values=values, feature_names=pipeline.feature_names, timestamps=frame.timestamps
    )


def transform_matrix(
    pipeline: FeaturePipeline, values: np.ndarray, column_names: list[str]
) -> np.ndarray:
    for name in pipeline.kept_columns:
        if name not in column_names:
            raise MissingColumn(f"input lacks pipeline column {name!r}")
    expanded = _expand_matrix(values, column_names, list(pipeline.kept_columns), list(pipeline.angle_columns))
    span = pipeline.max_vals - pipeline.min_vals
    scaled = np.zeros_like(expanded)
    live = span > 0
    scaled[:, live] = (expanded[:, live] - pipeline.min_vals[live]) / span[live]
    return scaled


def _expand_names(kept: list[str], angles: list[str]) -> list[str]:
    names = []
    for name in kept:
        if name in angles:
            names.extend([f"{name}_sin", f"{name}_cos"])
        else:
            names.append(name)
    return names


def _expand_matrix(
    values: np.ndarray, column_names: list[str], kept: list[str], angles: list[str]
) -> np.ndarray:
    """Select kept columns in order, mapping angles (degrees) to sin/cos."""
    n_rows = values.shape[0]
    n_features = len(kept) + len(angles)
    out = np.empty((n_rows, n_features), dtype=np.float64)
    angle_set = set(angles)
    j = 0
    for name in kept:
        col = values[:, column_names.index(name)]
        if name in angle_set:
            radians = col * (math.pi / 180.0)
            out[:, j] = np.sin(radians)
            out[:, j + 1] = np.cos(radians)
            j += 2
        else:
            out[:, j] = col
            j += 1
    return out
