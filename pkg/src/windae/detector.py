"""Detector assembly: pipeline + autoencoder + decision threshold.

A model is trained on the normal-behaviour subset of a training window,
scores every timestamp with the RMSE of its reconstruction residual in
the scaled feature space, and detects an anomaly where that score
strictly exceeds a threshold fitted to maximise the F1/2 score on the
labelled training window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadArtifact,
    BadSpec,
    EmptyInput,
    IoFailure,
    LengthMismatch,
    SchemaMismatch,
    ShapeMismatch,
)
from .ingest import ColumnSchema, LabelSeries, ScadaFrame, select_normal
from .metrics import f_beta_arrays
from .neural import DenseLayer, Network, build_network, forward, train_network
from .preprocess import (
    FeaturePipeline,
    apply_pipeline,
    fit_pipeline,
    fit_pipeline_matrix,
    transform_matrix,
)
from .timebase import GRID_STEP, format_timestamp

ARTIFACT_VERSION = 1
F_BETA = 0.5


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of a baseline training run."""

    hidden_sizes: tuple[int, ...]
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    high_power_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.learning_rate <= 0:
            raise BadSpec("learning_rate must be positive")
        if self.epochs < 1:
            raise BadSpec("epochs must be at least 1")
        if self.batch_size < 1:
            raise BadSpec("batch_size must be at least 1")

    def as_dict(self) -> dict:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "high_power_fraction": self.high_power_fraction,
        }


@dataclass(eq=False)
class DetectorModel:
    """Unit of training, transfer and serialization."""

    pipeline: FeaturePipeline
    network: Network
    threshold: float
    metadata: dict

    def __post_init__(self):
        if self.network.input_dim != self.pipeline.n_features:
            raise ShapeMismatch(
                f"network input dim {self.network.input_dim} != "
                f"{self.pipeline.n_features} pipeline features"
            )
        self.threshold = float(self.threshold)
        if not math.isfinite(self.threshold) or self.threshold < 0:
            raise BadSpec("threshold must be finite and non-negative")

    @property
    def model_id(self) -> str:
        return str(self.metadata.get("model_id", "model"))


def train_baseline(
    frame: ScadaFrame,
    labels: LabelSeries,
    schema: list[ColumnSchema],
    config: TrainConfig,
    *,
    source_id: str | None = None,
    model_id: str | None = None,
) -> DetectorModel:
    """Train a detector on one turbine's training window.

    The pipeline and autoencoder are fitted on the rows labelled normal;
    the threshold is then fitted on the scores of the *full* window
    against the given labels.
    """
    if len(labels) != len(frame):
        raise LengthMismatch("labels not aligned to frame")
    normal = select_normal(frame, labels)
    pipeline = fit_pipeline(normal, schema)
    features = apply_pipeline(pipeline, normal).values

    network = build_network(pipeline.n_features, list(config.hidden_sizes), config.seed)
    losses = train_network(
        network,
        features,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        rng=np.random.default_rng([config.seed, 1]),
    )

    scores = _score_matrix(network, transform_matrix(pipeline, frame.values, list(frame.column_names)))
    threshold = max(fit_threshold(scores, labels), 0.0)

    sources = [source_id] if source_id else []
    metadata = {
        "model_id": model_id or (f"baseline-{source_id}" if source_id else "baseline"),
        "source_turbines": sources,
        "training_window": _window(frame),
        "config": config.as_dict(),
        "loss_curve": losses,
        "transfer": None,
    }
    return DetectorModel(pipeline, network, threshold, metadata)


def train_multi_asset(
    datasets: list[tuple[ScadaFrame, LabelSeries]],
    schema: list[ColumnSchema],
    config: TrainConfig,
    *,
    source_ids: list[str] | None = None,
    model_id: str | None = None,
) -> DetectorModel:
    """Train one detector on the pooled normal data of several turbines."""
    if len(datasets) < 2:
        raise BadSpec("multi-asset training needs at least two turbines")
    first = datasets[0][0]
    for frame, labels in datasets:
        if frame.column_names != first.column_names or frame.roles != first.roles:
            raise SchemaMismatch("turbine frames have different column schemas")
        if len(labels) != len(frame):
            raise LengthMismatch("labels not aligned to frame")

    normal_parts = [select_normal(frame, labels).values for frame, labels in datasets]
    pooled = np.vstack(normal_parts)
    roles = {c.name: c.role for c in schema}
    pipeline = fit_pipeline_matrix(pooled, first.column_names, roles)
    features = transform_matrix(pipeline, pooled, list(first.column_names))

    network = build_network(pipeline.n_features, list(config.hidden_sizes), config.seed)
    losses = train_network(
        network,
        features,
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        rng=np.random.default_rng([config.seed, 1]),
    )

    scores = np.concatenate(
        [
            _score_matrix(network, transform_matrix(pipeline, frame.values, list(frame.column_names)))
            for frame, _ in datasets
        ]
    )
    pooled_labels = LabelSeries(np.concatenate([labels.anomalous for _, labels in datasets]))
    threshold = max(fit_threshold(scores, pooled_labels), 0.0)

    starts = [frame.timestamps[0] for frame, _ in datasets]
    ends = [frame.timestamps[-1] + GRID_STEP for frame, _ in datasets]
    sources = list(source_ids) if source_ids else []
    metadata = {
        "model_id": model_id or ("multi-" + "+".join(sources) if sources else "multi"),
        "source_turbines": sources,
        "training_window": {
            "start": format_timestamp(min(starts)),
            "end": format_timestamp(max(ends)),
        },
        "config": config.as_dict(),
        "loss_curve": losses,
        "transfer": None,
    }
    return DetectorModel(pipeline, network, threshold, metadata)


def anomaly_scores(model: DetectorModel, frame: ScadaFrame) -> np.ndarray:
    """Per-timestamp anomaly score: RMSE of the reconstruction residual."""
    return score_frame(model.pipeline, model.network, frame)


def score_frame(pipeline: FeaturePipeline, network: Network, frame: ScadaFrame) -> np.ndarray:
    features = transform_matrix(pipeline, frame.values, list(frame.column_names))
    return _score_matrix(network, features)


def _score_matrix(network: Network, features: np.ndarray) -> np.ndarray:
    residual = forward(network, features) - features
    return np.sqrt(np.mean(residual * residual, axis=1))


def detect(model: DetectorModel, frame: ScadaFrame) -> np.ndarray:
    """Boolean detections: score strictly above the threshold."""
    return anomaly_scores(model, frame) > model.threshold


def fit_threshold(scores, labels) -> float:
    """Threshold maximising the F1/2 score of (score > threshold).

    Candidates are the midpoints of consecutive distinct scores plus one
    value just below the minimum and one just above the maximum; ties
    break toward the largest threshold.  With no positive labels at all,
    returns max + 3 standard deviations.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise EmptyInput("no scores to fit a threshold on")
    y = np.asarray(labels.anomalous if hasattr(labels, "anomalous") else labels, dtype=bool)
    if y.shape != s.shape:
        raise LengthMismatch("scores and labels differ in length")

    delta = 1e-9 * max(1.0, abs(float(s.max())))
    total_pos = int(y.sum())
    if total_pos == 0:
        sigma = float(np.std(s))
        return float(s.max() + 3.0 * (sigma if sigma > 0.0 else delta))

    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    uniq, first_index = np.unique(s_sorted, return_index=True)
    group_end = np.concatenate([first_index[1:], [s.size]])
    cum_pos = np.concatenate([[0], np.cumsum(y_sorted)])
    pos_per_group = cum_pos[group_end] - cum_pos[first_index]
    size_per_group = group_end - first_index

    # suffix[j] = rows in groups j..k-1, i.e. predicted positive for candidate j
    pos_suffix = np.concatenate([np.cumsum(pos_per_group[::-1])[::-1], [0]])
    cnt_suffix = np.concatenate([np.cumsum(size_per_group[::-1])[::-1], [0]])

    candidates = np.concatenate(
        [[uniq[0] - delta], (uniq[:-1] + uniq[1:]) / 2.0, [uniq[-1] + delta]]
    )
    tp = pos_suffix.astype(np.float64)
    fp = (cnt_suffix - pos_suffix).astype(np.float64)
    fn = float(total_pos) - tp
    f_scores = f_beta_arrays(tp, fp, fn, F_BETA)
    best = np.nonzero(f_scores == f_scores.max())[0][-1]
    return float(candidates[best])


# ---------------------------------------------------------------------------
# Model artifact (JSON)


def save_model(model: DetectorModel, path) -> None:
    payload = {
        "format_version": ARTIFACT_VERSION,
        "metadata": model.metadata,
        "pipeline": {
            "kept_columns": list(model.pipeline.kept_columns),
            "angle_columns": list(model.pipeline.angle_columns),
            "feature_names": list(model.pipeline.feature_names),
            "min_vals": model.pipeline.min_vals.tolist(),
            "max_vals": model.pipeline.max_vals.tolist(),
        },
        "network": {
            "hidden_sizes": list(model.network.hidden_sizes),
            "encoder_len": model.network.encoder_len,
            "layers": [
                _layer_payload(layer) for layer in model.network.layers
            ],
        },
        "threshold": model.threshold,
    }
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def _layer_payload(layer: DenseLayer) -> dict:
    payload = {"weights": layer.weights.tolist(), "biases": layer.biases.tolist()}
    if layer.prelu_slope is not None:
        payload["prelu_slope"] = float(layer.prelu_slope)
    return payload


def load_model(path) -> DetectorModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadArtifact(f"{path}: not valid JSON") from exc

    try:
        version = payload["format_version"]
        if version != ARTIFACT_VERSION:
            raise BadArtifact(f"{path}: unsupported format_version {version!r}")
        pipe = payload["pipeline"]
        pipeline = FeaturePipeline(
            kept_columns=tuple(pipe["kept_columns"]),
            angle_columns=tuple(pipe["angle_columns"]),
            feature_names=tuple(pipe["feature_names"]),
            min_vals=np.asarray(pipe["min_vals"], dtype=np.float64),
            max_vals=np.asarray(pipe["max_vals"], dtype=np.float64),
        )
        net_payload = payload["network"]
        layers = []
        for entry in net_payload["layers"]:
            slope = entry.get("prelu_slope")
            layers.append(
                DenseLayer(
                    weights=np.asarray(entry["weights"], dtype=np.float64),
                    biases=np.asarray(entry["biases"], dtype=np.float64),
                    prelu_slope=None if slope is None else np.float64(slope),
                )
            )
        network = Network(layers, int(net_payload["encoder_len"]))
        if list(network.hidden_sizes) != list(net_payload["hidden_sizes"]):
            raise BadArtifact(f"{path}: hidden_sizes disagree with stored layers")
        model = DetectorModel(
            pipeline=pipeline,
            network=network,
            threshold=float(payload["threshold"]),
            metadata=dict(payload["metadata"]),
        )
    except BadArtifact:
        raise
    except Exception as exc:
        raise BadArtifact(f"{path}: malformed artifact ({exc})") from exc
    return model


def _window(frame: ScadaFrame) -> dict:
    return {
        "start": format_timestamp(frame.timestamps[0]),
        "end": format_timestamp(frame.timestamps[-1] + GRID_STEP),
    }
