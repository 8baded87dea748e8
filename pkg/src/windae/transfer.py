"""Cross-turbine transfer of a trained detector.

Three methods, in increasing order of how much of the source model is
retrained on the target turbine's tuning data:

* threshold  - reuse the autoencoder as is, refit only the threshold
* decoder    - fine-tune the decoder with the encoder frozen (lr 0.001)
* ae         - fine-tune the whole autoencoder at lr 0.0001

All methods keep the source preprocessing pipeline unchanged, fine-tune
on the normal-labelled tuning rows only, start from a fresh optimizer
state, and always refit the threshold on the full tuning window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import DetectorModel, anomaly_scores, fit_threshold, score_frame
from .errors import BadSpec, LengthMismatch
from .ingest import LabelSeries, ScadaFrame, select_normal
from .neural import forward, mse_loss, set_frozen, train_network
from .preprocess import apply_pipeline
from .timebase import GRID_STEP, format_timestamp

METHODS = ("threshold", "decoder", "ae")

DECODER_LEARNING_RATE = 0.001
FULL_AE_LEARNING_RATE = 0.0001
DEFAULT_TUNE_EPOCHS = 10


@dataclass(frozen=True)
class TransferConfig:
    """How to fine-tune; learning_rate None picks the method default."""

    method: str
    epochs: int = DEFAULT_TUNE_EPOCHS
    learning_rate: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise BadSpec(f"method must be one of {METHODS}")
        if self.epochs < 0:
            raise BadSpec("epochs must be >= 0")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise BadSpec("learning_rate must be positive")

    @property
    def resolved_learning_rate(self) -> float | None:
        if self.method == "threshold":
            return None
        if self.learning_rate is not None:
            return self.learning_rate
        return DECODER_LEARNING_RATE if self.method == "decoder" else FULL_AE_LEARNING_RATE


def transfer_threshold(
    source: DetectorModel,
    tuning_frame: ScadaFrame,
    labels: LabelSeries,
    *,
    model_id: str | None = None,
) -> DetectorModel:
    """Reuse the source autoencoder untouched; refit only the threshold."""
    _check_aligned(tuning_frame, labels)
    network = source.network.copy()
    threshold = max(fit_threshold(anomaly_scores(source, tuning_frame), labels), 0.0)
    metadata = _lineage(
        source,
        model_id=model_id,
        method="threshold",
        epochs=0,
        learning_rate=None,
        seed=None,
        tuning_frame=tuning_frame,
    )
    return DetectorModel(source.pipeline, network, threshold, metadata)


def transfer_decoder(
    source: DetectorModel,
    tuning_frame: ScadaFrame,
    labels: LabelSeries,
    config: TransferConfig,
    *,
    model_id: str | None = None,
) -> DetectorModel:
    """Fine-tune the decoder with the encoder frozen, then refit the threshold."""
    if config.method != "decoder":
        raise BadSpec(f"config.method is {config.method!r}, expected 'decoder'")
    return _tuned_transfer(source, tuning_frame, labels, config, "encoder", model_id)


def transfer_full_ae(
    source: DetectorModel,
    tuning_frame: ScadaFrame,
    labels: LabelSeries,
    config: TransferConfig,
    *,
    model_id: str | None = None,
) -> DetectorModel:
    """Fine-tune every layer at the reduced rate, then refit the threshold."""
    if config.method != "ae":
        raise BadSpec(f"config.method is {config.method!r}, expected 'ae'")
    return _tuned_transfer(source, tuning_frame, labels, config, "none", model_id)


def _tuned_transfer(source, tuning_frame, labels, config, freeze_group, model_id):
    _check_aligned(tuning_frame, labels)
    normal = select_normal(tuning_frame, labels)
    features = apply_pipeline(source.pipeline, normal).values

    network = source.network.copy()
    set_frozen(network, freeze_group)
    learning_rate = config.resolved_learning_rate
    mse_before = mse_loss(forward(network, features), features)
    if config.epochs > 0:
        loss_curve = train_network(
            network,
            features,
            learning_rate=learning_rate,
            epochs=config.epochs,
            batch_size=256,
            rng=np.random.default_rng([config.seed, 2]),
        )
    else:
        loss_curve = []
    mse_after = mse_loss(forward(network, features), features)
    set_frozen(network, "none")

    threshold = max(fit_threshold(score_frame(source.pipeline, network, tuning_frame), labels), 0.0)
    metadata = _lineage(
        source,
        model_id=model_id,
        method=config.method,
        epochs=config.epochs,
        learning_rate=learning_rate,
        seed=config.seed,
        tuning_frame=tuning_frame,
        loss_curve=loss_curve,
        mse_before=mse_before,
        mse_after=mse_after,
    )
    return DetectorModel(source.pipeline, network, threshold, metadata)


def _check_aligned(frame: ScadaFrame, labels: LabelSeries) -> None:
    if len(labels) != len(frame):
        raise LengthMismatch("labels not aligned to tuning frame")


def _lineage(
    source: DetectorModel,
    *,
    model_id,
    method,
    epochs,
    learning_rate,
    seed,
    tuning_frame,
    loss_curve=None,
    mse_before=None,
    mse_after=None,
) -> dict:
    if len(tuning_frame):
        tuning_window = {
            "start": format_timestamp(tuning_frame.timestamps[0]),
            "end": format_timestamp(tuning_frame.timestamps[-1] + GRID_STEP),
        }
    else:
        tuning_window = None
    transfer_info = {
        "method": method,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "seed": seed,
        "tuning_window": tuning_window,
        "source_model_id": source.metadata.get("model_id"),
    }
    if loss_curve is not None:
        transfer_info["loss_curve"] = loss_curve
        transfer_info["tuning_mse_before"] = mse_before
        transfer_info["tuning_mse_after"] = mse_after
    return {
        "model_id": model_id or f"{source.metadata.get('model_id', 'model')}-{method}",
        "source_turbines": list(source.metadata.get("source_turbines", [])),
        "training_window": source.metadata.get("training_window"),
        "config": source.metadata.get("config"),
        "transfer": transfer_info,
    }
