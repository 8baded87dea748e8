"""Autoencoder normal-behaviour anomaly detection for wind-turbine SCADA
data, with cross-turbine transfer learning and a synthetic farm generator."""

from . import detector, evaluate, figures, ingest, metrics, neural, preprocess, synth, transfer
from .detector import DetectorModel, TrainConfig, load_model, save_model
from .errors import WindaeError
from .ingest import ColumnSchema, LabelSeries, ScadaFrame, TurbineConfig
from .synth import FarmSpec, FaultSpec
from .transfer import TransferConfig

__version__ = "0.1.0"

__all__ = [
    "ColumnSchema",
    "DetectorModel",
    "FarmSpec",
    "FaultSpec",
    "LabelSeries",
    "ScadaFrame",
    "TrainConfig",
    "TransferConfig",
    "TurbineConfig",
    "WindaeError",
    "detector",
    "evaluate",
    "figures",
    "ingest",
    "metrics",
    "neural",
    "preprocess",
    "synth",
    "transfer",
    "load_model",
    "save_model",
]
