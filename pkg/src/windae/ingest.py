"""SCADA CSV ingestion, normal/anomalous labelling and time slicing.

The on-disk format is a plain CSV with a header row: an ISO-8601 UTC
timestamp column, an operational-mode string column, and one decimal
column per sensor.  Empty cells are missing values and are replaced by
0.0 at load time.  Column roles come from a schema file (JSON array of
``{name, role, unit}`` objects).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    BadSpec,
    BadTimestamp,
    EmptyFile,
    EmptyResult,
    IoFailure,
    LengthMismatch,
    MissingColumn,
    SchemaMismatch,
)
from .timebase import TIMESTAMP_FORMAT, format_timestamp, on_grid

NORMAL_OPMODE = "normal operation"

ROLES = (
    "timestamp",
    "opmode",
    "power",
    "windspeed",
    "measurement",
    "counter",
    "setpoint",
    "angle",
)

#: roles that appear in the numeric value matrix of a frame
SENSOR_ROLES = ("power", "windspeed", "measurement", "counter", "setpoint", "angle")

_UNIQUE_ROLES = ("timestamp", "opmode", "power", "windspeed")


@dataclass(frozen=True)
class ColumnSchema:
    """Declared name, role and unit of one CSV column.

    The optional ``aliases`` map (meaningful on the opmode column only)
    rewrites raw mode tokens to canonical ones at load time.
    """

    name: str
    role: str
    unit: str = ""
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaMismatch(f"unknown role {self.role!r} for column {self.name!r}")


def validate_schema(schema: list[ColumnSchema]) -> None:
    """Check schema-level invariants: unique names, one column per special role."""
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise SchemaMismatch("duplicate column names in schema")
    for role in _UNIQUE_ROLES:
        count = sum(1 for c in schema if c.role == role)
        if count != 1:
            raise SchemaMismatch(f"schema needs exactly one {role} column, found {count}")


def schema_column(schema: list[ColumnSchema], role: str) -> ColumnSchema:
    for col in schema:
        if col.role == role:
            return col
    raise SchemaMismatch(f"schema has no column with role {role!r}")


@dataclass(frozen=True)
class TurbineConfig:
    """Static parameters of one turbine used for labelling."""

    turbine_id: str
    farm_id: str
    cut_in: float
    cut_out: float
    rated_power: float
    high_power_fraction: float = 0.5

    def __post_init__(self):
        if not 0 < self.cut_in < self.cut_out:
            raise BadSpec("need 0 < cut_in < cut_out")
        if self.rated_power <= 0:
            raise BadSpec("rated_power must be positive")
        if not 0 < self.high_power_fraction <= 1:
            raise BadSpec("high_power_fraction must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class ScadaFrame:
    """Ten-minute SCADA table: timestamps, OP-modes and a sensor matrix.

    Immutable after construction.  ``values`` is float64 with one column
    per sensor, ordered like ``column_names``/``roles``.
    """

    timestamps: np.ndarray
    op_modes: np.ndarray
    values: np.ndarray
    column_names: tuple[str, ...]
    roles: tuple[str, ...]
    timestamp_column: str = "timestamp"
    opmode_column: str = "op_mode"

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype="datetime64[s]")
        ops = np.asarray(self.op_modes)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise LengthMismatch("values must be a 2-D matrix")
        n = ts.shape[0]
        if ops.shape[0] != n or vals.shape[0] != n:
            raise LengthMismatch("timestamps, op_modes and values row counts differ")
        if vals.shape[1] != len(self.column_names) or len(self.roles) != len(self.column_names):
            raise LengthMismatch("column_names/roles do not match the value matrix")
        if n and not np.all(on_grid(ts)):
            raise BadTimestamp("timestamps off the 10-minute grid")
        if n > 1 and not np.all(np.diff(ts.astype(np.int64)) > 0):
            raise BadTimestamp("timestamps not strictly increasing")
        for arr in (ts, ops, vals):
            arr.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "op_modes", ops)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "roles", tuple(self.roles))

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise MissingColumn(f"frame has no column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def role_column(self, role: str) -> np.ndarray:
        """The single column carrying one of the special roles."""
        for i, r in enumerate(self.roles):
            if r == role:
                return self.values[:, i]
        raise MissingColumn(f"frame has no column with role {role!r}")

    def take(self, mask_or_index) -> "ScadaFrame":
        return ScadaFrame(
            timestamps=self.timestamps[mask_or_index],
            op_modes=self.op_modes[mask_or_index],
            values=self.values[mask_or_index],
            column_names=self.column_names,
            roles=self.roles,
            timestamp_column=self.timestamp_column,
            opmode_column=self.opmode_column,
        )

    def with_values(self, values: np.ndarray, op_modes: np.ndarray | None = None) -> "ScadaFrame":
        return ScadaFrame(
            timestamps=self.timestamps,
            op_modes=self.op_modes if op_modes is None else op_modes,
            values=values,
            column_names=self.column_names,
            roles=self.roles,
            timestamp_column=self.timestamp_column,
            opmode_column=self.opmode_column,
        )

    def equals(self, other: "ScadaFrame") -> bool:
        return (
            self.column_names == other.column_names
            and self.roles == other.roles
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.op_modes, other.op_modes)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class LabelSeries:
    """Per-timestamp binary labels; True marks the anomalous class."""

    anomalous: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.anomalous, dtype=bool)
        arr.flags.writeable = False
        object.__setattr__(self, "anomalous", arr)

    def __len__(self) -> int:
        return self.anomalous.shape[0]

    @property
    def normal(self) -> np.ndarray:
        return ~self.anomalous


def load_csv(path, schema: list[ColumnSchema]) -> ScadaFrame:
    """Load a SCADA CSV against a schema.

    Rows are sorted by timestamp; empty or NaN sensor cells become 0.0.
    Unparseable, duplicated or off-grid timestamps raise
    :class:`BadTimestamp` rather than being silently repaired.
    """
    validate_schema(schema)
    try:
        raw = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise EmptyFile(f"{path}: no data") from exc
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    if raw.shape[0] == 0:
        raise EmptyFile(f"{path}: header only, no rows")
    for col in schema:
        if col.name not in raw.columns:
            raise MissingColumn(f"{path}: column {col.name!r} missing from header")

    ts_col = schema_column(schema, "timestamp")
    op_col = schema_column(schema, "opmode")

    parsed = pd.to_datetime(raw[ts_col.name], format=TIMESTAMP_FORMAT, errors="coerce")
    if parsed.isna().any():
        bad = raw[ts_col.name][parsed.isna()].iloc[0]
        raise BadTimestamp(f"{path}: unparseable timestamp {bad!r}")
    timestamps = parsed.to_numpy().astype("datetime64[s]")
    if not np.all(on_grid(timestamps)):
        raise BadTimestamp(f"{path}: timestamps off the 10-minute grid")

    order = np.argsort(timestamps, kind="stable")
    timestamps = timestamps[order]
    if len(timestamps) > 1 and not np.all(np.diff(timestamps.astype(np.int64)) > 0):
        raise BadTimestamp(f"{path}: duplicate timestamps")

    op_raw = raw[op_col.name].to_numpy(dtype=object)[order]
    op_modes = np.asarray(
        ["" if pd.isna(v) else op_col.aliases.get(str(v), str(v)) for v in op_raw]
    )

    sensors = [c for c in schema if c.role in SENSOR_ROLES]
    matrix = np.empty((len(timestamps), len(sensors)), dtype=np.float64)
    for j, col in enumerate(sensors):
        cells = raw[col.name]
        if pd.api.types.is_numeric_dtype(cells):
            column = cells.to_numpy(dtype=np.float64)[order]
            matrix[:, j] = np.where(np.isnan(column), 0.0, column)
        else:
            matrix[:, j] = _to_float_column(
                cells.to_numpy(dtype=object)[order], col.name, path
            )

    return ScadaFrame(
        timestamps=timestamps,
        op_modes=op_modes,
        values=matrix,
        column_names=tuple(c.name for c in sensors),
        roles=tuple(c.role for c in sensors),
        timestamp_column=ts_col.name,
        opmode_column=op_col.name,
    )


def _to_float_column(cells: np.ndarray, name: str, path) -> np.ndarray:
    out = np.empty(len(cells), dtype=np.float64)
    for i, cell in enumerate(cells):
        if cell is None or (isinstance(cell, float) and np.isnan(cell)):
            out[i] = 0.0
            continue
        text = str(cell).strip()
        if text == "" or text.lower() == "nan":
            out[i] = 0.0
            continue
        try:
            out[i] = float(text)
        except ValueError:
            raise ValueError(f"{path}: non-numeric value {cell!r} in column {name!r}") from None
    return out


def write_csv(frame: ScadaFrame, path) -> None:
    """Write a frame back to the CSV format accepted by :func:`load_csv`."""
    table = {frame.timestamp_column: [format_timestamp(t) for t in frame.timestamps]}
    table[frame.opmode_column] = list(frame.op_modes)
    for j, name in enumerate(frame.column_names):
        table[name] = frame.values[:, j]
    try:
        pd.DataFrame(table).to_csv(path, index=False)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def derive_labels(frame: ScadaFrame, config: TurbineConfig) -> LabelSeries:
    """Label each row normal or anomalous from OP-mode, power and wind speed.

    A row is normal iff the OP-mode is 'normal operation', power is
    strictly positive, and power is not high while the wind speed sits
    outside the turbine's operating band.
    """
    power = frame.role_column("power")
    wind = frame.role_column("windspeed")
    is_normal_op = frame.op_modes == NORMAL_OPMODE
    high_power = power >= config.high_power_fraction * config.rated_power
    wind_out_of_band = (wind < config.cut_in) | (wind > config.cut_out)
    normal = is_normal_op & (power > 0) & ~(high_power & wind_out_of_band)
    return LabelSeries(anomalous=~normal)


def select_normal(frame: ScadaFrame, labels: LabelSeries) -> ScadaFrame:
    """Keep exactly the rows labelled normal, in order."""
    if len(labels) != len(frame):
        raise LengthMismatch("labels not aligned to frame")
    mask = labels.normal
    if not mask.any():
        raise EmptyResult("no rows labelled normal")
    return frame.take(mask)


def slice_period(frame: ScadaFrame, start: np.datetime64, end: np.datetime64) -> ScadaFrame:
    """Rows with start <= t < end; may be empty."""
    start = np.datetime64(start, "s")
    end = np.datetime64(end, "s")
    if not start < end:
        raise ValueError("slice_period needs start < end")
    mask = (frame.timestamps >= start) & (frame.timestamps < end)
    return frame.take(mask)


# ---------------------------------------------------------------------------
# JSON sidecar files: schema and turbine config


def load_schema(path) -> list[ColumnSchema]:
    entries = _read_json(path)
    if not isinstance(entries, list):
        raise SchemaMismatch(f"{path}: schema file must hold a JSON array")
    schema = []
    for entry in entries:
        try:
            schema.append(
                ColumnSchema(
                    name=entry["name"],
                    role=entry["role"],
                    unit=entry.get("unit", ""),
                    aliases=dict(entry.get("aliases", {})),
                )
            )
        except (KeyError, TypeError) as exc:
            raise SchemaMismatch(f"{path}: malformed schema entry {entry!r}") from exc
    validate_schema(schema)
    return schema


def save_schema(schema: list[ColumnSchema], path) -> None:
    entries = []
    for col in schema:
        entry = {"name": col.name, "role": col.role, "unit": col.unit}
        if col.aliases:
            entry["aliases"] = col.aliases
        entries.append(entry)
    _write_json(entries, path)


def load_turbine_config(path) -> TurbineConfig:
    data = _read_json(path)
    try:
        return TurbineConfig(
            turbine_id=data["turbine_id"],
            farm_id=data["farm_id"],
            cut_in=float(data["cut_in"]),
            cut_out=float(data["cut_out"]),
            rated_power=float(data["rated_power"]),
            high_power_fraction=float(data.get("high_power_fraction", 0.5)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"{path}: malformed turbine config") from exc


def save_turbine_config(config: TurbineConfig, path) -> None:
    _write_json(
        {
            "turbine_id": config.turbine_id,
            "farm_id": config.farm_id,
            "cut_in": config.cut_in,
            "cut_out": config.cut_out,
            "rated_power": config.rated_power,
            "high_power_fraction": config.high_power_fraction,
        },
        path,
    )


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def _write_json(payload, path) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
