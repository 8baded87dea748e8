import numpy as np
import pytest

from windae import detector, ingest, synth
from windae.timebase import GRID_STEP, parse_timestamp


def ts(text: str) -> np.datetime64:
    return parse_timestamp(text)


def grid(start: str, n: int) -> np.ndarray:
    return parse_timestamp(start) + GRID_STEP * np.arange(n)


def make_frame(
    start="2022-01-01T00:00:00Z",
    op_modes=None,
    n=None,
    timestamp_column="timestamp",
    opmode_column="op_mode",
    **columns,
):
    """Build a small frame from keyword columns given as (role, values)."""
    names, roles, arrays = [], [], []
    for name, (role, values) in columns.items():
        names.append(name)
        roles.append(role)
        arrays.append(np.asarray(values, dtype=np.float64))
    n_rows = n if n is not None else len(arrays[0])
    if op_modes is None:
        op_modes = [ingest.NORMAL_OPMODE] * n_rows
    return ingest.ScadaFrame(
        timestamps=grid(start, n_rows),
        op_modes=np.asarray(op_modes, dtype=object),
        values=np.column_stack(arrays) if arrays else np.empty((n_rows, 0)),
        column_names=tuple(names),
        roles=tuple(roles),
        timestamp_column=timestamp_column,
        opmode_column=opmode_column,
    )


def basic_schema():
    return [
        ingest.ColumnSchema("timestamp", "timestamp", "ISO-8601"),
        ingest.ColumnSchema("op_mode", "opmode", ""),
        ingest.ColumnSchema("power", "power", "kW"),
        ingest.ColumnSchema("wind_speed", "windspeed", "m/s"),
        ingest.ColumnSchema("wind_dir", "angle", "deg"),
        ingest.ColumnSchema("temp_a", "measurement", "C"),
        ingest.ColumnSchema("temp_b", "measurement", "C"),
        ingest.ColumnSchema("counter_1", "counter", "kWh"),
        ingest.ColumnSchema("setpoint_1", "setpoint", "kW"),
    ]


def basic_config(**overrides):
    defaults = dict(
        turbine_id="T01",
        farm_id="TEST",
        cut_in=3.0,
        cut_out=25.0,
        rated_power=2000.0,
        high_power_fraction=0.5,
    )
    defaults.update(overrides)
    return ingest.TurbineConfig(**defaults)


@pytest.fixture(scope="session")
def small_farm():
    """Two-turbine, four-month farm shared by detector/transfer tests."""
    spec = synth.FarmSpec(n_turbines=2, months=4, n_extra_sensors=5, seed=11)
    frames, schema, configs = synth.generate_farm(spec)
    return {"frames": frames, "schema": schema, "configs": configs, "spec": spec}


@pytest.fixture(scope="session")
def small_source(small_farm):
    """Source model trained on T01's first three months."""
    frames, schema, configs = small_farm["frames"], small_farm["schema"], small_farm["configs"]
    train = ingest.slice_period(frames[0], ts("2022-01-01T00:00:00Z"), ts("2022-04-01T00:00:00Z"))
    labels = ingest.derive_labels(train, configs[0])
    config = detector.TrainConfig(hidden_sizes=(8, 4, 8), epochs=8, batch_size=256, seed=3)
    model = detector.train_baseline(
        train, labels, schema, config, source_id=configs[0].turbine_id
    )
    return {"model": model, "train_frame": train, "train_labels": labels, "config": config}


@pytest.fixture(scope="session")
def target_tuning(small_farm):
    """One month of target-turbine tuning data plus its labels."""
    frames, configs = small_farm["frames"], small_farm["configs"]
    tune = ingest.slice_period(frames[1], ts("2022-03-01T00:00:00Z"), ts("2022-04-01T00:00:00Z"))
    labels = ingest.derive_labels(tune, configs[1])
    return {"frame": tune, "labels": labels, "config": configs[1]}
