"""Deterministic synthetic wind-farm SCADA generator with fault injection.

One shared wind field (an AR(1) Gaussian driver mapped to a Weibull
marginal, with seasonal and diurnal terms) drives every turbine in the
farm; each turbine adds small seeded parameter offsets so that transfer
between turbines is realistic but not trivial.  Power follows a smooth
cubic curve between cut-in and rated wind speed, temperatures lag the
produced power through exponential smoothing, and the OP-mode schedule
mixes normal operation with idle periods (wind outside the operating
band) and rare seeded service/downtime blocks.

Counter, set-point and mostly-zero columns are generated on purpose so
the feature-pruning rules have something to do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .errors import BadSpec, BadWindow
from .ingest import NORMAL_OPMODE, ColumnSchema, ScadaFrame, TurbineConfig
from .timebase import GRID_STEP, add_months, on_grid, parse_timestamp

FARM_ID = "SYN"

RATED_WIND_SPEED = 11.5  # m/s, where the power curve flattens
WEIBULL_SHAPE = 2.2
WEIBULL_SCALE = 10.5  # m/s, annual mean scale of the wind field

FAULT_KINDS = ("drift", "change_point", "derate")

_EXTRA_KINDS = ("temp", "load", "vib", "pressure")


@dataclass(frozen=True)
class FarmSpec:
    """Parameters of one synthetic farm; fully reproducible from seed."""

    n_turbines: int
    months: int
    start: str = "2022-01-01T00:00:00Z"
    n_extra_sensors: int = 19
    seed: int = 0
    turbine_variation: float = 1.0
    cut_in: float = 3.0
    cut_out: float = 25.0
    rated_power: float = 2000.0

    def __post_init__(self):
        if self.n_turbines < 1:
            raise BadSpec("n_turbines must be at least 1")
        if self.months < 1:
            raise BadSpec("months must be at least 1")
        if self.n_extra_sensors < 0:
            raise BadSpec("n_extra_sensors must be >= 0")
        if self.turbine_variation < 0:
            raise BadSpec("turbine_variation must be >= 0")
        if not 0 < self.cut_in < self.cut_out:
            raise BadSpec("need 0 < cut_in < cut_out")
        if self.rated_power <= 0:
            raise BadSpec("rated_power must be positive")
        start = parse_timestamp(self.start) if isinstance(self.start, str) else self.start
        if not on_grid(start):
            raise BadSpec("start must sit on the 10-minute grid")

    @property
    def start_time(self) -> np.datetime64:
        return parse_timestamp(self.start) if isinstance(self.start, str) else self.start


@dataclass(frozen=True)
class FaultSpec:
    """One injectable fault.

    drift:        adds magnitude * (days since start) to the target sensor
    change_point: adds the constant magnitude to the target sensor
    derate:       multiplies power by the cap fraction and sets OP-mode
                  to 'derated'; the target sensor must be the power column
    """

    kind: str
    target_sensor: str
    start: str
    end: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise BadSpec(f"kind must be one of {FAULT_KINDS}")
        if self.magnitude == 0:
            raise BadSpec("magnitude must be non-zero")
        if not self.start_time < self.end_time:
            raise BadSpec("fault needs start < end")

    @property
    def start_time(self) -> np.datetime64:
        return parse_timestamp(self.start) if isinstance(self.start, str) else np.datetime64(self.start, "s")

    @property
    def end_time(self) -> np.datetime64:
        return parse_timestamp(self.end) if isinstance(self.end, str) else np.datetime64(self.end, "s")


def farm_schema(n_extra_sensors: int) -> list[ColumnSchema]:
    """Column schema shared by every turbine of a generated farm."""
    schema = [
        ColumnSchema("timestamp", "timestamp", "ISO-8601"),
        ColumnSchema("op_mode", "opmode", ""),
        ColumnSchema("power", "power", "kW"),
        ColumnSchema("wind_speed", "windspeed", "m/s"),
        ColumnSchema("wind_direction", "angle", "deg"),
        ColumnSchema("ambient_temp", "measurement", "C"),
        ColumnSchema("nacelle_temp", "measurement", "C"),
        ColumnSchema("gearbox_temp", "measurement", "C"),
        ColumnSchema("generator_temp", "measurement", "C"),
        ColumnSchema("rotor_speed", "measurement", "rpm"),
        ColumnSchema("blade_heater_power", "measurement", "kW"),
        ColumnSchema("energy_total", "counter", "kWh"),
        ColumnSchema("power_setpoint", "setpoint", "kW"),
    ]
    units = {"temp": "C", "load": "A", "vib": "mm/s", "pressure": "bar"}
    for j in range(n_extra_sensors):
        kind = _EXTRA_KINDS[j % len(_EXTRA_KINDS)]
        schema.append(ColumnSchema(f"sensor_{j:02d}", "measurement", units[kind]))
    return schema


def generate_farm(spec: FarmSpec):
    """Generate per-turbine frames plus the shared schema and configs.

    Returns ``(frames, schema, configs)`` with one ScadaFrame and one
    TurbineConfig per turbine, index-aligned.
    """
    start = spec.start_time
    end = add_months(start, spec.months)
    n = int((end - start) // GRID_STEP)
    timestamps = start + GRID_STEP * np.arange(n)
    seconds = timestamps.astype(np.int64)
    days = seconds / 86400.0
    hours = (seconds % 86400) / 3600.0

    farm_rng = np.random.default_rng([spec.seed, 0])

    # Shared wind field: AR(1) driver -> Weibull marginal, seasonal scale,
    # small diurnal swing.
    driver = _ar1(farm_rng.standard_normal(n), 0.985)
    uniform = np.clip(_gaussian_cdf(driver), 1e-9, 1.0 - 1e-9)
    seasonal_scale = WEIBULL_SCALE * (1.0 + 0.18 * np.cos(2 * np.pi * (days - 15.0) / 365.25))
    diurnal = 0.3 * np.sin(2 * np.pi * (hours - 14.0) / 24.0)
    farm_wind = seasonal_scale * (-np.log1p(-uniform)) ** (1.0 / WEIBULL_SHAPE) + diurnal

    ambient_base = (
        10.0
        - 8.0 * np.cos(2 * np.pi * (days - 31.0) / 365.25)
        + 2.5 * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
        + 1.5 * _ar1(farm_rng.standard_normal(n), 0.97)
    )
    direction_base = np.mod(180.0 + np.cumsum(farm_rng.normal(0.0, 1.5, n)), 360.0)

    templates = _extra_templates(spec.n_extra_sensors, farm_rng)
    schema = farm_schema(spec.n_extra_sensors)
    sensor_names = tuple(c.name for c in schema if c.role not in ("timestamp", "opmode"))
    sensor_roles = tuple(c.role for c in schema if c.role not in ("timestamp", "opmode"))

    frames = []
    configs = []
    for i in range(spec.n_turbines):
        rng = np.random.default_rng([spec.seed, 1, i])
        frames.append(
            _generate_turbine(
                spec, timestamps, farm_wind, ambient_base, direction_base,
                templates, sensor_names, sensor_roles, rng,
            )
        )
        configs.append(
            TurbineConfig(
                turbine_id=f"T{i + 1:02d}",
                farm_id=FARM_ID,
                cut_in=spec.cut_in,
                cut_out=spec.cut_out,
                rated_power=spec.rated_power,
            )
        )
    return frames, schema, configs


def _generate_turbine(
    spec, timestamps, farm_wind, ambient_base, direction_base,
    templates, sensor_names, sensor_roles, rng,
):
    n = timestamps.shape[0]
    var = spec.turbine_variation

    wind_gain = 1.0 + rng.normal(0.0, 0.02) * var
    wind_offset = rng.normal(0.0, 0.15) * var
    wind = farm_wind * wind_gain + wind_offset + 0.35 * _ar1(rng.standard_normal(n), 0.9)
    wind = np.maximum(wind, 0.0)

    op_modes = np.full(n, NORMAL_OPMODE, dtype=object)
    in_band = (wind >= spec.cut_in) & (wind <= spec.cut_out)
    op_modes[~in_band] = "idle"

    blocks = []
    for kind, per_year, dur_lo, dur_hi in (("service", 12, 12, 72), ("downtime", 8, 6, 48)):
        count = rng.poisson(per_year * spec.months / 12.0)
        starts = np.sort(rng.integers(0, n, size=count))
        durations = rng.integers(dur_lo, dur_hi + 1, size=count)
        for s, d in zip(starts, durations):
            op_modes[s : s + int(d)] = kind
            blocks.append((int(s), min(int(s) + int(d), n)))

    operating = op_modes == NORMAL_OPMODE

    ramp = np.clip(
        (wind**3 - spec.cut_in**3) / (RATED_WIND_SPEED**3 - spec.cut_in**3), 0.0, 1.0
    )
    efficiency = 1.0 + rng.normal(0.0, 0.02) * var
    power = spec.rated_power * ramp * efficiency * (1.0 + 0.01 * rng.standard_normal(n))
    power = np.clip(power, 0.0, spec.rated_power)
    power[~operating] = 0.0
    # One zero-power restart row right after each block: the turbine is
    # back in 'normal operation' but not producing yet.
    for _, block_end in blocks:
        if block_end < n and op_modes[block_end] == NORMAL_OPMODE:
            power[block_end] = 0.0

    heat = power / spec.rated_power
    producing = power > 0.0

    ambient = ambient_base + rng.normal(0.0, 0.3) * var + 0.2 * _ar1(rng.standard_normal(n), 0.9)
    temp_gains = 1.0 + rng.normal(0.0, 0.03, size=3) * var
    nacelle = ambient + 8.0 * temp_gains[0] * _ema(heat, 6.0) + 0.15 * rng.standard_normal(n)
    gearbox = ambient + 35.0 * temp_gains[1] * _ema(heat, 18.0) + 0.2 * rng.standard_normal(n)
    generator = ambient + 45.0 * temp_gains[2] * _ema(heat, 12.0) + 0.25 * rng.standard_normal(n)

    rotor = np.where(
        producing,
        6.0 + 8.0 * np.clip((wind - spec.cut_in) / (RATED_WIND_SPEED - spec.cut_in), 0.0, 1.0),
        0.0,
    )
    rotor = rotor + 0.1 * rng.standard_normal(n) * producing

    heater = np.where(
        ambient < -2.0, 60.0 + 5.0 * rng.standard_normal(n), 0.0
    )

    direction = np.mod(
        direction_base + rng.normal(0.0, 3.0) * var + 1.0 * _ar1(rng.standard_normal(n), 0.95),
        360.0,
    )

    energy = np.cumsum(power) / 6.0 + rng.uniform(1e5, 5e5)

    setpoint = np.full(n, spec.rated_power)
    for _ in range(rng.poisson(3 * spec.months / 12.0)):
        s = rng.integers(0, n)
        d = rng.integers(24, 144)
        setpoint[s : s + int(d)] = 0.8 * spec.rated_power

    columns = {
        "power": power,
        "wind_speed": wind,
        "wind_direction": direction,
        "ambient_temp": ambient,
        "nacelle_temp": nacelle,
        "gearbox_temp": gearbox,
        "generator_temp": generator,
        "rotor_speed": rotor,
        "blade_heater_power": heater,
        "energy_total": energy,
        "power_setpoint": setpoint,
    }
    rotor_norm = rotor / 14.0
    for j, (kind, params) in enumerate(templates):
        gain = 1.0 + rng.normal(0.0, 0.03) * var
        noise = rng.standard_normal(n)
        if kind == "temp":
            series = ambient + params["span"] * gain * _ema(heat, params["tau"]) + 0.2 * noise
        elif kind == "load":
            series = params["base"] * gain + params["amp"] * heat + params["sigma"] * noise
        elif kind == "vib":
            series = 0.3 + params["amp"] * gain * rotor_norm + 0.08 * noise
        else:  # pressure
            series = params["base"] * gain + params["amp"] * _ema(heat, params["tau"]) + 0.02 * noise
        columns[f"sensor_{j:02d}"] = series

    matrix = np.column_stack([columns[name] for name in sensor_names])
    return ScadaFrame(
        timestamps=timestamps,
        op_modes=op_modes,
        values=matrix,
        column_names=sensor_names,
        roles=sensor_roles,
    )


def _extra_templates(n_extra: int, rng: np.random.Generator):
    """Farm-level parameters of the extra sensors, shared by all turbines."""
    templates = []
    for j in range(n_extra):
        kind = _EXTRA_KINDS[j % len(_EXTRA_KINDS)]
        if kind == "temp":
            params = {"span": rng.uniform(10.0, 40.0), "tau": rng.uniform(4.0, 24.0)}
        elif kind == "load":
            params = {
                "base": rng.uniform(20.0, 80.0),
                "amp": rng.uniform(500.0, 2500.0),
                "sigma": rng.uniform(1.0, 5.0),
            }
        elif kind == "vib":
            params = {"amp": rng.uniform(1.0, 4.0)}
        else:
            params = {
                "base": rng.uniform(1.5, 3.0),
                "amp": rng.uniform(0.5, 1.5),
                "tau": rng.uniform(4.0, 24.0),
            }
        templates.append((kind, params))
    return templates


def inject_fault(frame: ScadaFrame, fault: FaultSpec):
    """Apply one fault inside its window; rows outside stay untouched.

    Returns ``(faulted_frame, flags)`` where flags mark the in-window rows.
    """
    start = fault.start_time
    end = fault.end_time
    if len(frame) == 0:
        raise BadWindow("cannot inject into an empty frame")
    span_start = frame.timestamps[0]
    span_end = frame.timestamps[-1] + GRID_STEP
    if start < span_start or end > span_end:
        raise BadWindow(
            f"fault window [{start}, {end}) outside frame span [{span_start}, {span_end})"
        )
    j = frame.column_index(fault.target_sensor)
    mask = (frame.timestamps >= start) & (frame.timestamps < end)

    values = frame.values.copy()
    op_modes = frame.op_modes
    if fault.kind == "drift":
        in_window_days = (frame.timestamps[mask] - start) / np.timedelta64(86400, "s")
        values[mask, j] += fault.magnitude * in_window_days.astype(np.float64)
    elif fault.kind == "change_point":
        values[mask, j] += fault.magnitude
    else:  # derate
        if frame.roles[j] != "power":
            raise BadSpec("derate faults target the power column")
        values[mask, j] *= fault.magnitude
        op_modes = frame.op_modes.copy()
        op_modes[mask] = "derated"
    return frame.with_values(values, op_modes), mask


def _ar1(noise: np.ndarray, phi: float) -> np.ndarray:
    """Stationary unit-variance AR(1) series driven by white noise."""
    b = np.asarray([np.sqrt(1.0 - phi * phi)])
    a = np.asarray([1.0, -phi])
    zi = signal.lfilter_zi(b, a) * noise[0] if noise.size else np.zeros(1)
    out, _ = signal.lfilter(b, a, noise, zi=zi)
    return out


def _ema(x: np.ndarray, tau_steps: float) -> np.ndarray:
    """Exponential smoothing with time constant ``tau_steps`` grid steps."""
    alpha = 1.0 - np.exp(-1.0 / tau_steps)
    b = np.asarray([alpha])
    a = np.asarray([1.0, -(1.0 - alpha)])
    zi = signal.lfilter_zi(b, a) * x[0] if x.size else np.zeros(1)
    out, _ = signal.lfilter(b, a, x, zi=zi)
    return out


def _gaussian_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + special.erf(x / np.sqrt(2.0)))
