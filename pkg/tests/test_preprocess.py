import numpy as np
import pytest

from conftest import basic_schema, make_frame
from windae import ingest, preprocess
from windae.errors import MissingColumn, NoFeaturesLeft


def fixture_frame(n=100, **overrides):
    """Frame with enough live columns that pruning fixtures stay isolated."""
    rng = np.random.default_rng(0)
    columns = dict(
        power=("power", rng.uniform(1, 2000, n)),
        wind_speed=("windspeed", rng.uniform(3, 25, n)),
        wind_dir=("angle", rng.uniform(0, 360, n)),
        temp_a=("measurement", rng.normal(20, 5, n)),
        temp_b=("measurement", rng.normal(40, 8, n)),
        counter_1=("counter", np.cumsum(rng.random(n))),
        setpoint_1=("setpoint", np.full(n, 2000.0)),
    )
    columns.update(overrides)
    return make_frame(**columns)


class TestFitPipeline:
    def test_counter_and_setpoint_dropped_by_role(self):
        pipeline = preprocess.fit_pipeline(fixture_frame(), basic_schema())
        assert "counter_1" not in pipeline.kept_columns
        assert "setpoint_1" not in pipeline.kept_columns

    def test_constant_column_dropped(self):
        frame = fixture_frame(temp_a=("measurement", np.full(100, 5.0)))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" not in pipeline.kept_columns

    def test_three_unique_values_dropped(self):
        frame = fixture_frame(temp_a=("measurement", np.tile([0.0, 1.0, 2.0], 34)[:100]))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" not in pipeline.kept_columns

    def test_four_unique_values_kept(self):
        frame = fixture_frame(temp_a=("measurement", np.tile([0.0, 1.0, 2.0, 3.0], 25)))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" in pipeline.kept_columns

    def test_mostly_zero_column_dropped(self):
        values = np.zeros(100)
        values[:15] = np.arange(15) + 1.0  # 85% zeros, 16 unique values
        frame = fixture_frame(temp_a=("measurement", values))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" not in pipeline.kept_columns

    def test_exactly_eighty_percent_zeros_kept(self):
        values = np.zeros(100)
        values[:20] = np.arange(20) + 1.0  # exactly 80% zeros: strict rule keeps it
        frame = fixture_frame(temp_a=("measurement", values))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" in pipeline.kept_columns

    def test_eighty_one_percent_zeros_dropped(self):
        values = np.zeros(100)
        values[:19] = np.arange(19) + 1.0
        frame = fixture_frame(temp_a=("measurement", values))
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        assert "temp_a" not in pipeline.kept_columns

    def test_angle_column_expands_to_sin_cos(self):
        pipeline = preprocess.fit_pipeline(fixture_frame(), basic_schema())
        assert "wind_dir" in pipeline.angle_columns
        assert "wind_dir_sin" in pipeline.feature_names
        assert "wind_dir_cos" in pipeline.feature_names
        assert len(pipeline.feature_names) == len(pipeline.kept_columns) + len(
            pipeline.angle_columns
        )

    def test_everything_pruned_raises(self):
        frame = make_frame(
            power=("power", np.full(50, 0.0)),
            wind_speed=("windspeed", np.full(50, 0.0)),
            counter_1=("counter", np.arange(50.0)),
        )
        schema = [c for c in basic_schema() if c.name in ("timestamp", "op_mode", "power", "wind_speed", "counter_1")]
        with pytest.raises(NoFeaturesLeft):
            preprocess.fit_pipeline(frame, schema)


class TestApplyPipeline:
    def test_fit_frame_maps_into_unit_interval(self):
        frame = fixture_frame()
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        out = preprocess.apply_pipeline(pipeline, frame)
        assert out.values.min() >= 0.0
        assert out.values.max() <= 1.0
        assert out.feature_names == pipeline.feature_names

    def test_midpoint_scales_to_half(self):
        pipeline = preprocess.FeaturePipeline(
            kept_columns=("x",),
            angle_columns=(),
            feature_names=("x",),
            min_vals=np.array([2.0]),
            max_vals=np.array([6.0]),
        )
        frame = make_frame(
            power=("power", [0.0]), wind_speed=("windspeed", [0.0]), x=("measurement", [4.0])
        )
        out = preprocess.apply_pipeline(pipeline, frame)
        assert out.values[0, 0] == 0.5

    def test_out_of_range_value_unclipped(self):
        pipeline = preprocess.FeaturePipeline(
            kept_columns=("x",),
            angle_columns=(),
            feature_names=("x",),
            min_vals=np.array([2.0]),
            max_vals=np.array([6.0]),
        )
        frame = make_frame(
            power=("power", [0.0]), wind_speed=("windspeed", [0.0]), x=("measurement", [10.0])
        )
        out = preprocess.apply_pipeline(pipeline, frame)
        assert out.values[0, 0] == 2.0

    def test_ninety_degrees_expands_to_unit_sin(self):
        expanded = preprocess._expand_matrix(
            np.array([[90.0]]), ["a"], ["a"], ["a"]
        )
        assert expanded[0, 0] == pytest.approx(1.0, abs=1e-15)
        assert expanded[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_angle_expansion_lies_on_unit_circle(self):
        rng = np.random.default_rng(1)
        angles = rng.uniform(-720, 720, 500).reshape(-1, 1)
        expanded = preprocess._expand_matrix(angles, ["a"], ["a"], ["a"])
        radius = expanded[:, 0] ** 2 + expanded[:, 1] ** 2
        assert np.allclose(radius, 1.0, atol=1e-12)

    def test_constant_feature_maps_to_zero(self):
        pipeline = preprocess.FeaturePipeline(
            kept_columns=("x",),
            angle_columns=(),
            feature_names=("x",),
            min_vals=np.array([5.0]),
            max_vals=np.array([5.0]),
        )
        frame = make_frame(
            power=("power", [0.0]), wind_speed=("windspeed", [0.0]), x=("measurement", [123.0])
        )
        assert preprocess.apply_pipeline(pipeline, frame).values[0, 0] == 0.0

    def test_missing_column_raises(self):
        frame = fixture_frame()
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        reduced = make_frame(power=("power", [1.0]), wind_speed=("windspeed", [8.0]))
        with pytest.raises(MissingColumn):
            preprocess.apply_pipeline(pipeline, reduced)

    def test_row_permutation_commutes(self):
        frame = fixture_frame()
        pipeline = preprocess.fit_pipeline(frame, basic_schema())
        out = preprocess.apply_pipeline(pipeline, frame).values
        rng = np.random.default_rng(3)
        idx = rng.permutation(len(frame))
        permuted = ingest.ScadaFrame(
            timestamps=frame.timestamps,
            op_modes=frame.op_modes,
            values=frame.values[idx],
            column_names=frame.column_names,
            roles=frame.roles,
        )
        assert np.array_equal(preprocess.apply_pipeline(pipeline, permuted).values, out[idx])
