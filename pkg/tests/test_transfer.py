import numpy as np
import pytest

from windae import detector, ingest, transfer
from windae.errors import BadSpec, EmptyResult


def network_snapshot(network):
    out = []
    for layer in network.layers:
        out.append(layer.weights.copy())
        out.append(layer.biases.copy())
        if layer.prelu_slope is not None:
            out.append(np.float64(layer.prelu_slope))
    return out


def networks_identical(a, b):
    return all(np.array_equal(x, y) for x, y in zip(network_snapshot(a), network_snapshot(b)))


@pytest.fixture(scope="module")
def decoder_tuned(small_source, target_tuning):
    config = transfer.TransferConfig(method="decoder", seed=1)
    return transfer.transfer_decoder(
        small_source["model"], target_tuning["frame"], target_tuning["labels"], config
    )


@pytest.fixture(scope="module")
def ae_tuned(small_source, target_tuning):
    config = transfer.TransferConfig(method="ae", seed=1)
    return transfer.transfer_full_ae(
        small_source["model"], target_tuning["frame"], target_tuning["labels"], config
    )


class TestThresholdMethod:
    def test_network_and_pipeline_untouched(self, small_source, target_tuning):
        source = small_source["model"]
        model = transfer.transfer_threshold(
            source, target_tuning["frame"], target_tuning["labels"]
        )
        assert networks_identical(model.network, source.network)
        assert model.pipeline is source.pipeline

    def test_same_fit_inputs_reproduce_source_threshold(self, small_source):
        source = small_source["model"]
        model = transfer.transfer_threshold(
            source, small_source["train_frame"], small_source["train_labels"]
        )
        assert model.threshold == source.threshold

    def test_new_threshold_is_finite_and_nonnegative(self, small_source, target_tuning):
        model = transfer.transfer_threshold(
            small_source["model"], target_tuning["frame"], target_tuning["labels"]
        )
        assert np.isfinite(model.threshold)
        assert model.threshold >= 0

    def test_lineage_metadata(self, small_source, target_tuning):
        model = transfer.transfer_threshold(
            small_source["model"], target_tuning["frame"], target_tuning["labels"]
        )
        info = model.metadata["transfer"]
        assert info["method"] == "threshold"
        assert info["source_model_id"] == small_source["model"].model_id
        assert info["tuning_window"]["start"] == "2022-03-01T00:00:00Z"


class TestDecoderMethod:
    def test_encoder_bit_identical(self, small_source, decoder_tuned):
        source = small_source["model"]
        for i in range(source.network.encoder_len):
            assert np.array_equal(
                decoder_tuned.network.layers[i].weights, source.network.layers[i].weights
            )
            assert np.array_equal(
                decoder_tuned.network.layers[i].biases, source.network.layers[i].biases
            )
            assert float(decoder_tuned.network.layers[i].prelu_slope) == float(
                source.network.layers[i].prelu_slope
            )

    def test_decoder_changed(self, small_source, decoder_tuned):
        source = small_source["model"]
        changed = any(
            not np.array_equal(
                decoder_tuned.network.layers[i].weights, source.network.layers[i].weights
            )
            for i in range(source.network.encoder_len, len(source.network.layers))
        )
        assert changed

    def test_tuning_mse_not_worse(self, decoder_tuned):
        info = decoder_tuned.metadata["transfer"]
        assert info["tuning_mse_after"] <= info["tuning_mse_before"]

    def test_zero_epochs_keep_network(self, small_source, target_tuning):
        config = transfer.TransferConfig(method="decoder", epochs=0, seed=1)
        model = transfer.transfer_decoder(
            small_source["model"], target_tuning["frame"], target_tuning["labels"], config
        )
        assert networks_identical(model.network, small_source["model"].network)
        assert model.metadata["transfer"]["epochs"] == 0

    def test_no_frozen_flags_left_behind(self, decoder_tuned):
        assert not any(layer.frozen for layer in decoder_tuned.network.layers)

    def test_wrong_method_rejected(self, small_source, target_tuning):
        config = transfer.TransferConfig(method="ae", seed=1)
        with pytest.raises(BadSpec):
            transfer.transfer_decoder(
                small_source["model"], target_tuning["frame"], target_tuning["labels"], config
            )


class TestFullAeMethod:
    def test_encoder_also_changes(self, small_source, ae_tuned):
        source = small_source["model"]
        changed = any(
            not np.array_equal(
                ae_tuned.network.layers[i].weights, source.network.layers[i].weights
            )
            for i in range(source.network.encoder_len)
        )
        assert changed

    def test_default_learning_rate_recorded(self, ae_tuned):
        assert ae_tuned.metadata["transfer"]["learning_rate"] == transfer.FULL_AE_LEARNING_RATE

    def test_zero_epochs_keep_network(self, small_source, target_tuning):
        config = transfer.TransferConfig(method="ae", epochs=0, seed=1)
        model = transfer.transfer_full_ae(
            small_source["model"], target_tuning["frame"], target_tuning["labels"], config
        )
        assert networks_identical(model.network, small_source["model"].network)


class TestSharedBehaviour:
    def test_source_model_never_mutated(self, small_source, target_tuning):
        source = small_source["model"]
        before = network_snapshot(source.network)
        threshold_before = source.threshold
        for method, call in (
            ("threshold", lambda: transfer.transfer_threshold(
                source, target_tuning["frame"], target_tuning["labels"])),
            ("decoder", lambda: transfer.transfer_decoder(
                source, target_tuning["frame"], target_tuning["labels"],
                transfer.TransferConfig(method="decoder", seed=2))),
            ("ae", lambda: transfer.transfer_full_ae(
                source, target_tuning["frame"], target_tuning["labels"],
                transfer.TransferConfig(method="ae", seed=2))),
        ):
            call()
            assert all(
                np.array_equal(x, y) for x, y in zip(before, network_snapshot(source.network))
            ), method
            assert source.threshold == threshold_before

    def test_all_methods_refit_threshold_on_tuning_window(self, small_source, target_tuning):
        source = small_source["model"]
        models = [
            transfer.transfer_threshold(source, target_tuning["frame"], target_tuning["labels"]),
            transfer.transfer_decoder(
                source, target_tuning["frame"], target_tuning["labels"],
                transfer.TransferConfig(method="decoder", seed=2)),
            transfer.transfer_full_ae(
                source, target_tuning["frame"], target_tuning["labels"],
                transfer.TransferConfig(method="ae", seed=2)),
        ]
        for model in models:
            window = model.metadata["transfer"]["tuning_window"]
            assert window == {"start": "2022-03-01T00:00:00Z", "end": "2022-04-01T00:00:00Z"}

    def test_empty_normal_tuning_rows_raise(self, small_source, target_tuning):
        frame = target_tuning["frame"]
        labels = ingest.LabelSeries(np.ones(len(frame), dtype=bool))
        config = transfer.TransferConfig(method="decoder", seed=1)
        with pytest.raises(EmptyResult):
            transfer.transfer_decoder(small_source["model"], frame, labels, config)

    def test_transfer_artifact_round_trips(self, small_source, target_tuning, tmp_path):
        config = transfer.TransferConfig(method="decoder", seed=1)
        model = transfer.transfer_decoder(
            small_source["model"], target_tuning["frame"], target_tuning["labels"], config
        )
        path = tmp_path / "tl.json"
        detector.save_model(model, path)
        loaded = detector.load_model(path)
        frame = target_tuning["frame"]
        assert np.array_equal(
            detector.anomaly_scores(model, frame), detector.anomaly_scores(loaded, frame)
        )

    def test_bad_config_values(self):
        with pytest.raises(BadSpec):
            transfer.TransferConfig(method="bogus")
        with pytest.raises(BadSpec):
            transfer.TransferConfig(method="decoder", epochs=-1)
        with pytest.raises(BadSpec):
            transfer.TransferConfig(method="ae", learning_rate=0.0)
