"""Unit tests for config files and model persistence."""

import numpy as np
import pytest

from aunn.config import (
    ExperimentConfig,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from aunn.errors import ConfigError, DataError
from aunn.model_io import dump_network, load_network, parse_network, save_network
from aunn.network import InitConfig, LayerSpec, init_network


class TestConfigRoundTrip:
    def test_defaults_round_trip(self):
        cfg = ExperimentConfig()
        assert parse_config(serialize_config(cfg)) == cfg

    def test_non_default_round_trip(self):
        cfg = ExperimentConfig(
            task="incremental_iws_iss",
            seed=123,
            layers=(10, 2),
            n_mfs=3,
            mf_span="fixed_unit_interval",
            consequent_scale=0.25,
            schedule=((0.001, 300),),
            batch_mode="minibatch",
            batch_size=16,
            k_folds=7,
            epochs_per_session=111,
            epochs_full=222,
            learning_rate=0.0005,
            n_repeats=3,
            replay="cumulative",
            positive_class=0,
            window_s=0.25,
            step_s=0.05,
            levels=3,
            log_energy=True,
            data_in="/tmp/in.csv",
            results_out="/tmp/out",
        )
        assert parse_config(serialize_config(cfg)) == cfg

    def test_float_values_survive_exactly(self):
        cfg = ExperimentConfig(learning_rate=0.1 + 0.2)   # 0.30000000000000004
        assert parse_config(serialize_config(cfg)).learning_rate \
            == cfg.learning_rate

    def test_file_round_trip(self, tmp_path):
        cfg = ExperimentConfig(seed=9, layers=(4, 2), n_mfs=2)
        path = tmp_path / "exp.cfg"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_partial_file_keeps_defaults(self):
        cfg = parse_config("[experiment]\nseed = 5\n")
        assert cfg.seed == 5
        assert cfg.layers == ExperimentConfig().layers


class TestConfigValidation:
    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            parse_config("[surprise]\nx = 1\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nbogus = 1\n")

    def test_key_in_wrong_section(self):
        with pytest.raises(ConfigError):
            parse_config("[experiment]\nn_mfs = 3\n")

    def test_bad_schedule(self):
        with pytest.raises(ConfigError):
            parse_config("[training]\nschedule = fast\n")

    def test_bad_task(self):
        with pytest.raises(ConfigError):
            parse_config("[experiment]\ntask = regression\n")

    def test_bad_boolean(self):
        with pytest.raises(ConfigError):
            parse_config("[features]\nlog_energy = maybe\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")

    def test_derived_objects(self):
        cfg = ExperimentConfig(layers=(10, 2), n_mfs=3, seed=4)
        arch = cfg.architecture()
        assert arch == [LayerSpec(10, 3), LayerSpec(2, 3)]
        assert cfg.train_config().seed == 4
        assert cfg.incremental_config(seed=8).seed == 8


class TestModelPersistence:
    def build(self):
        data = np.random.default_rng(0).normal(size=(25, 3))
        return init_network(3, [LayerSpec(4, 2), LayerSpec(2, 3)],
                            InitConfig(seed=1), data), data

    def test_forward_bit_identical_after_round_trip(self):
        net, data = self.build()
        restored = parse_network(dump_network(net))
        np.testing.assert_array_equal(net.forward_batch(data),
                                      restored.forward_batch(data))

    def test_parameters_bit_identical(self):
        net, _ = self.build()
        restored = parse_network(dump_network(net))
        for la, lb in zip(net.layers, restored.layers):
            np.testing.assert_array_equal(la.mf_params, lb.mf_params)
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.bias, lb.bias)

    def test_file_round_trip(self, tmp_path):
        net, data = self.build()
        path = tmp_path / "model.txt"
        save_network(net, path)
        restored = load_network(path)
        np.testing.assert_array_equal(net.forward_batch(data),
                                      restored.forward_batch(data))

    def test_awkward_floats_survive(self):
        net, _ = self.build()
        net.layers[0].weights[0, 0, 0] = 1e-300
        net.layers[0].weights[0, 0, 1] = -1.0000000000000002
        net.layers[0].bias[0, 0] = 3.141592653589793
        restored = parse_network(dump_network(net))
        np.testing.assert_array_equal(net.layers[0].weights,
                                      restored.layers[0].weights)
        np.testing.assert_array_equal(net.layers[0].bias,
                                      restored.layers[0].bias)

    def test_malformed_model_rejected(self):
        with pytest.raises(DataError):
            parse_network("not a model\n")
        with pytest.raises(DataError):
            parse_network("aunn-model 999\ninput_dim 1\nn_layers 0\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_network(tmp_path / "absent.txt")
