"""Unit tests for layer stacking, initialization, and prediction."""

import numpy as np
import pytest

from aunn.errors import ConfigError, ShapeError
from aunn.fuzzy import AnfisUnit, normalize_firings
from aunn.network import (
    AuNetwork,
    InitConfig,
    Layer,
    LayerSpec,
    init_network,
    network_forward,
    predict_class,
)


def constant_output_layer(n_inputs, values):
    """One unit per value; each unit has a single all-covering rule with a
    zero slope, so its output is the constant bias."""
    n_units = len(values)
    mf = np.tile(np.array([-100.0, 0.0, 100.0]), (n_units, n_inputs, 1, 1))
    weights = np.zeros((n_units, 1, n_inputs))
    bias = np.array(values, dtype=float).reshape(n_units, 1)
    return Layer(mf, weights, bias)


class TestInitNetwork:
    def test_deterministic_for_fixed_seed(self):
        data = np.random.default_rng(0).normal(size=(20, 3))
        cfg = InitConfig(seed=42)
        a = init_network(3, [LayerSpec(4, 2), LayerSpec(2, 2)], cfg, data)
        b = init_network(3, [LayerSpec(4, 2), LayerSpec(2, 2)], cfg, data)
        for la, lb in zip(a.layers, b.layers):
            np.testing.assert_array_equal(la.mf_params, lb.mf_params)
            np.testing.assert_array_equal(la.weights, lb.weights)
            np.testing.assert_array_equal(la.bias, lb.bias)

    def test_peaks_evenly_spaced_over_data_range(self):
        data = np.array([[0.0], [0.25], [1.0]])
        net = init_network(1, [LayerSpec(1, 3)], InitConfig(seed=0), data)
        np.testing.assert_allclose(net.layers[0].mf_params[0, 0, :, 1],
                                   [0.0, 0.5, 1.0])

    def test_feet_extend_to_neighboring_peaks(self):
        data = np.array([[0.0], [1.0]])
        net = init_network(1, [LayerSpec(1, 3)], InitConfig(seed=0), data)
        triples = net.layers[0].mf_params[0, 0]
        np.testing.assert_allclose(triples[:, 0], [-0.5, 0.0, 0.5])   # feet a
        np.testing.assert_allclose(triples[:, 2], [0.5, 1.0, 1.5])    # feet c

    def test_zero_consequent_scale(self):
        net = init_network(
            2, [LayerSpec(3, 2)],
            InitConfig(seed=1, mf_span_source="fixed_unit_interval",
                       consequent_scale=0.0),
        )
        assert np.all(net.layers[0].weights == 0.0)
        assert np.all(net.layers[0].bias == 0.0)

    def test_hidden_layers_span_symmetric_interval(self):
        net = init_network(
            1, [LayerSpec(2, 2), LayerSpec(2, 3)],
            InitConfig(seed=0, mf_span_source="fixed_unit_interval"),
        )
        np.testing.assert_allclose(net.layers[1].mf_params[0, 0, :, 1],
                                   [-1.0, 0.0, 1.0])

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            init_network(2, [], InitConfig(seed=0))
        with pytest.raises(ConfigError):
            init_network(2, [LayerSpec(1, 1)], InitConfig(seed=0))  # no data
        with pytest.raises(ConfigError):
            LayerSpec(0, 3)
        with pytest.raises(ConfigError):
            InitConfig(mf_span_source="nonsense")

    def test_constant_feature_still_yields_valid_triples(self):
        data = np.full((5, 1), 2.5)
        net = init_network(1, [LayerSpec(1, 3)], InitConfig(seed=0), data)
        t = net.layers[0].mf_params[0, 0]
        assert np.all(np.diff(t, axis=-1) >= 0)
        assert t[0, 0] < t[0, 1] or t[0, 1] < t[0, 2]


class TestNetworkForward:
    def test_single_layer_matches_units(self):
        data = np.random.default_rng(2).normal(size=(10, 2))
        net = init_network(2, [LayerSpec(3, 2)], InitConfig(seed=3), data)
        x = data[0]
        expected = [u.forward(x) for u in net.layers[0].units]
        np.testing.assert_allclose(network_forward(net, x), expected)

    def test_constant_consequents_ignore_input(self):
        net = AuNetwork(2, [constant_output_layer(2, [1.0, -2.0, 0.5])])
        np.testing.assert_allclose(net.forward([0.0, 0.0]), [1.0, -2.0, 0.5])
        np.testing.assert_allclose(net.forward([9.0, -9.0]), [1.0, -2.0, 0.5])

    def test_two_layer_hand_composition(self):
        # Layer 0: two units on 2 inputs, single all-covering rule each,
        # affine consequents chosen by hand. Layer 1: one unit combining
        # them with two rules. Compare against an explicit chain of
        # single-unit evaluations.
        l0 = Layer(
            np.tile(np.array([-10.0, 0.0, 10.0]), (2, 2, 1, 1)),
            np.array([[[1.0, 0.0]], [[0.0, 2.0]]]),
            np.array([[1.0], [1.0]]),
        )
        l1_mf = np.tile(
            np.array([[0.0, 4.0, 8.0], [0.0, 8.0, 16.0]]), (1, 2, 1, 1)
        )
        l1 = Layer(l1_mf, np.array([[[1.0, 1.0], [0.5, -0.5]]]),
                   np.array([[0.0, 2.0]]))
        net = AuNetwork(2, [l0, l1])

        x = np.array([2.0, 3.0])
        hidden = np.array([u.forward(x) for u in l0.units])
        np.testing.assert_allclose(hidden, [3.0, 7.0])
        unit = AnfisUnit(l1_mf[0], net.layers[1].weights[0],
                         net.layers[1].bias[0])
        expected = unit.forward(hidden)
        out = net.forward(x)
        assert out.shape == (1,)
        assert out[0] == pytest.approx(expected)
        # hand arithmetic on hidden = [3, 7]: rule 0 degrees (3/4, 1/4)
        # fire at 12/64, rule 1 degrees (3/8, 7/8) at 21/64; normalized
        # (4/11, 7/11); consequents (10, 0); output 40/11
        w = normalize_firings(unit.firing_strengths(hidden))
        np.testing.assert_allclose(w, [4 / 11, 7 / 11])
        assert out[0] == pytest.approx(40 / 11)

    def test_forward_is_pure(self):
        data = np.random.default_rng(4).normal(size=(8, 2))
        net = init_network(2, [LayerSpec(2, 2), LayerSpec(2, 2)],
                           InitConfig(seed=5), data)
        x = data[1]
        first = net.forward(x)
        for _ in range(3):
            np.testing.assert_array_equal(net.forward(x), first)

    def test_dimension_mismatch(self):
        net = AuNetwork(2, [constant_output_layer(2, [0.0, 1.0])])
        with pytest.raises(ShapeError):
            net.forward([1.0])
        with pytest.raises(ShapeError):
            net.forward_batch(np.zeros((3, 5)))


class TestPredictClass:
    def test_argmax(self):
        net = AuNetwork(1, [constant_output_layer(1, [0.1, 0.9])])
        assert predict_class(net, [0.0]) == 1

    def test_tie_breaks_to_lowest_index(self):
        net = AuNetwork(1, [constant_output_layer(1, [0.5, 0.5])])
        assert predict_class(net, [0.0]) == 0

    def test_five_class_architecture_stays_in_range(self):
        data = np.random.default_rng(6).normal(size=(30, 70))
        net = init_network(70, [LayerSpec(5, 70)], InitConfig(seed=7), data)
        for x in data[:5]:
            assert predict_class(net, x) in range(5)

    def test_invariant_under_increasing_affine_transform(self):
        # Scaling every last-layer consequent by alpha > 0 and shifting all
        # biases by beta applies z -> alpha z + beta to the outputs, which
        # must never change the argmax.
        rng = np.random.default_rng(8)
        data = rng.normal(size=(12, 2))
        net = init_network(2, [LayerSpec(3, 2)], InitConfig(seed=9), data)
        transformed = net.copy()
        transformed.layers[-1].weights *= 2.5
        transformed.layers[-1].bias *= 2.5
        transformed.layers[-1].bias += 0.7
        for x in data:
            assert net.predict_class(x) == transformed.predict_class(x)


class TestShapePropagation:
    def test_construction_rejects_width_mismatch(self):
        l0 = constant_output_layer(2, [0.0, 1.0, 2.0])   # width 3
        l1 = constant_output_layer(2, [0.0])             # expects 2 inputs
        with pytest.raises(ShapeError):
            AuNetwork(2, [l0, l1])

    def test_copy_is_independent(self):
        net = AuNetwork(1, [constant_output_layer(1, [1.0, 2.0])])
        dup = net.copy()
        dup.layers[0].bias += 5.0
        np.testing.assert_allclose(net.layers[0].bias.ravel(), [1.0, 2.0])
