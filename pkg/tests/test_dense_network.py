# tests/test_dense_network.py
import numpy as np
import pytest

from conftest import zero_network
from logic.DenseNetwork import (
    Activation,
    BiasInit,
    DenseLayer,
    DenseNetwork,
    InitScheme,
    Mode,
    WeightInit,
    init_network,
)
from logic.errors import ConfigurationError, ContractError, NumericError


def test_zero_network_outputs_zero(rng):
    """重みがすべて0なら出力は0"""
    net = zero_network(4, hidden=(5, 3))
    out = net.predict(rng.standard_normal((7, 4)))
    assert out.shape == (7, 1)
    assert np.all(out == 0.0)


def test_single_linear_layer_is_affine():
    """一層 Linear は W x + b"""
    layer = DenseLayer(
        np.array([[2.0, 3.0]]), np.array([1.0]), Activation.LINEAR
    )
    net = DenseNetwork([layer], 2)
    assert net.predict(np.array([1.0, 1.0])) == pytest.approx([6.0])


def test_vector_input_gives_vector_output(rng):
    net = init_network([3, 4, 1], [Activation.RELU, Activation.LINEAR])
    z = rng.standard_normal(3)
    assert net.predict(z).shape == (1,)
    assert net.predict(z)[0] == pytest.approx(
        net.predict(z.reshape(1, -1))[0, 0]
    )


def test_wrong_input_dimension_raises(rng):
    net = init_network([3, 2, 1], [Activation.RELU, Activation.LINEAR])
    with pytest.raises(ContractError):
        net.predict(rng.standard_normal((2, 4)))


def test_non_finite_input_raises():
    net = init_network([2, 1], [Activation.LINEAR])
    with pytest.raises(NumericError):
        net.predict(np.array([1.0, np.nan]))


def test_dims_mismatch_raises():
    layers = [
        DenseLayer(np.zeros((3, 2)), np.zeros(3), Activation.RELU),
        DenseLayer(np.zeros((1, 4)), np.zeros(1), Activation.LINEAR),
    ]
    with pytest.raises(ConfigurationError):
        DenseNetwork(layers, 2)


def test_init_network_length_mismatch_raises():
    with pytest.raises(ConfigurationError):
        init_network([3, 4, 1], [Activation.RELU])


def test_init_is_deterministic_per_seed():
    a = init_network([5, 6, 1], [Activation.RELU, Activation.LINEAR], seed=3)
    b = init_network([5, 6, 1], [Activation.RELU, Activation.LINEAR], seed=3)
    c = init_network([5, 6, 1], [Activation.RELU, Activation.LINEAR], seed=4)
    for pa, pb in zip(a.parameters(), b.parameters()):
        np.testing.assert_array_equal(pa, pb)
    assert not np.array_equal(a.parameters()[0], c.parameters()[0])


@pytest.mark.parametrize(
    "weights, limit",
    [
        (WeightInit.GLOROT_UNIFORM, np.sqrt(6.0 / (20 + 30))),
        (WeightInit.HE_UNIFORM, np.sqrt(6.0 / 20)),
    ],
)
def test_uniform_init_within_limit(weights, limit):
    net = init_network(
        [20, 30, 1],
        [Activation.RELU, Activation.LINEAR],
        scheme=InitScheme(weights, BiasInit.ZEROS),
    )
    assert np.max(np.abs(net.layers[0].weights)) <= limit


def test_ones_bias_init():
    net = init_network(
        [4, 3, 1],
        [Activation.RELU, Activation.LINEAR],
        scheme=InitScheme(WeightInit.GLOROT_NORMAL, BiasInit.ONES),
    )
    assert np.all(net.layers[0].bias == 1.0)
    assert np.all(net.layers[1].bias == 1.0)


def test_eval_mode_ignores_dropout(rng):
    """Eval モードでは dropout があっても出力は決定的"""
    net = init_network(
        [4, 8, 1], [Activation.RELU, Activation.LINEAR], [0.5, 0.0], seed=1
    )
    z = rng.standard_normal((5, 4))
    np.testing.assert_array_equal(net.predict(z), net.predict(z))


def test_train_mode_dropout_requires_rng(rng):
    net = init_network(
        [4, 8, 1], [Activation.RELU, Activation.LINEAR], [0.5, 0.0]
    )
    with pytest.raises(ContractError):
        net.forward(rng.standard_normal((2, 4)), Mode.TRAIN)


def test_dropout_is_unbiased_in_expectation():
    """inverted dropout: マスク付き出力の平均は元の出力に近い"""
    layer = DenseLayer(
        np.ones((200, 1)), np.zeros(200), Activation.LINEAR, 0.3
    )
    net = DenseNetwork([layer], 1)
    out, trace = net.forward(
        np.ones((500, 1)), Mode.TRAIN, np.random.default_rng(0)
    )
    assert out.mean() == pytest.approx(1.0, abs=0.02)
    kept = trace.masks[0][trace.masks[0] > 0]
    assert kept == pytest.approx(np.full(kept.shape, 1.0 / 0.7))


def test_dropout_rate_must_be_below_one():
    with pytest.raises(ConfigurationError):
        DenseLayer(np.zeros((1, 1)), np.zeros(1), Activation.LINEAR, 1.0)


def _numeric_grad(net, z, upstream, h=1e-6):
    grads = []
    for param in net.parameters():
        g = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + h
            plus = np.sum(net.predict(z) * upstream)
            param[idx] = original - h
            minus = np.sum(net.predict(z) * upstream)
            param[idx] = original
            g[idx] = (plus - minus) / (2 * h)
        grads.append(g)
    return grads


def test_backward_matches_finite_differences(rng):
    net = init_network(
        [4, 6, 5, 2],
        [Activation.RELU, Activation.SIGMOID, Activation.LINEAR],
        seed=11,
    )
    z = rng.standard_normal((8, 4))
    upstream = rng.standard_normal((8, 2))
    _, trace = net.forward(z)
    layer_grads, _ = net.backward(trace, upstream)
    analytic = []
    for g in layer_grads:
        analytic.extend([g.weights, g.bias])
    for a, n in zip(analytic, _numeric_grad(net, z, upstream)):
        np.testing.assert_allclose(a, n, rtol=1e-5, atol=1e-7)


def test_backward_is_exact_through_dropout_masks(rng):
    """同じシードで Train モードの forward を再生してマスクを固定する"""
    net = init_network(
        [5, 7, 4, 1],
        [Activation.RELU, Activation.RELU, Activation.LINEAR],
        [0.5, 0.3, 0.0],
        seed=13,
    )
    z = rng.standard_normal((6, 5))
    upstream = rng.standard_normal((6, 1))

    def objective():
        out, _ = net.forward(z, Mode.TRAIN, np.random.default_rng(42))
        return np.sum(out * upstream)

    _, trace = net.forward(z, Mode.TRAIN, np.random.default_rng(42))
    assert any(m is not None and np.any(m == 0.0) for m in trace.masks)
    layer_grads, _ = net.backward(trace, upstream)
    h = 1e-6
    for g, param in zip(layer_grads, net.parameters()[::2]):
        numeric = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + h
            plus = objective()
            param[idx] = original - h
            minus = objective()
            param[idx] = original
            numeric[idx] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(g.weights, numeric, rtol=1e-5, atol=1e-7)


def test_input_gradient_matches_finite_differences(rng):
    net = init_network(
        [3, 4, 1], [Activation.SIGMOID, Activation.LINEAR], seed=2
    )
    z = rng.standard_normal(3)
    _, trace = net.forward(z)
    _, input_grad = net.backward(trace, np.array([1.0]))
    h = 1e-6
    numeric = [
        (net.predict(z + h * e)[0] - net.predict(z - h * e)[0]) / (2 * h)
        for e in np.eye(3)
    ]
    np.testing.assert_allclose(input_grad, numeric, rtol=1e-5, atol=1e-8)


def test_backward_rejects_foreign_trace(rng):
    a = init_network([3, 2, 1], [Activation.RELU, Activation.LINEAR])
    b = init_network([3, 4, 1], [Activation.RELU, Activation.LINEAR])
    _, trace = a.forward(rng.standard_normal((2, 3)))
    with pytest.raises(ContractError):
        b.backward(trace, np.ones((2, 1)))


def test_to_dict_round_trip_preserves_outputs(rng):
    net = init_network(
        [3, 5, 1], [Activation.RELU, Activation.LINEAR], [0.2, 0.0], seed=9
    )
    restored = DenseNetwork.from_dict(net.to_dict())
    z = rng.standard_normal((6, 3))
    np.testing.assert_array_equal(net.predict(z), restored.predict(z))
    assert restored.dropout_rates == [0.2, 0.0]


def test_copy_is_independent():
    net = init_network([2, 1], [Activation.LINEAR], seed=5)
    clone = net.copy()
    clone.parameters()[0][...] = 0.0
    assert np.any(net.parameters()[0] != 0.0)
