# tests/test_optimizer.py
import numpy as np
import pytest

from logic.Optimizer import (
    STEP_FUNCTIONS,
    make_state,
    step_adadelta,
    step_adagrad,
    step_adam,
    step_sgd,
)
from logic.TrainConfig import OptimizerKind, TrainConfig
from logic.errors import ConfigurationError, ContractError


def _run(step, kind, params, grads, cfg):
    state = make_state(kind, params)
    return step(params, grads, state, cfg)


def test_sgd_step_arithmetic():
    """θ = 1, g = 2, η = 0.1 → 0.8"""
    params = [np.array([1.0])]
    params, state = _run(
        step_sgd,
        OptimizerKind.SGD,
        params,
        [np.array([2.0])],
        TrainConfig(learning_rate=0.1),
    )
    assert params[0][0] == pytest.approx(0.8)
    assert state.step == 1


def test_sgd_zero_gradient_is_no_op():
    theta = np.array([[0.3, -1.2], [2.0, 0.0]])
    params = [theta.copy()]
    _run(
        step_sgd,
        OptimizerKind.SGD,
        params,
        [np.zeros_like(theta)],
        TrainConfig(learning_rate=0.5),
    )
    np.testing.assert_array_equal(params[0], theta)


def test_adagrad_first_step():
    """初回は η·g/(|g| + ε) ≈ η·sign(g)"""
    cfg = TrainConfig(learning_rate=0.01, optimizer="adagrad")
    params = [np.array([0.0, 0.0])]
    g = np.array([3.0, -0.5])
    _run(step_adagrad, OptimizerKind.ADAGRAD, params, [g], cfg)
    eps = cfg.optimizer_params.adagrad_eps
    np.testing.assert_allclose(params[0], -0.01 * g / (np.abs(g) + eps))


def test_adam_first_step_matches_closed_form():
    cfg = TrainConfig(learning_rate=0.001, optimizer="adam")
    g = np.array([0.2, -4.0, 1e-3])
    params = [np.ones(3)]
    _run(step_adam, OptimizerKind.ADAM, params, [g], cfg)
    eps = cfg.optimizer_params.adam_eps
    # バイアス補正後 m̂ = g, v̂ = g² なので更新量は η·g/(|g| + ε)
    expected = 1.0 - 0.001 * g / (np.abs(g) + eps)
    np.testing.assert_allclose(params[0], expected, rtol=1e-12)


def test_adadelta_first_step_matches_closed_form():
    cfg = TrainConfig(optimizer="adadelta")
    op = cfg.optimizer_params
    g = np.array([0.5, -2.0])
    params = [np.zeros(2)]
    params, state = _run(
        step_adadelta, OptimizerKind.ADADELTA, params, [g], cfg
    )
    eg = (1.0 - op.adadelta_decay) * g * g
    delta = -np.sqrt(op.adadelta_eps) / np.sqrt(eg + op.adadelta_eps) * g
    np.testing.assert_allclose(params[0], delta)
    np.testing.assert_allclose(
        state.slots["accum_update"][0],
        (1.0 - op.adadelta_decay) * delta * delta,
    )


@pytest.mark.parametrize("kind", list(OptimizerKind))
def test_shape_mismatch_raises(kind):
    params = [np.zeros((2, 2))]
    state = make_state(kind, params)
    with pytest.raises(ContractError):
        STEP_FUNCTIONS[kind](
            params, [np.zeros(3)], state, TrainConfig(optimizer=kind)
        )


def test_state_shape_mismatch_raises():
    state = make_state(OptimizerKind.ADAM, [np.zeros(2)])
    with pytest.raises(ContractError):
        step_adam(
            [np.zeros(3)], [np.zeros(3)], state, TrainConfig(optimizer="adam")
        )


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": -0.1},
        {"batch_size": 0},
        {"max_epochs": 0},
        {"gap_delta": 0.0},
        {"optimizer": "rmsprop"},
    ],
)
def test_invalid_train_config(kwargs):
    with pytest.raises((ConfigurationError, ValueError)):
        TrainConfig(**kwargs)


def test_train_config_from_dict_rejects_unknown_key():
    cfg = TrainConfig(learning_rate=0.05, optimizer="adam")
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigurationError):
        TrainConfig.from_dict({"momentum": 0.9})
