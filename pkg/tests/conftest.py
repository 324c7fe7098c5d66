# tests/conftest.py
import numpy as np
import pytest

from logic.Cohort import Cohort
from logic.DenseNetwork import Activation, DenseLayer, DenseNetwork
from logic.InnerModel import InnerModel


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="シミュレーション規模のテストも実行する",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="--runslow を指定すると実行")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def zero_network(p: int, hidden=(3,)) -> DenseNetwork:
    """重み・バイアスがすべて0のネットワーク (出力は常に0)。"""
    dims = [p] + list(hidden) + [1]
    activations = [Activation.RELU] * len(hidden) + [Activation.LINEAR]
    return DenseNetwork(
        [
            DenseLayer(
                np.zeros((dims[k + 1], dims[k])),
                np.zeros(dims[k + 1]),
                activations[k],
            )
            for k in range(len(dims) - 1)
        ],
        p,
    )


def linear_network(weights, bias: float) -> DenseNetwork:
    """出力 = Zᵀw + b の一層ネットワーク。"""
    w = np.asarray(weights, dtype=np.float64).reshape(1, -1)
    return DenseNetwork(
        [DenseLayer(w, np.array([float(bias)]), Activation.LINEAR)],
        w.shape[1],
    )


def linear_model(w_alpha, b_alpha, w_beta, b_beta) -> InnerModel:
    return InnerModel(
        linear_network(w_alpha, b_alpha), linear_network(w_beta, b_beta)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_cohort(rng):
    """p = 3, n = 40 のラベル付きコホート。"""
    n, p = 40, 3
    z = rng.standard_normal((n, p))
    x = rng.uniform(0.0, 10.0, size=n)
    y = (rng.random(n) < 0.4).astype(float)
    y[:2] = [0.0, 1.0]
    return Cohort(z, x, y)
