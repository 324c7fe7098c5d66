# DenseNetwork.py
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from logic.errors import ConfigurationError, ContractError, NumericError


# --- 列挙型 ---
class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"
    SIGMOID = "sigmoid"

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(x, 0.0)
        if self is Activation.SIGMOID:
            # expit は正負で式を分ける安定な実装
            return expit(x)
        return x

    def derivative(self, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
        """活性化前の値 pre に対する微分 (post は活性化後の値)。"""
        if self is Activation.RELU:
            return (pre > 0.0).astype(np.float64)
        if self is Activation.SIGMOID:
            return post * (1.0 - post)
        return np.ones_like(pre)


class WeightInit(str, Enum):
    GLOROT_UNIFORM = "glorot_uniform"
    GLOROT_NORMAL = "glorot_normal"
    HE_UNIFORM = "he_uniform"


class BiasInit(str, Enum):
    ZEROS = "zeros"
    ONES = "ones"


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True)
class InitScheme:
    weights: WeightInit = WeightInit.GLOROT_UNIFORM
    bias: BiasInit = BiasInit.ZEROS

    def draw_weights(
        self, fan_in: int, fan_out: int, rng: np.random.Generator
    ) -> np.ndarray:
        """
        形状 (fan_out, fan_in) の重み行列を初期化スキームに従って生成する。
        """
        shape = (fan_out, fan_in)
        if self.weights is WeightInit.GLOROT_UNIFORM:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=shape)
        if self.weights is WeightInit.HE_UNIFORM:
            limit = np.sqrt(6.0 / fan_in)
            return rng.uniform(-limit, limit, size=shape)
        std = np.sqrt(2.0 / (fan_in + fan_out))
        return rng.normal(0.0, std, size=shape)

    def draw_bias(self, fan_out: int) -> np.ndarray:
        if self.bias is BiasInit.ONES:
            return np.ones(fan_out)
        return np.zeros(fan_out)


# --- 層とトレース ---
@dataclass
class DenseLayer:
    """
    アフィン変換 + 活性化関数 (+ 任意の dropout) からなる全結合層。

    weights は (out_dim, in_dim)、bias は長さ out_dim。
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.LINEAR
    dropout_rate: float = 0.0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        self.activation = Activation(self.activation)
        self.dropout_rate = float(self.dropout_rate)
        if self.weights.ndim != 2:
            raise ConfigurationError("weights は2次元行列が必要です。")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ConfigurationError(
                f"bias の長さ {self.bias.shape[0]} が out_dim "
                f"{self.weights.shape[0]} と一致しません。"
            )
        if not (
            np.all(np.isfinite(self.weights))
            and np.all(np.isfinite(self.bias))
        ):
            raise NumericError("層のパラメータに非有限値が含まれています。")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(
                f"dropout_rate は [0, 1) が必要です: {self.dropout_rate}"
            )

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass
class LayerGradient:
    weights: np.ndarray
    bias: np.ndarray


@dataclass
class ForwardTrace:
    """逆伝播のために保持する層ごとの中間値。"""

    mode: Mode
    inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    activations: List[np.ndarray] = field(default_factory=list)
    masks: List[Optional[np.ndarray]] = field(default_factory=list)
    vector_input: bool = False


# --- ネットワーク本体 ---
class DenseNetwork:
    """
    全結合層を順に合成した F_L(·; θ)。
    forward / backward はパラメータを変更しない。
    """

    def __init__(self, layers: Sequence[DenseLayer], input_dim: int):
        if not layers:
            raise ConfigurationError("層が1つもありません。")
        self.layers: List[DenseLayer] = list(layers)
        self.input_dim = int(input_dim)
        if self.input_dim < 1:
            raise ConfigurationError("input_dim は正の整数が必要です。")
        expected = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_dim != expected:
                raise ConfigurationError(
                    f"層 {i} の in_dim {layer.in_dim} が前段の出力 "
                    f"{expected} と一致しません。"
                )
            expected = layer.out_dim

    # --- 構造 ---
    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    @property
    def activations(self) -> List[Activation]:
        return [layer.activation for layer in self.layers]

    @property
    def dropout_rates(self) -> List[float]:
        return [layer.dropout_rate for layer in self.layers]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> List[np.ndarray]:
        """[W_1, b_1, W_2, b_2, ...] の順で実体 (ビューではない配列) を返す。"""
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend([layer.weights, layer.bias])
        return params

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(
            [
                DenseLayer(
                    layer.weights.copy(),
                    layer.bias.copy(),
                    layer.activation,
                    layer.dropout_rate,
                )
                for layer in self.layers
            ],
            self.input_dim,
        )

    # --- 順伝播 ---
    def forward(
        self,
        inputs: np.ndarray,
        mode: Mode = Mode.EVAL,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, ForwardTrace]:
        """
        f_L ∘ … ∘ f_1 を評価する。

        Train モードでは各層の出力に inverted dropout を適用し、残ったユニットを
        1/(1 - rate) 倍する。マスクは呼び出しごとに引き直す。

        Args:
            inputs: 長さ input_dim のベクトル、または (n, input_dim) 行列。
            mode: Mode.TRAIN または Mode.EVAL。
            rng: Train モードで dropout がある場合に必須。

        Returns:
            (出力, ForwardTrace)。ベクトル入力ならベクトルを返す。
        """
        mode = Mode(mode)
        x = np.asarray(inputs, dtype=np.float64)
        vector_input = x.ndim == 1
        if vector_input:
            x = x.reshape(1, -1)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ContractError(
                f"入力の次元 {np.shape(inputs)} が input_dim "
                f"{self.input_dim} と一致しません。"
            )
        if not np.all(np.isfinite(x)):
            raise NumericError("入力に非有限値が含まれています。")

        trace = ForwardTrace(mode=mode, vector_input=vector_input)
        for layer in self.layers:
            pre = x @ layer.weights.T + layer.bias
            act = layer.activation.apply(pre)
            mask = None
            if mode is Mode.TRAIN and layer.dropout_rate > 0.0:
                if rng is None:
                    raise ContractError("dropout には rng が必要です。")
                keep = rng.random(act.shape) >= layer.dropout_rate
                mask = keep / (1.0 - layer.dropout_rate)
            trace.inputs.append(x)
            trace.pre_activations.append(pre)
            trace.activations.append(act)
            trace.masks.append(mask)
            x = act if mask is None else act * mask

        output = x[0] if vector_input else x
        return output, trace

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Eval モード (dropout 無効) の出力のみを返す。"""
        output, _ = self.forward(inputs, Mode.EVAL)
        return output

    # --- 逆伝播 ---
    def backward(
        self, trace: ForwardTrace, upstream_grad: np.ndarray
    ) -> Tuple[List[LayerGradient], np.ndarray]:
        """
        トレースされた計算に対する厳密な勾配を逆伝播で求める。

        Args:
            trace: 同じネットワークの forward が返したトレース。
            upstream_grad: 出力に対する損失の勾配 (出力と同じ形状)。

        Returns:
            (層ごとの LayerGradient のリスト, 入力に対する勾配)。
        """
        self._check_trace(trace)
        g = np.asarray(upstream_grad, dtype=np.float64)
        if g.ndim == 1:
            g = g.reshape(1, -1) if trace.vector_input else g.reshape(-1, 1)
        n = trace.inputs[0].shape[0]
        if g.shape != (n, self.output_dim):
            raise ContractError(
                f"upstream_grad の形状 {g.shape} が出力 "
                f"{(n, self.output_dim)} と一致しません。"
            )

        grads: List[LayerGradient] = []
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            mask = trace.masks[k]
            if mask is not None:
                g = g * mask
            g_pre = g * layer.activation.derivative(
                trace.pre_activations[k], trace.activations[k]
            )
            grads.append(
                LayerGradient(
                    weights=g_pre.T @ trace.inputs[k],
                    bias=g_pre.sum(axis=0),
                )
            )
            g = g_pre @ layer.weights
        grads.reverse()
        input_grad = g[0] if trace.vector_input else g
        return grads, input_grad

    def _check_trace(self, trace: ForwardTrace) -> None:
        if len(trace.inputs) != len(self.layers):
            raise ContractError("トレースの層数がネットワークと一致しません。")
        for layer, x, pre in zip(
            self.layers, trace.inputs, trace.pre_activations
        ):
            if x.shape[1] != layer.in_dim or pre.shape[1] != layer.out_dim:
                raise ContractError(
                    "トレースの形状がネットワークと一致しません。"
                )

    # --- 直列化 ---
    def to_dict(self) -> Dict[str, Any]:
        """
        {dims, activations, dropout_rates, layers} 形式の辞書を返す。
        weights は行優先で平坦化する。
        """
        return {
            "dims": self.dims,
            "activations": [a.value for a in self.activations],
            "dropout_rates": self.dropout_rates,
            "layers": [
                {
                    "weights": layer.weights.ravel().tolist(),
                    "bias": layer.bias.tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DenseNetwork":
        dims = [int(d) for d in data["dims"]]
        activations = data["activations"]
        rates = data.get("dropout_rates") or [0.0] * (len(dims) - 1)
        entries = data["layers"]
        if not (
            len(entries) == len(activations) == len(rates) == len(dims) - 1
        ):
            raise ConfigurationError("ネットワーク定義の長さが不整合です。")
        layers = []
        for i, entry in enumerate(entries):
            weights = np.array(entry["weights"], dtype=np.float64)
            if weights.size != dims[i + 1] * dims[i]:
                raise ConfigurationError(f"層 {i} の weights の要素数が不正です。")
            layers.append(
                DenseLayer(
                    weights.reshape(dims[i + 1], dims[i]),
                    np.array(entry["bias"], dtype=np.float64),
                    Activation(activations[i]),
                    float(rates[i]),
                )
            )
        return cls(layers, dims[0])


def init_network(
    dims: Sequence[int],
    activations: Sequence[Activation],
    dropout_rates: Optional[Sequence[float]] = None,
    scheme: InitScheme = InitScheme(),
    seed: int = 0,
) -> DenseNetwork:
    """
    次元リストからネットワークを初期化する。同じシードなら同一のパラメータ。

    Args:
        dims: [k_1, k_2, ..., k_{L+1}] (入力次元を含む)。
        activations: 長さ L の活性化関数。
        dropout_rates: 長さ L の dropout 率 (省略時はすべて0)。
        scheme: 重み・バイアスの初期化スキーム。
        seed: 乱数シード。

    Returns:
        初期化された DenseNetwork。
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ConfigurationError("dims には2つ以上の要素が必要です。")
    if any(d < 1 for d in dims):
        raise ConfigurationError(f"dims は正の整数が必要です: {dims}")
    n_layers = len(dims) - 1
    if dropout_rates is None:
        dropout_rates = [0.0] * n_layers
    if len(activations) != n_layers or len(dropout_rates) != n_layers:
        raise ConfigurationError(
            f"activations ({len(activations)}) と dropout_rates "
            f"({len(dropout_rates)}) の長さは {n_layers} が必要です。"
        )

    rng = np.random.default_rng(seed)
    layers = []
    for k in range(n_layers):
        layers.append(
            DenseLayer(
                weights=scheme.draw_weights(dims[k], dims[k + 1], rng),
                bias=scheme.draw_bias(dims[k + 1]),
                activation=Activation(activations[k]),
                dropout_rate=dropout_rates[k],
            )
        )
    return DenseNetwork(layers, dims[0])
