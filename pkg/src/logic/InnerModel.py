# InnerModel.py
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from logic.Cohort import Cohort, Subject
from logic.DenseNetwork import (
    Activation,
    DenseNetwork,
    ForwardTrace,
    InitScheme,
    LayerGradient,
    Mode,
    init_network,
)
from logic.errors import ConfigurationError, ContractError
from logic.util.derive_seed import derive_seed

logger = logging.getLogger(__name__)

# sigmoid / 損失の評価時のみ logit をこの範囲に収める (勾配は未クランプ値)
LOGIT_CLAMP = 35.0

DEFAULT_HIDDEN = (250, 125)


def inner_probability(
    intercept: np.ndarray, slope: np.ndarray, pain
) -> np.ndarray:
    """expit(clip(a + b·x))。predict と同じ計算を配列のまま行う。"""
    logit = np.asarray(intercept) + np.asarray(slope) * np.asarray(pain)
    return expit(np.clip(logit, -LOGIT_CLAMP, LOGIT_CLAMP))


@dataclass(frozen=True)
class TendencyScore:
    """BOT = exp(log_bot), POT = exp(log_pot)。"""

    log_bot: float
    log_pot: float

    @property
    def bot(self) -> float:
        return float(np.exp(self.log_bot))

    @property
    def pot(self) -> float:
        return float(np.exp(self.log_pot))


@dataclass
class InnerGradients:
    alpha: List[LayerGradient]
    beta: List[LayerGradient]

    def flat(self) -> List[np.ndarray]:
        """InnerModel.parameters() と同じ順序の勾配リスト。"""
        out: List[np.ndarray] = []
        for g in self.alpha + self.beta:
            out.extend([g.weights, g.bias])
        return out


@dataclass
class _Pass:
    logit: np.ndarray
    intercept: np.ndarray
    slope: np.ndarray
    trace_alpha: ForwardTrace
    trace_beta: ForwardTrace


class InnerModel:
    """
    logit P(Y=1 | X, Z) = F_L(Z; α) + F_L(Z; β)·X

    net_alpha と net_beta は同じ構造で、最終層は出力1の Linear。
    """

    def __init__(self, net_alpha: DenseNetwork, net_beta: DenseNetwork):
        if net_alpha.dims != net_beta.dims:
            raise ConfigurationError(
                f"2つのネットワークの構造が異なります: "
                f"{net_alpha.dims} / {net_beta.dims}"
            )
        if net_alpha.activations != net_beta.activations:
            raise ConfigurationError("2つのネットワークの活性化関数が異なります。")
        for net in (net_alpha, net_beta):
            last = net.layers[-1]
            if last.out_dim != 1 or last.activation is not Activation.LINEAR:
                raise ConfigurationError(
                    "最終層は出力1の Linear 層である必要があります。"
                )
        self.net_alpha = net_alpha
        self.net_beta = net_beta

    @classmethod
    def build(
        cls,
        p: int,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        dropout_rates: Optional[Sequence[float]] = None,
        scheme: InitScheme = InitScheme(),
        seed: int = 0,
    ) -> "InnerModel":
        """
        隠れ層 ReLU、出力層1ニューロン Linear の INNER モデルを作る。

        Args:
            p: 共変量の次元 (入力層のニューロン数)。
            hidden: 隠れ層のニューロン数 (例: (250, 125))。
            dropout_rates: 隠れ層ごとの dropout 率。出力層は常に0。
            scheme: 初期化スキーム。
            seed: α, β それぞれに派生シードを割り当てる元のシード。
        """
        hidden = [int(h) for h in hidden]
        dims = [int(p)] + hidden + [1]
        activations = [Activation.RELU] * len(hidden) + [Activation.LINEAR]
        if dropout_rates is None:
            dropout_rates = [0.0] * len(hidden)
        if len(dropout_rates) != len(hidden):
            raise ConfigurationError(
                "dropout_rates の長さは隠れ層の数と一致する必要があります。"
            )
        rates = [float(r) for r in dropout_rates] + [0.0]
        return cls(
            init_network(
                dims, activations, rates, scheme,
                derive_seed(seed, "init:alpha"),
            ),
            init_network(
                dims, activations, rates, scheme,
                derive_seed(seed, "init:beta"),
            ),
        )

    # --- 構造 ---
    @property
    def input_dim(self) -> int:
        return self.net_alpha.input_dim

    @property
    def architecture(self) -> Dict[str, Any]:
        return {
            "dims": self.net_alpha.dims,
            "activations": [a.value for a in self.net_alpha.activations],
            "dropout_rates": self.net_alpha.dropout_rates,
        }

    def parameters(self) -> List[np.ndarray]:
        return self.net_alpha.parameters() + self.net_beta.parameters()

    def copy(self) -> "InnerModel":
        return InnerModel(self.net_alpha.copy(), self.net_beta.copy())

    # --- 評価 ---
    def _pass(
        self,
        cohort: Cohort,
        mode: Mode = Mode.EVAL,
        rng: Optional[np.random.Generator] = None,
    ) -> _Pass:
        if cohort.p != self.input_dim:
            raise ContractError(
                f"共変量の次元 {cohort.p} がモデルの入力次元 "
                f"{self.input_dim} と一致しません。"
            )
        a, trace_a = self.net_alpha.forward(cohort.covariates, mode, rng)
        b, trace_b = self.net_beta.forward(cohort.covariates, mode, rng)
        a = a[:, 0]
        b = b[:, 0]
        return _Pass(a + b * cohort.pain, a, b, trace_a, trace_b)

    def logits(self, cohort: Cohort) -> np.ndarray:
        """Eval モードの線形予測子 a + b·x。"""
        return self._pass(cohort).logit

    def predict(
        self, data: Union[Subject, Cohort]
    ) -> Union[float, np.ndarray]:
        """
        P(Y=1 | X, Z) を返す。Subject なら float、Cohort なら配列。
        """
        single = isinstance(data, Subject)
        cohort = Cohort.from_subjects([data]) if single else data
        fw = self._pass(cohort)
        probs = inner_probability(fw.intercept, fw.slope, cohort.pain)
        return float(probs[0]) if single else probs

    def tendency_arrays(
        self, covariates: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(log_bot, log_pot) の配列を返す。"""
        z = np.asarray(covariates, dtype=np.float64)
        if z.ndim == 1:
            z = z.reshape(1, -1)
        if z.shape[1] != self.input_dim:
            raise ContractError(
                f"共変量の次元 {z.shape[1]} がモデルの入力次元 "
                f"{self.input_dim} と一致しません。"
            )
        return (
            self.net_alpha.predict(z)[:, 0],
            self.net_beta.predict(z)[:, 0],
        )

    def tendency(self, covariates: Sequence[float]) -> TendencyScore:
        log_bot, log_pot = self.tendency_arrays(
            np.asarray(covariates, dtype=np.float64).reshape(1, -1)
        )
        return TendencyScore(float(log_bot[0]), float(log_pot[0]))

    # --- 損失と勾配 ---
    def batch_loss(self, cohort: Cohort) -> float:
        """
        交差エントロピーの和 −Σ[y log p + (1−y) log(1−p)]。
        log(1 + e^z) − y·z の形で評価するので p が 0/1 に近くても有限。
        """
        y = cohort.require_labels()
        z = np.clip(self.logits(cohort), -LOGIT_CLAMP, LOGIT_CLAMP)
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    def mean_loss(self, cohort: Cohort) -> float:
        return self.batch_loss(cohort) / max(len(cohort), 1)

    def batch_gradients(
        self,
        cohort: Cohort,
        mode: Mode = Mode.EVAL,
        rng: Optional[np.random.Generator] = None,
    ) -> InnerGradients:
        """
        dL/d(logit_i) = p_i − y_i を α 側へ、(p_i − y_i)·x_i を β 側へ
        逆伝播し、バッチで和をとった勾配を返す。
        """
        y = cohort.require_labels()
        fw = self._pass(cohort, mode, rng)
        residual = expit(fw.logit) - y
        grads_alpha, _ = self.net_alpha.backward(
            fw.trace_alpha, residual[:, None]
        )
        grads_beta, _ = self.net_beta.backward(
            fw.trace_beta, (residual * cohort.pain)[:, None]
        )
        return InnerGradients(grads_alpha, grads_beta)

    # --- 直列化 ---
    def to_dict(self, schema_hash: Optional[str] = None) -> Dict[str, Any]:
        return {
            "architecture": self.architecture,
            "net_alpha": self.net_alpha.to_dict(),
            "net_beta": self.net_beta.to_dict(),
            "covariate_schema_hash": schema_hash,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InnerModel":
        return cls(
            DenseNetwork.from_dict(data["net_alpha"]),
            DenseNetwork.from_dict(data["net_beta"]),
        )


def make_logistic_baseline(
    p: int, scheme: InitScheme = InitScheme(), seed: int = 0
) -> InnerModel:
    """
    1層・線形活性化の特別な場合:
    logit = Zᵀw_α + b_α + (Zᵀw_β + b_β)·X
    """
    if int(p) < 1:
        raise ConfigurationError(f"p は1以上が必要です: {p}")
    return InnerModel.build(p, hidden=(), scheme=scheme, seed=seed)


def save_model(
    path: str, model: InnerModel, schema_hash: Optional[str] = None
) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_dict(schema_hash), f)
    logger.info("wrote model to %s", path)


def load_model(path: str) -> Tuple[InnerModel, Optional[str]]:
    """モデルと covariate_schema_hash を読み込む。"""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if data.get("kind") == "ensemble":
        raise ContractError(
            f"{path} はアンサンブルです。load_ensemble を使ってください。"
        )
    return InnerModel.from_dict(data), data.get("covariate_schema_hash")
