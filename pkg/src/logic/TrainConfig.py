# TrainConfig.py
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict

from logic.errors import ConfigurationError


class OptimizerKind(str, Enum):
    SGD = "sgd"
    ADAGRAD = "adagrad"
    ADADELTA = "adadelta"
    ADAM = "adam"


@dataclass(frozen=True)
class OptimizerParams:
    """
    適応的最適化手法の定数。値は各手法で一般的な既定値。
    """

    adagrad_eps: float = 1e-8
    adadelta_decay: float = 0.95
    adadelta_eps: float = 1e-6
    adadelta_rate: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """
    ミニバッチ SGD の設定。

    Attributes:
        learning_rate: 学習率 η (損失の「和」に対する値)。
        batch_size: ミニバッチサイズ M。
        max_epochs: 最大エポック数。
        gap_delta: 検証損失 − 訓練損失 がこの値を超えたら停止する (Δ)。
        optimizer: 更新則。
        optimizer_params: 適応的手法の定数。
        seed: シャッフルと dropout の乱数シード。
    """

    learning_rate: float = 0.01
    batch_size: int = 64
    max_epochs: int = 200
    gap_delta: float = 1e-2
    optimizer: OptimizerKind = OptimizerKind.SGD
    optimizer_params: OptimizerParams = field(
        default_factory=OptimizerParams
    )
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "optimizer", OptimizerKind(self.optimizer))
        if not self.learning_rate >= 0.0:
            raise ConfigurationError(
                f"learning_rate は0以上が必要です: {self.learning_rate}"
            )
        if int(self.batch_size) < 1:
            raise ConfigurationError(
                f"batch_size は正の整数が必要です: {self.batch_size}"
            )
        if int(self.max_epochs) < 1:
            raise ConfigurationError(
                f"max_epochs は正の整数が必要です: {self.max_epochs}"
            )
        if not self.gap_delta > 0.0:
            raise ConfigurationError(
                f"gap_delta は正の値が必要です: {self.gap_delta}"
            )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["optimizer"] = self.optimizer.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"未知の設定キー: {sorted(unknown)}")
        values = dict(data)
        if isinstance(values.get("optimizer_params"), dict):
            values["optimizer_params"] = OptimizerParams(
                **values["optimizer_params"]
            )
        return cls(**values)
