# RunConfig.py
import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Optional, Tuple

from logic.DenseNetwork import BiasInit, InitScheme, WeightInit
from logic.TrainConfig import OptimizerKind, TrainConfig
from logic.errors import ConfigurationError

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "train", "evaluate", "tune", "benchmark", "subgroup")
RUN_CONFIG_FILE = "run_config.json"


@dataclass(frozen=True)
class RunConfig:
    """
    1回のコマンド実行の設定。すべて JSON に直列化でき、保存した
    RunConfig を読み込んで再実行すると同じ出力になる。
    学習系の None は「コマンドごとの既定値を使う」を意味する。
    """

    command: str
    seed: int = 0
    out: str = "out"
    threads: int = 1
    # --- 入力 ---
    data: Optional[str] = None
    test_data: Optional[str] = None
    schema: Optional[str] = None
    transform: Optional[str] = None
    model: Optional[str] = None
    pain_column: str = "x"
    label_column: str = "y"
    train_fraction: float = 0.7
    validation_fraction: float = 0.2
    imputation: str = "train_fitted"
    # --- シミュレーション ---
    scenario: str = "correct"
    n: int = 5000
    p: int = 8
    noise: int = 0
    snr: float = 3.2
    calib_sample_size: int = 40_000
    # --- モデルと学習 ---
    arch: Optional[str] = None
    dropout: Optional[str] = None
    baseline: str = "none"
    init: str = "glorot_uniform"
    bias: str = "zeros"
    optimizer: str = "sgd"
    learning_rate: Optional[float] = None
    batch_size: Optional[int] = None
    max_epochs: Optional[int] = None
    gap_delta: Optional[float] = None
    ensemble: int = 0
    sampling: str = "undersample"
    # --- tune / benchmark / subgroup ---
    lr_grid: Optional[str] = None
    reps: int = 10
    grid_snr: Optional[str] = None
    grid_noise: Optional[str] = None
    grid_cells: Optional[str] = None
    grid_mode: str = "blocks"
    reference_grid: bool = False
    study: Optional[str] = None
    q: float = 0.2

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"未知のコマンドです: {self.command}")
        if self.threads == 0:
            raise ConfigurationError("threads に0は指定できません。")
        if self.reps < 1:
            raise ConfigurationError(f"reps は1以上が必要です: {self.reps}")
        if self.ensemble < 0:
            raise ConfigurationError("ensemble は0以上が必要です。")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"未知の設定キー: {sorted(unknown)}")
        return cls(**data)

    def override(self, data: Dict[str, Any]) -> "RunConfig":
        """JSON の値でフラグの値を上書きする。"""
        known = {f.name for f in fields(self)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"未知の設定キー: {sorted(unknown)}")
        return replace(self, **data)

    # --- 派生値 ---
    def hidden(self, default: Tuple[int, ...]) -> Tuple[int, ...]:
        """
        --arch "250,125,1" から隠れ層 (250, 125) を取り出す。
        末尾は出力層で1でなければならない。
        """
        if self.baseline == "logistic":
            return ()
        if self.arch is None:
            return tuple(default)
        dims = parse_ints(self.arch)
        if not dims or dims[-1] != 1:
            raise ConfigurationError(
                f"--arch の最後は出力層の1が必要です: {self.arch}"
            )
        return tuple(dims[:-1])

    def dropout_rates(self) -> Optional[Tuple[float, ...]]:
        if self.dropout is None or self.baseline == "logistic":
            return None
        return tuple(parse_floats(self.dropout))

    def init_scheme(self) -> InitScheme:
        return InitScheme(WeightInit(self.init), BiasInit(self.bias))

    def train_config(self, default: TrainConfig) -> TrainConfig:
        """指定のあるフラグだけ default を上書きした TrainConfig。"""
        overrides: Dict[str, Any] = {
            "optimizer": OptimizerKind(self.optimizer),
            "seed": self.seed,
        }
        for name in ("learning_rate", "batch_size", "max_epochs", "gap_delta"):
            value = getattr(self, name)
            if value is not None:
                overrides[name] = value
        return replace(default, **overrides)

    def save(self, out_dir: Optional[str] = None) -> str:
        path = os.path.join(out_dir or self.out, RUN_CONFIG_FILE)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        return path


def load_run_config(path: str) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} は JSON オブジェクトが必要です。")
    return data


def parse_ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"整数のリストが必要です: {text}") from exc


def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"数値のリストが必要です: {text}") from exc


def parse_cells(text: str) -> List[Tuple[int, int]]:
    """"8x5000,16x10000" → [(8, 5000), (16, 10000)] (共変量数 x サンプル数)"""
    cells = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            p, n = item.lower().split("x")
            cells.append((int(p), int(n)))
        except ValueError as exc:
            raise ConfigurationError(
                f"セルは <共変量数>x<サンプル数> で指定します: {item}"
            ) from exc
    return cells
