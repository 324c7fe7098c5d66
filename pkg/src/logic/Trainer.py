# Trainer.py
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed

from logic.Cohort import Cohort
from logic.DenseNetwork import Mode
from logic.InnerModel import InnerModel
from logic.Metrics import c_statistic
from logic.Optimizer import STEP_FUNCTIONS, make_state
from logic.TrainConfig import TrainConfig
from logic.errors import (
    ConfigurationError,
    DivergenceError,
    SearchFailedError,
    UndefinedMetricError,
)
from logic.util.derive_seed import derive_rng, derive_seed

logger = logging.getLogger(__name__)

LR_GRID_LOW = 0.005
LR_GRID_HIGH = 0.1
LR_GRID_POINTS = 20


class StopReason(str, Enum):
    GAP_EXCEEDED = "gap_exceeded"
    MAX_EPOCHS = "max_epochs"


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    validation_loss: float


@dataclass
class TrainLog:
    """
    エポックごとの (訓練損失, 検証損失)。損失は1サンプルあたりの平均。
    """

    records: List[EpochRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None

    @property
    def epochs(self) -> int:
        return len(self.records)

    @property
    def final_train_loss(self) -> float:
        return self.records[-1].train_loss

    @property
    def final_validation_loss(self) -> float:
        return self.records[-1].validation_loss

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stop_reason": (
                None if self.stop_reason is None else self.stop_reason.value
            ),
            "records": [asdict(r) for r in self.records],
        }


BatchIterator = Callable[[int, int, np.random.Generator], Iterator[np.ndarray]]


def iterate_minibatches(
    n: int, batch_size: int, rng: np.random.Generator
) -> Iterator[np.ndarray]:
    """
    1エポック分のミニバッチのインデックスを非復元で返す。
    最後の端数バッチ (n mod M) も捨てない。
    """
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        stop = start + batch_size
        yield order[start:stop]


def train(
    model: InnerModel,
    train_set: Cohort,
    validation_set: Cohort,
    cfg: TrainConfig,
    batches: BatchIterator = iterate_minibatches,
) -> Tuple[InnerModel, TrainLog]:
    """
    ミニバッチ SGD (またはその適応版) で INNER モデルを学習する。

    各エポックで訓練集合をシャッフルして非復元のミニバッチに分け、
    バッチごとに1回更新したあと、全体の訓練損失・検証損失を記録する。
    検証損失 − 訓練損失 > Δ になるか max_epochs に達したら停止し、
    最後に完了したエポックのパラメータを返す。入力モデルは変更しない。

    Args:
        model: 初期モデル。
        train_set: ラベル付きの訓練集合。
        validation_set: ラベル付きの検証集合 (訓練集合と重複しないこと)。
        cfg: 学習設定。
        batches: ミニバッチのインデックスを返すイテレータ。

    Returns:
        (学習済みモデル, TrainLog)。
    """
    if len(train_set) == 0 or len(validation_set) == 0:
        raise ConfigurationError("訓練集合または検証集合が空です。")
    train_set.require_labels()
    validation_set.require_labels()
    if cfg.batch_size > len(train_set):
        raise ConfigurationError(
            f"batch_size {cfg.batch_size} が訓練集合のサイズ "
            f"{len(train_set)} を超えています。"
        )

    trained = model.copy()
    params = trained.parameters()
    state = make_state(cfg.optimizer, params)
    step = STEP_FUNCTIONS[cfg.optimizer]
    order_rng = derive_rng(cfg.seed, "train:order")
    dropout_rng = derive_rng(cfg.seed, "train:dropout")
    log = TrainLog()

    for epoch in range(1, cfg.max_epochs + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            for index in batches(len(train_set), cfg.batch_size, order_rng):
                grads = trained.batch_gradients(
                    train_set.subset(index), Mode.TRAIN, dropout_rng
                )
                step(params, grads.flat(), state, cfg)
            train_loss = _safe_mean_loss(trained, train_set)
            validation_loss = _safe_mean_loss(trained, validation_set)

        if not (np.isfinite(train_loss) and np.isfinite(validation_loss)):
            logger.warning("training diverged at epoch %d", epoch)
            raise DivergenceError(epoch, log)
        log.records.append(EpochRecord(epoch, train_loss, validation_loss))
        logger.debug(
            "epoch %d: train %.6f, validation %.6f",
            epoch,
            train_loss,
            validation_loss,
        )
        if validation_loss - train_loss > cfg.gap_delta:
            log.stop_reason = StopReason.GAP_EXCEEDED
            break
    else:
        log.stop_reason = StopReason.MAX_EPOCHS

    logger.info(
        "trained %d epochs (%s): train %.4f, validation %.4f",
        log.epochs,
        log.stop_reason.value,
        log.final_train_loss,
        log.final_validation_loss,
    )
    return trained, log


def _safe_mean_loss(model: InnerModel, cohort: Cohort) -> float:
    try:
        return model.mean_loss(cohort)
    except ArithmeticError:
        # 非有限のパラメータでは forward が失敗する
        return float("nan")


# --- 学習率のグリッドサーチ ---
@dataclass(frozen=True)
class GridPoint:
    learning_rate: float
    validation_loss: float
    c_statistic: Optional[float]
    epochs: int
    stop_reason: Optional[str]
    diverged: bool = False


def default_lr_grid() -> List[float]:
    """0.005 から 0.1 までの等間隔20点。"""
    return [
        float(v)
        for v in np.linspace(LR_GRID_LOW, LR_GRID_HIGH, LR_GRID_POINTS)
    ]


def _evaluate_grid_point(
    index: int,
    learning_rate: float,
    model_factory: Callable[[int], InnerModel],
    train_set: Cohort,
    validation_set: Cohort,
    cfg: TrainConfig,
) -> GridPoint:
    model = model_factory(derive_seed(cfg.seed, "grid", index))
    point_cfg = replace(
        cfg,
        learning_rate=learning_rate,
        seed=derive_seed(cfg.seed, "grid:train", index),
    )
    try:
        trained, log = train(model, train_set, validation_set, point_cfg)
    except DivergenceError as exc:
        return GridPoint(
            learning_rate, float("inf"), None, exc.epoch, None, True
        )
    try:
        auc = c_statistic(
            trained.predict(validation_set), validation_set.labels
        )
    except UndefinedMetricError:
        auc = None
    return GridPoint(
        learning_rate,
        log.final_validation_loss,
        auc,
        log.epochs,
        log.stop_reason.value,
    )


def grid_search_lr(
    model_factory: Callable[[int], InnerModel],
    train_set: Cohort,
    validation_set: Cohort,
    grid: Optional[Sequence[float]] = None,
    cfg: TrainConfig = TrainConfig(),
    n_jobs: int = 1,
) -> Tuple[float, List[GridPoint]]:
    """
    グリッドの各学習率で新しいモデルを学習し、最終検証損失が最小の η を返す。
    同点なら小さい η を選ぶ。

    Args:
        model_factory: シードを受け取り初期モデルを返す関数。
        train_set: 訓練集合。
        validation_set: 検証集合。
        grid: 学習率の候補 (省略時は default_lr_grid())。
        cfg: 学習率以外の学習設定。
        n_jobs: 並列ジョブ数 (joblib)。

    Returns:
        (最良の学習率, 各グリッド点の結果)。
    """
    grid = default_lr_grid() if grid is None else [float(g) for g in grid]
    if not grid:
        raise ConfigurationError("グリッドが空です。")

    results = Parallel(n_jobs=n_jobs)(
        delayed(_evaluate_grid_point)(
            i, eta, model_factory, train_set, validation_set, cfg
        )
        for i, eta in enumerate(grid)
    )
    finite = [r for r in results if not r.diverged]
    if not finite:
        raise SearchFailedError("すべての学習率で発散しました。", results)
    best = min(finite, key=lambda r: (r.validation_loss, r.learning_rate))
    logger.info(
        "best learning rate %.6g (validation loss %.6f)",
        best.learning_rate,
        best.validation_loss,
    )
    return best.learning_rate, list(results)
