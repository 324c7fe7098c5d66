# BalancedEnsemble.py
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from logic.Cohort import Cohort, Subject
from logic.InnerModel import InnerModel
from logic.TrainConfig import TrainConfig
from logic.Trainer import TrainLog, train
from logic.errors import ContractError
from logic.util.derive_seed import derive_rng, derive_seed

logger = logging.getLogger(__name__)

DEFAULT_K = 5


class SamplingStrategy(str, Enum):
    NONE = "none"
    UNDERSAMPLE = "undersample"
    OVERSAMPLE = "oversample"


def _class_indices(cohort: Cohort) -> Tuple[np.ndarray, np.ndarray]:
    y = cohort.require_labels()
    cases = np.flatnonzero(y == 1)
    controls = np.flatnonzero(y == 0)
    if cases.size == 0 or controls.size == 0:
        raise ContractError("陽性と陰性の両方が必要です。")
    return cases, controls


def balanced_subsample(train_set: Cohort, seed: int) -> np.ndarray:
    """
    陽性をすべて残し、同数の陰性を非復元で抽出したインデックス (昇順)。

    Args:
        train_set: ラベル付きの訓練集合 (陽性 <= 陰性)。
        seed: 抽出のシード。

    Returns:
        有病率がちょうど 0.5 になるインデックス集合。
    """
    cases, controls = _class_indices(train_set)
    if cases.size > controls.size:
        raise ContractError(
            f"陽性 ({cases.size}) が陰性 ({controls.size}) より多いです。"
        )
    drawn = derive_rng(seed, "subsample").choice(
        controls, size=cases.size, replace=False
    )
    return np.sort(np.concatenate([cases, drawn]))


def oversample_cases(train_set: Cohort, seed: int) -> np.ndarray:
    """陽性を復元抽出で陰性と同数まで増やしたインデックス。"""
    cases, controls = _class_indices(train_set)
    if cases.size > controls.size:
        raise ContractError(
            f"陽性 ({cases.size}) が陰性 ({controls.size}) より多いです。"
        )
    extra = derive_rng(seed, "oversample").choice(
        cases, size=controls.size - cases.size, replace=True
    )
    return np.sort(np.concatenate([controls, cases, extra]))


def sample_indices(
    train_set: Cohort, strategy: SamplingStrategy, seed: int
) -> np.ndarray:
    strategy = SamplingStrategy(strategy)
    if strategy is SamplingStrategy.UNDERSAMPLE:
        return balanced_subsample(train_set, seed)
    if strategy is SamplingStrategy.OVERSAMPLE:
        return oversample_cases(train_set, seed)
    return np.arange(len(train_set))


@dataclass
class BalancedEnsemble:
    """K 個のモデルと、それぞれの学習に使ったインデックス集合。"""

    models: List[InnerModel] = field(default_factory=list)
    index_sets: List[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.models)

    def predict(
        self, data: Union[Subject, Cohort]
    ) -> Union[float, np.ndarray]:
        return ensemble_predict(self, data)


def ensemble_predict(
    ensemble: BalancedEnsemble, data: Union[Subject, Cohort]
) -> Union[float, np.ndarray]:
    """K 個のモデルの予測確率の算術平均。"""
    if not ensemble.models:
        raise ContractError("アンサンブルが空です。")
    dims = {m.input_dim for m in ensemble.models}
    if len(dims) != 1:
        raise ContractError(f"モデルの入力次元が揃っていません: {dims}")
    probs = [m.predict(data) for m in ensemble.models]
    if isinstance(data, Subject):
        return float(np.mean(probs))
    return np.mean(np.vstack(probs), axis=0)


def _fit_member(
    i: int,
    model_factory: Callable[[int], InnerModel],
    train_set: Cohort,
    validation_set: Cohort,
    cfg: TrainConfig,
    strategy: SamplingStrategy,
    seed: int,
) -> Tuple[InnerModel, np.ndarray, TrainLog]:
    index = sample_indices(
        train_set, strategy, derive_seed(seed, "ensemble:sample", i)
    )
    model = model_factory(derive_seed(seed, "ensemble:init", i))
    member_cfg = replace(cfg, seed=derive_seed(seed, "ensemble:train", i))
    trained, log = train(
        model, train_set.subset(index), validation_set, member_cfg
    )
    logger.info("ensemble member %d: %d training rows", i + 1, index.size)
    return trained, index, log


def fit_balanced_ensemble(
    model_factory: Callable[[int], InnerModel],
    train_set: Cohort,
    validation_set: Cohort,
    cfg: TrainConfig,
    k: int = DEFAULT_K,
    seed: int = 0,
    strategy: SamplingStrategy = SamplingStrategy.UNDERSAMPLE,
    n_jobs: int = 1,
) -> Tuple[BalancedEnsemble, List[TrainLog]]:
    """
    サブサンプルを K 回作り、それぞれで新しいモデルを学習する。

    Args:
        model_factory: シードを受け取り初期モデルを返す関数。
        train_set: 訓練集合。
        validation_set: 検証集合 (サブサンプリングしない)。
        cfg: 学習設定。
        k: モデル数。
        seed: サブサンプルと初期化のシード。
        strategy: サンプリング方法。
        n_jobs: 並列ジョブ数 (joblib)。

    Returns:
        (BalancedEnsemble, 各モデルの TrainLog)。
    """
    if k < 1:
        raise ContractError(f"k は1以上が必要です: {k}")
    members = Parallel(n_jobs=n_jobs)(
        delayed(_fit_member)(
            i, model_factory, train_set, validation_set, cfg, strategy, seed
        )
        for i in range(k)
    )
    ensemble = BalancedEnsemble(
        models=[m for m, _, _ in members],
        index_sets=[idx for _, idx, _ in members],
    )
    return ensemble, [log for _, _, log in members]


def save_ensemble(
    path: str, ensemble: BalancedEnsemble, schema_hash: Optional[str] = None
) -> None:
    data = {
        "kind": "ensemble",
        "models": [m.to_dict(schema_hash) for m in ensemble.models],
        "index_sets": [[int(i) for i in idx] for idx in ensemble.index_sets],
        "covariate_schema_hash": schema_hash,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f)
    logger.info("wrote ensemble of %d models to %s", len(ensemble), path)


def load_ensemble(path: str) -> Tuple[BalancedEnsemble, Optional[str]]:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if data.get("kind") != "ensemble":
        raise ContractError(f"{path} はアンサンブルではありません。")
    ensemble = BalancedEnsemble(
        models=[InnerModel.from_dict(m) for m in data["models"]],
        index_sets=[
            np.asarray(idx, dtype=np.int64) for idx in data["index_sets"]
        ],
    )
    return ensemble, data.get("covariate_schema_hash")


def load_predictor(
    path: str,
) -> Tuple[Union[InnerModel, BalancedEnsemble], Optional[str]]:
    """単一モデルとアンサンブルのどちらのファイルも読み込む。"""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if data.get("kind") == "ensemble":
        return load_ensemble(path)
    return InnerModel.from_dict(data), data.get("covariate_schema_hash")
