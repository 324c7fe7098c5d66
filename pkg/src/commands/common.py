# common.py
import logging
import os
from dataclasses import dataclass
from typing import Callable

from logic.Cohort import Cohort
from logic.CohortData import (
    CovariateSchema,
    FittedTransform,
    ImputationMode,
    RawTable,
    infer_schema,
    load_cohort,
    prepare_splits,
    split,
)
from logic.InnerModel import (
    DEFAULT_HIDDEN,
    InnerModel,
    make_logistic_baseline,
)
from logic.RunConfig import RunConfig
from logic.errors import ConfigurationError, ContractError
from logic.util.derive_seed import derive_seed

logger = logging.getLogger(__name__)


def prepare_output(cfg: RunConfig) -> str:
    """出力ディレクトリを作り、run_config.json を書き出す。"""
    os.makedirs(cfg.out, exist_ok=True)
    cfg.save()
    return cfg.out


def require(value, flag: str):
    if value is None:
        raise ConfigurationError(f"{flag} を指定してください。")
    return value


def load_schema(cfg: RunConfig, data_path: str) -> CovariateSchema:
    if cfg.schema is not None:
        return CovariateSchema.load(cfg.schema)
    return infer_schema(data_path, cfg.pain_column, cfg.label_column)


@dataclass
class PreparedData:
    """学習用・検証用・テスト用の Cohort と、訓練側で当てはめた変換。"""

    fit_set: Cohort
    validation_set: Cohort
    test_set: Cohort
    transform: FittedTransform
    schema: CovariateSchema


def prepare_training_data(cfg: RunConfig) -> PreparedData:
    """
    CSV を読み込み、訓練/テストに分け (--test-data があればそれを使う)、
    補完・標準化したあと訓練側から検証集合を切り出す。
    """
    data_path = require(cfg.data, "--data")
    schema = load_schema(cfg, data_path)
    table: RawTable = load_cohort(data_path, schema)
    if cfg.test_data is not None:
        train_table, test_table = table, load_cohort(cfg.test_data, schema)
    else:
        train_table, test_table = split(
            table, cfg.train_fraction, derive_seed(cfg.seed, "split")
        )
    train_all, test_set, transform = prepare_splits(
        train_table, test_table, ImputationMode(cfg.imputation)
    )
    fit_set, validation_set = split(
        train_all,
        1.0 - cfg.validation_fraction,
        derive_seed(cfg.seed, "validation"),
    )
    logger.info(
        "rows: fit %d, validation %d, test %d",
        len(fit_set),
        len(validation_set),
        len(test_set),
    )
    return PreparedData(fit_set, validation_set, test_set, transform, schema)


def model_factory(cfg: RunConfig, p: int) -> Callable[[int], InnerModel]:
    """シードを受け取って初期モデルを作る関数。"""
    hidden = cfg.hidden(DEFAULT_HIDDEN)
    dropout = cfg.dropout_rates()
    scheme = cfg.init_scheme()

    def build(seed: int) -> InnerModel:
        if cfg.baseline == "logistic":
            return make_logistic_baseline(p, scheme, seed)
        return InnerModel.build(p, hidden, dropout, scheme, seed)

    return build


def check_schema_hash(expected: str, found: str, path: str) -> None:
    if found is not None and expected != found:
        raise ContractError(
            f"{path} の共変量スキーマ ({found}) が変換のスキーマ "
            f"({expected}) と一致しません。"
        )
