# Benchmark.py
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from logic.CohortData import split
from logic.DenseNetwork import BiasInit, InitScheme, WeightInit
from logic.InnerModel import InnerModel, make_logistic_baseline
from logic.Metrics import (
    AggregateReport,
    MetricReport,
    aggregate,
    classify_and_score,
)
from logic.Simulator import SimConfig, generate
from logic.TrainConfig import OptimizerKind, TrainConfig
from logic.Trainer import train
from logic.errors import InnerError
from logic.util.derive_seed import derive_seed

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.8
# 訓練側をさらに分けて停止判定用の検証集合を作る
FIT_FRACTION = 0.8

SIMULATION_HIDDEN = (200, 10)
SIMULATION_TRAIN = TrainConfig(
    learning_rate=0.0014, batch_size=64, max_epochs=200, gap_delta=0.05
)


@dataclass(frozen=True)
class MethodConfig:
    """
    ベンチマークで学習するモデル1種類。hidden が空なら一層の
    ロジスティックモデル。
    """

    name: str
    hidden: Tuple[int, ...] = SIMULATION_HIDDEN
    dropout_rates: Optional[Tuple[float, ...]] = None
    scheme: InitScheme = InitScheme()
    train: TrainConfig = SIMULATION_TRAIN

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.dropout_rates is not None:
            object.__setattr__(
                self,
                "dropout_rates",
                tuple(float(r) for r in self.dropout_rates),
            )

    def build(self, p: int, seed: int) -> InnerModel:
        if not self.hidden:
            return make_logistic_baseline(p, self.scheme, seed)
        return InnerModel.build(
            p, self.hidden, self.dropout_rates, self.scheme, seed
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "hidden": list(self.hidden),
            "dropout_rates": (
                None
                if self.dropout_rates is None
                else list(self.dropout_rates)
            ),
            "init": {
                "weights": self.scheme.weights.value,
                "bias": self.scheme.bias.value,
            },
            "train": self.train.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MethodConfig":
        init = data.get("init", {})
        return cls(
            name=data["name"],
            hidden=tuple(data.get("hidden", SIMULATION_HIDDEN)),
            dropout_rates=data.get("dropout_rates"),
            scheme=InitScheme(
                WeightInit(init.get("weights", "glorot_uniform")),
                BiasInit(init.get("bias", "zeros")),
            ),
            train=TrainConfig.from_dict(
                data.get("train", SIMULATION_TRAIN.to_dict())
            ),
        )


def default_methods(
    train_cfg: TrainConfig = SIMULATION_TRAIN,
) -> List[MethodConfig]:
    """INNER と一層のロジスティックモデル。"""
    return [
        MethodConfig("inner", SIMULATION_HIDDEN, train=train_cfg),
        MethodConfig("logistic", (), train=train_cfg),
    ]


# --- 1回の繰り返し ---
@dataclass
class ReplicationResult:
    cell: int
    replication: int
    reports: Dict[str, MetricReport] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)


def run_replication(
    cfg: SimConfig,
    methods: Sequence[MethodConfig],
    seed: int,
    cell: int = 0,
    replication: int = 0,
) -> ReplicationResult:
    """
    データを生成して 80/20 に分け、各手法を学習してテスト集合で評価する。
    手法ごとの失敗は errors に記録して続行する。
    """
    result = ReplicationResult(cell, replication)
    try:
        dataset = generate(replace(cfg, seed=derive_seed(seed, "data")))
    except InnerError as exc:
        for m in methods:
            result.errors[m.name] = f"{type(exc).__name__}: {exc}"
        return result
    train_all, test = split(
        dataset.cohort, TRAIN_FRACTION, derive_seed(seed, "split")
    )
    fit_set, validation_set = split(
        train_all, FIT_FRACTION, derive_seed(seed, "validation")
    )
    for m in methods:
        try:
            model = m.build(cfg.p, derive_seed(seed, "init", m.name))
            trained, _ = train(
                model,
                fit_set,
                validation_set,
                replace(m.train, seed=derive_seed(seed, "train", m.name)),
            )
            result.reports[m.name] = classify_and_score(
                trained.predict(test), test.labels
            )
        except InnerError as exc:
            logger.warning(
                "cell %d rep %d: %s failed: %s", cell, replication, m.name, exc
            )
            result.errors[m.name] = f"{type(exc).__name__}: {exc}"
    return result


# --- グリッド全体 ---
@dataclass
class CellReport:
    config: SimConfig
    methods: Dict[str, Optional[AggregateReport]] = field(
        default_factory=dict
    )
    failures: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "methods": {
                name: None if report is None else report.to_dict()
                for name, report in self.methods.items()
            },
            "failures": list(self.failures),
        }


@dataclass
class BenchmarkReport:
    cells: List[CellReport]
    method_names: List[str]
    reps: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reps": self.reps,
            "methods": list(self.method_names),
            "cells": [c.to_dict() for c in self.cells],
        }


def _summarize_cell(
    cfg: SimConfig,
    methods: Sequence[MethodConfig],
    results: Sequence[ReplicationResult],
) -> CellReport:
    cell = CellReport(config=cfg)
    for r in results:
        cell.failures += [
            f"rep {r.replication} {name}: {msg}"
            for name, msg in sorted(r.errors.items())
        ]
    for m in methods:
        reports = [r.reports[m.name] for r in results if m.name in r.reports]
        if len(reports) < 2:
            cell.methods[m.name] = None
            cell.failures.append(
                f"{m.name}: 成功した繰り返しが {len(reports)} 回しかありません"
            )
            continue
        cell.methods[m.name] = aggregate(reports)
    return cell


def run_benchmark(
    configs: Sequence[SimConfig],
    methods: Optional[Sequence[MethodConfig]] = None,
    reps: int = 10,
    seed: int = 0,
    n_jobs: int = 1,
) -> BenchmarkReport:
    """
    各セルで reps 回の繰り返しを実行し、手法ごとに平均 (SE) を集計する。
    繰り返しはすべて joblib のワーカーで独立に実行する。

    Args:
        configs: セルごとのシミュレーション設定 (experiment_grid の結果)。
        methods: 学習する手法 (省略時は default_methods())。
        reps: セルあたりの繰り返し回数 R。
        seed: 全体のシード。
        n_jobs: 並列ジョブ数。

    Returns:
        BenchmarkReport。
    """
    methods = list(default_methods() if methods is None else methods)
    configs = list(configs)
    jobs = list(product(range(len(configs)), range(reps)))
    results = Parallel(n_jobs=n_jobs)(
        delayed(run_replication)(
            configs[c], methods, derive_seed(seed, "rep", c, r), c, r
        )
        for c, r in jobs
    )
    cells = [
        _summarize_cell(
            cfg, methods, [r for r in results if r.cell == index]
        )
        for index, cfg in enumerate(configs)
    ]
    logger.info(
        "benchmark finished: %d cells x %d reps", len(configs), reps
    )
    return BenchmarkReport(cells, [m.name for m in methods], reps)


# --- 感度分析 ---
class Study(str, Enum):
    LR_BATCH = "lr-batch"
    INIT = "init"
    OPTIMIZER = "optimizer"
    ARCHITECTURE = "architecture"


STUDY_LEARNING_RATES = (0.0075, 0.01, 0.0125)
# STUDY_LEARNING_RATES はこの値を基準とした比で base の学習率に掛ける
STUDY_REFERENCE_RATE = 0.01
STUDY_BATCH_SIZES = (32, 64, 128)
STUDY_EPOCHS = (150, 200, 250)
STUDY_FIRST_LAYER = (125, 250, 500)
STUDY_LAYER_COUNTS = (2, 3, 4, 5)


def study_settings(study: Study, base: MethodConfig) -> List[MethodConfig]:
    """感度分析で比較する設定の一覧。base の残りの設定は共通。"""
    study = Study(study)
    if study is Study.LR_BATCH:
        scale = base.train.learning_rate / STUDY_REFERENCE_RATE
        return [
            replace(
                base,
                name=f"lr={eta},batch={m},epochs={epochs}",
                train=replace(
                    base.train,
                    learning_rate=eta * scale,
                    batch_size=m,
                    max_epochs=epochs,
                ),
            )
            for eta, m, epochs in product(
                STUDY_LEARNING_RATES, STUDY_BATCH_SIZES, STUDY_EPOCHS
            )
        ]
    if study is Study.INIT:
        return [
            replace(
                base,
                name=f"{w.value},{b.value}",
                scheme=InitScheme(w, b),
            )
            for w, b in product(WeightInit, BiasInit)
        ]
    if study is Study.OPTIMIZER:
        return [
            replace(
                base, name=k.value, train=replace(base.train, optimizer=k)
            )
            for k in OptimizerKind
        ]
    # 層数 (出力層を含む) と第1層のニューロン数。以降の層は半分ずつ
    return [
        replace(
            base,
            name=f"layers={n_layers},first={first}",
            hidden=tuple(first // 2**i for i in range(n_layers - 1)),
            dropout_rates=None,
        )
        for n_layers, first in product(STUDY_LAYER_COUNTS, STUDY_FIRST_LAYER)
    ]


@dataclass
class StudyReport:
    study: Study
    cell: CellReport
    spread: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "study": self.study.value,
            "spread": self.spread,
            **self.cell.to_dict(),
        }


def c_statistic_spread(cell: CellReport) -> Optional[float]:
    """設定間の平均 C 統計量の最大 − 最小。"""
    means = [
        report.metrics["c_statistic"].mean
        for report in cell.methods.values()
        if report is not None
    ]
    if len(means) < 2:
        return None
    return float(max(means) - min(means))


def run_study(
    study: Study,
    cfg: SimConfig,
    base: Optional[MethodConfig] = None,
    reps: int = 5,
    seed: int = 0,
    n_jobs: int = 1,
) -> StudyReport:
    base = base or default_methods()[0]
    report = run_benchmark(
        [cfg], study_settings(study, base), reps, seed, n_jobs
    )
    cell = report.cells[0]
    spread = c_statistic_spread(cell)
    logger.info("%s study: C-statistic spread %s", Study(study).value, spread)
    return StudyReport(Study(study), cell, spread)
