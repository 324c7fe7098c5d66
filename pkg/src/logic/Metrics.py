# Metrics.py
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.stats import rankdata

from logic.errors import ContractError, UndefinedMetricError

# 表に並べる指標の順序
METRIC_NAMES = (
    "c_statistic",
    "accuracy",
    "sensitivity",
    "specificity",
    "balance_accuracy",
)

DEFAULT_THRESHOLD = 0.5


def _as_binary(scores: Sequence[float], labels: Sequence[int]):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ContractError(
            f"scores ({s.shape[0]}) と labels ({y.shape[0]}) の長さが違います。"
        )
    if not np.all((y == 0) | (y == 1)):
        raise ContractError("labels は 0/1 が必要です。")
    return s, y.astype(bool)


def c_statistic(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    ランダムな陽性が陰性より高いスコアを持つ確率 (同点は 1/2)。
    中間順位を使った順位和で O(n log n) で計算する。
    """
    s, pos = _as_binary(scores, labels)
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "C統計量には陽性と陰性の両方が必要です。"
        )
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class MetricReport:
    c_statistic: float
    accuracy: float
    sensitivity: float
    specificity: float
    balance_accuracy: float
    threshold: float
    n_pos: int
    n_neg: int
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def classify_and_score(
    scores: Sequence[float],
    labels: Sequence[int],
    threshold: float = DEFAULT_THRESHOLD,
) -> MetricReport:
    """
    score > threshold を陽性と判定し、混同行列から各指標を求める。
    threshold ちょうどのスコアは陰性。
    """
    if not 0.0 < threshold < 1.0:
        raise ContractError(f"threshold は (0, 1) が必要です: {threshold}")
    s, pos = _as_binary(scores, labels)
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            "感度・特異度には陽性と陰性の両方が必要です。"
        )
    called = s > threshold
    tp = int(np.sum(called & pos))
    fn = n_pos - tp
    fp = int(np.sum(called & ~pos))
    tn = n_neg - fp
    sensitivity = tp / n_pos
    specificity = tn / n_neg
    return MetricReport(
        c_statistic=c_statistic(s, pos.astype(int)),
        accuracy=(tp + tn) / (n_pos + n_neg),
        sensitivity=sensitivity,
        specificity=specificity,
        balance_accuracy=(sensitivity + specificity) / 2.0,
        threshold=float(threshold),
        n_pos=n_pos,
        n_neg=n_neg,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def prevalence_threshold(labels: Sequence[int]) -> float:
    """陽性割合を閾値として使う (2つ目の運用点)。"""
    y = np.asarray(labels, dtype=np.float64)
    prevalence = float(np.mean(y))
    if not 0.0 < prevalence < 1.0:
        raise UndefinedMetricError("有病率が 0 または 1 です。")
    return prevalence


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    se: float


@dataclass
class AggregateReport:
    """R 回の繰り返しにわたる各指標の平均と標準誤差。"""

    metrics: Dict[str, MetricSummary]
    n_reps: int
    threshold: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_reps": self.n_reps,
            "threshold": self.threshold,
            "metrics": {k: asdict(v) for k, v in self.metrics.items()},
        }


def summarize(values: Sequence[float]) -> MetricSummary:
    """平均と SE = 標本標準偏差 (R−1) / √R。"""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ContractError("SE の計算には2回以上の繰り返しが必要です。")
    return MetricSummary(
        mean=float(v.mean()),
        se=float(v.std(ddof=1) / np.sqrt(v.size)),
    )


def aggregate(reports: Sequence[MetricReport]) -> AggregateReport:
    reports = list(reports)
    if len(reports) < 2:
        raise ContractError("aggregate には2つ以上のレポートが必要です。")
    thresholds = {r.threshold for r in reports}
    if len(thresholds) != 1:
        raise ContractError(
            f"閾値が混在しています: {sorted(thresholds)}"
        )
    metrics = {
        name: summarize([getattr(r, name) for r in reports])
        for name in METRIC_NAMES
    }
    return AggregateReport(
        metrics=metrics, n_reps=len(reports), threshold=reports[0].threshold
    )


def evaluate_scores(
    scores: Sequence[float],
    labels: Sequence[int],
    thresholds: Sequence[float],
) -> List[MetricReport]:
    return [classify_and_score(scores, labels, t) for t in thresholds]
