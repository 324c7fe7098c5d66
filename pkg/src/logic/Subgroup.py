# Subgroup.py
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from logic.Cohort import PAIN_MAX, PAIN_MIN, Cohort
from logic.CohortData import CovariateKind, CovariateSchema, RawTable
from logic.InnerModel import InnerModel, TendencyScore, inner_probability
from logic.LocalFdr import fit_lfdr
from logic.errors import ContractError

logger = logging.getLogger(__name__)

DEFAULT_Q = 0.2
CROSSING_LEVEL = 0.5
PAIN_GRID = np.linspace(PAIN_MIN, PAIN_MAX, 101)


class Level(str, Enum):
    LOW = "low"
    NORMAL = "normal"
    HIGH = "high"


def subgroup_label(bot_class: Level, pot_class: Level) -> str:
    """例: "high BOT & normal POT" """
    return f"{Level(bot_class).value} BOT & {Level(pot_class).value} POT"


# 表示順: normal BOT の3群、high BOT の3群、(あれば) low BOT の3群
SUBGROUP_ORDER: Tuple[Tuple[Level, Level], ...] = tuple(
    (bot, pot)
    for bot in (Level.NORMAL, Level.HIGH, Level.LOW)
    for pot in (Level.LOW, Level.NORMAL, Level.HIGH)
)


@dataclass(frozen=True)
class SubgroupAssignment:
    bot_class: Level
    pot_class: Level
    lfdr_bot: float
    lfdr_pot: float

    @property
    def label(self) -> str:
        return subgroup_label(self.bot_class, self.pot_class)


def score_cohort(model: InnerModel, cohort: Cohort) -> List[TendencyScore]:
    """Eval モードで全員の (log BOT, log POT) を求める。入力順を保つ。"""
    log_bot, log_pot = model.tendency_arrays(cohort.covariates)
    return [
        TendencyScore(float(a), float(b)) for a, b in zip(log_bot, log_pot)
    ]


def _classify(values: np.ndarray, q: float) -> Tuple[List[Level], np.ndarray]:
    lfdr_model = fit_lfdr(values)
    lfdr = lfdr_model.lfdr(values)
    side = lfdr_model.side(values)
    classes = []
    for lf, s in zip(lfdr, side):
        if lf < q and s > 0:
            classes.append(Level.HIGH)
        elif lf < q and s < 0:
            classes.append(Level.LOW)
        else:
            classes.append(Level.NORMAL)
    return classes, lfdr


def assign_subgroups(
    scores: Sequence[TendencyScore], q: float = DEFAULT_Q
) -> List[SubgroupAssignment]:
    """
    log BOT と log POT それぞれに局所FDRを当てはめ、lfdr < q の対象を
    帰無平均より上なら High、下なら Low、それ以外を Normal に分類する。

    Args:
        scores: score_cohort の結果 (200件以上)。
        q: 局所FDRの閾値。

    Returns:
        対象ごとの SubgroupAssignment (入力順)。
    """
    if not 0.0 < q < 1.0:
        raise ContractError(f"q は (0, 1) が必要です: {q}")
    log_bot = np.array([s.log_bot for s in scores], dtype=np.float64)
    log_pot = np.array([s.log_pot for s in scores], dtype=np.float64)
    bot_classes, lfdr_bot = _classify(log_bot, q)
    pot_classes, lfdr_pot = _classify(log_pot, q)
    assignments = [
        SubgroupAssignment(bc, pc, float(lb), float(lp))
        for bc, pc, lb, lp in zip(bot_classes, pot_classes, lfdr_bot, lfdr_pot)
    ]
    logger.info("subgroup sizes: %s", subgroup_counts(assignments))
    return assignments


def reported_cells(
    assignments: Sequence[SubgroupAssignment],
) -> List[Tuple[Level, Level]]:
    """
    normal/high BOT の6群。low BOT の発見があるときだけその3群を加える。
    """
    cells = [c for c in SUBGROUP_ORDER if c[0] is not Level.LOW]
    if any(a.bot_class is Level.LOW for a in assignments):
        cells += [c for c in SUBGROUP_ORDER if c[0] is Level.LOW]
    return cells


def subgroup_counts(
    assignments: Sequence[SubgroupAssignment],
) -> Dict[str, int]:
    counts = {subgroup_label(*c): 0 for c in reported_cells(assignments)}
    for a in assignments:
        counts[a.label] += 1
    return counts


def subgroup_frame(
    scores: Sequence[TendencyScore],
    assignments: Sequence[SubgroupAssignment],
) -> pd.DataFrame:
    """対象ごとのスコア・lfdr・分類を並べた表。"""
    if len(scores) != len(assignments):
        raise ContractError("scores と assignments の長さが違います。")
    return pd.DataFrame(
        {
            "log_bot": [s.log_bot for s in scores],
            "log_pot": [s.log_pot for s in scores],
            "lfdr_bot": [a.lfdr_bot for a in assignments],
            "lfdr_pot": [a.lfdr_pot for a in assignments],
            "bot_class": [a.bot_class.value for a in assignments],
            "pot_class": [a.pot_class.value for a in assignments],
            "subgroup": [a.label for a in assignments],
        }
    )


# --- リスク曲線 ---
@dataclass
class RiskCurve:
    """
    サブグループごとの平均予測確率を pain のグリッド上で並べたもの。
    crossing_pain は平均確率が初めて 0.5 に達する pain (達しなければ None)。
    """

    pain_grid: np.ndarray
    mean_prob: Dict[str, np.ndarray] = field(default_factory=dict)
    crossing_pain: Dict[str, Optional[float]] = field(default_factory=dict)
    sizes: Dict[str, int] = field(default_factory=dict)
    omitted: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"subgroup": label, "pain": float(x), "mean_prob": float(m)}
            for label, curve in self.mean_prob.items()
            for x, m in zip(self.pain_grid, curve)
        ]
        return pd.DataFrame(rows, columns=["subgroup", "pain", "mean_prob"])


def crossing_point(
    grid: np.ndarray, curve: np.ndarray, level: float = CROSSING_LEVEL
) -> Optional[float]:
    """curve >= level となる最初の点を直前の点との線形補間で求める。"""
    reached = np.flatnonzero(curve >= level)
    if reached.size == 0:
        return None
    k = int(reached[0])
    if k == 0:
        return float(grid[0])
    x0, x1 = grid[k - 1], grid[k]
    m0, m1 = curve[k - 1], curve[k]
    return float(x0 + (level - m0) / (m1 - m0) * (x1 - x0))


def risk_curves(
    model: InnerModel,
    cohort: Cohort,
    assignments: Sequence[SubgroupAssignment],
    pain_grid: Optional[Sequence[float]] = None,
) -> RiskCurve:
    """
    各サブグループについて、全員の pain をグリッド値に置き換えたときの
    予測確率の平均を求める。空のサブグループは omitted に入れる。
    """
    if len(assignments) != len(cohort):
        raise ContractError(
            f"assignments ({len(assignments)}) と cohort ({len(cohort)}) "
            "の長さが違います。"
        )
    grid = PAIN_GRID if pain_grid is None else np.asarray(pain_grid, float)
    intercept, slope = model.tendency_arrays(cohort.covariates)
    labels = np.array([a.label for a in assignments], dtype=object)
    result = RiskCurve(pain_grid=grid)
    for cell in reported_cells(assignments):
        label = subgroup_label(*cell)
        members = np.flatnonzero(labels == label)
        if members.size == 0:
            result.omitted.append(label)
            continue
        probs = inner_probability(
            intercept[members][None, :],
            slope[members][None, :],
            grid[:, None],
        )
        curve = probs.mean(axis=1)
        result.mean_prob[label] = curve
        result.crossing_pain[label] = crossing_point(grid, curve)
        result.sizes[label] = int(members.size)
    if result.omitted:
        logger.info("empty subgroups omitted: %s", ", ".join(result.omitted))
    return result


# --- 共変量ごとの R² ---
@dataclass(frozen=True)
class CovariateR2:
    covariate: str
    r2_bot: Optional[float]
    r2_pot: Optional[float]


def _r2(target: np.ndarray, block: np.ndarray) -> Optional[float]:
    if np.all(np.ptp(block, axis=0) == 0.0):
        return None
    centered = target - target.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        return None
    design = np.column_stack([np.ones(len(target)), block])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    return float(np.clip(1.0 - (residual @ residual) / ss_tot, 0.0, 1.0))


def covariate_r2(
    scores: Sequence[TendencyScore], cohort: Cohort
) -> List[CovariateR2]:
    """
    共変量ごと (カテゴリ変数は one-hot ブロック単位) に、log BOT と log POT を
    その共変量だけに最小二乗回帰したときの決定係数。
    分散0の共変量は None。
    """
    if len(scores) != len(cohort):
        raise ContractError("scores と cohort の長さが違います。")
    log_bot = np.array([s.log_bot for s in scores], dtype=np.float64)
    log_pot = np.array([s.log_pot for s in scores], dtype=np.float64)
    out = []
    for name, columns in cohort.groups.items():
        block = cohort.covariates[:, columns]
        if block.shape[1] == 0:
            out.append(CovariateR2(name, None, None))
            continue
        out.append(CovariateR2(name, _r2(log_bot, block), _r2(log_pot, block)))
    return out


def describe_subgroups(
    table: RawTable,
    assignments: Sequence[SubgroupAssignment],
    schema: Optional[CovariateSchema] = None,
) -> pd.DataFrame:
    """
    サブグループごとの特性表。連続変数は "平均 (SD)"、カテゴリ変数は
    水準ごとに "件数 (割合%)"。値は元の単位 (補完・標準化前)。
    """
    schema = table.schema if schema is None else schema
    if len(assignments) != len(table):
        raise ContractError("assignments と table の長さが違います。")
    labels = pd.Series([a.label for a in assignments])
    columns = [
        label
        for label in (subgroup_label(*c) for c in reported_cells(assignments))
        if (labels == label).any()
    ]
    rows: Dict[str, Dict[str, str]] = {
        "n": {c: str(int((labels == c).sum())) for c in columns}
    }
    for spec in schema.covariates:
        column = table.frame[spec.name]
        if spec.kind is CovariateKind.CONTINUOUS:
            rows[spec.name] = {
                c: _mean_sd(column[(labels == c).to_numpy()])
                for c in columns
            }
            continue
        levels = sorted(column.dropna().astype(str).unique().tolist())
        for level in levels:
            rows[f"{spec.name}={level}"] = {
                c: _count_pct(column[(labels == c).to_numpy()], level)
                for c in columns
            }
    return pd.DataFrame.from_dict(rows, orient="index", columns=columns)


def _mean_sd(values: pd.Series) -> str:
    observed = values.dropna().astype(float)
    if observed.empty:
        return "NA"
    sd = observed.std(ddof=1) if len(observed) > 1 else 0.0
    return f"{observed.mean():.2f} ({sd:.2f})"


def _count_pct(values: pd.Series, level: str) -> str:
    observed = values.dropna().astype(str)
    if observed.empty:
        return "NA"
    count = int((observed == level).sum())
    return f"{count} ({100.0 * count / len(observed):.1f}%)"
