# Simulator.py
import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from logic.Cohort import PAIN_MAX, PAIN_MIN, Cohort, Subject
from logic.errors import (
    CalibrationError,
    ConfigurationError,
    ContractError,
    DegenerateSignalError,
)
from logic.util.derive_seed import derive_rng, derive_seed

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
SCALE_BRACKET = (1e-4, 1e4)
CALIBRATION_TOLERANCE = 0.02
CALIBRATION_SAMPLE_SIZE = 40_000
MAX_BISECTIONS = 200


class Scenario(str, Enum):
    CORRECT = "correct"
    MISSPECIFIED = "misspec"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class SimConfig:
    n_samples: int = 40_000
    p_signal: int = 16
    p_noise: int = 0
    snr_target: float = 3.2
    scenario: Scenario = Scenario.CORRECT
    seed: int = 0
    calib_sample_size: int = CALIBRATION_SAMPLE_SIZE

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.scenario is Scenario.LOGISTIC:
            raise ConfigurationError(
                "logistic データは generate_logistic で生成してください。"
            )
        if self.n_samples < MIN_SAMPLES:
            raise ConfigurationError(
                f"n_samples は {MIN_SAMPLES} 以上が必要です: {self.n_samples}"
            )
        if self.p_signal < 1 or self.p_noise < 0:
            raise ConfigurationError(
                f"共変量の数が不正です: p_signal={self.p_signal}, "
                f"p_noise={self.p_noise}"
            )
        if not self.snr_target > 0.0:
            raise ConfigurationError(
                f"snr_target は正の値が必要です: {self.snr_target}"
            )
        if self.calib_sample_size < MIN_SAMPLES:
            raise ConfigurationError("calib_sample_size が小さすぎます。")

    @property
    def p(self) -> int:
        return self.p_signal + self.p_noise

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["scenario"] = self.scenario.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimConfig":
        return cls(**data)


@dataclass
class SimDataset:
    """
    生成したコホートと真の確率・係数。
    covariates の先頭 p_signal 列がシグナル、残りがノイズ。
    """

    cohort: Cohort
    true_prob: np.ndarray
    logit: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    scale: float
    achieved_snr: float
    scenario: Scenario
    config: Optional[SimConfig] = None
    intercepts: Optional[Tuple[float, float]] = None

    @property
    def subjects(self) -> List[Subject]:
        return [self.cohort.subject(i) for i in range(len(self.cohort))]

    def truth_dict(self) -> Dict[str, Any]:
        truth: Dict[str, Any] = {
            "scenario": self.scenario.value,
            "alpha": [float(v) for v in self.alpha],
            "beta": [float(v) for v in self.beta],
            "scale": float(self.scale),
            "achieved_snr": float(self.achieved_snr),
        }
        if self.intercepts is not None:
            truth["b_alpha"], truth["b_beta"] = map(float, self.intercepts)
        if self.config is not None:
            truth["config"] = self.config.to_dict()
        return truth


# --- シグナルと SNR ---
def scenario_signal(
    scenario: Scenario,
    z_signal: np.ndarray,
    x: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
) -> np.ndarray:
    """
    スケール前の logit g(Z, X)。
    correct: sin(Zᵀα) + cos(Zᵀβ)·X
    misspec: −X·sin(Zᵀα) + √|cos(Zᵀβ)·X|
    """
    za = z_signal @ alpha
    zb = z_signal @ beta
    scenario = Scenario(scenario)
    if scenario is Scenario.CORRECT:
        return np.sin(za) + np.cos(zb) * x
    if scenario is Scenario.MISSPECIFIED:
        return -x * np.sin(za) + np.sqrt(np.abs(np.cos(zb) * x))
    raise ConfigurationError(f"未対応のシナリオです: {scenario}")


def estimate_snr(true_prob: Sequence[float]) -> float:
    """
    Var(P) / (Var(Y) − Var(P)) = Var(P) / mean(P(1−P))。分散は 1/n。
    """
    prob = np.asarray(true_prob, dtype=np.float64).reshape(-1)
    if prob.size < 2:
        raise ContractError("SNR の推定には2件以上が必要です。")
    if np.any((prob < 0.0) | (prob > 1.0)):
        raise ContractError("確率は [0, 1] が必要です。")
    residual = float(np.mean(prob * (1.0 - prob)))
    if residual <= 0.0:
        raise DegenerateSignalError(
            "すべての確率が 0 か 1 のため SNR が定義できません。"
        )
    return float(np.var(prob) / residual)


def _snr_at(scale: float, signal: np.ndarray) -> float:
    try:
        return estimate_snr(expit(scale * signal))
    except DegenerateSignalError:
        return float("inf")


def draw_coefficients(
    p_signal: int, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """標準正規から引いて長さ1に正規化した α, β。"""
    rng = derive_rng(seed, "coefficients")
    alpha = rng.standard_normal(p_signal)
    beta = rng.standard_normal(p_signal)
    return alpha / np.linalg.norm(alpha), beta / np.linalg.norm(beta)


def _draw_design(
    n: int, p: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    z = rng.standard_normal((n, p))
    x = rng.uniform(PAIN_MIN, PAIN_MAX, size=n)
    return z, x


def calibrate_scale(
    cfg: SimConfig,
    alpha: np.ndarray,
    beta: np.ndarray,
    calib_sample_size: Optional[int] = None,
) -> float:
    """
    logit = c·g で SNR が目標の ±2% に入る c を [1e−4, 1e4] の
    (対数スケールの) 二分法で探す。

    Args:
        cfg: シミュレーション設定。
        alpha: シグナル係数 α。
        beta: シグナル係数 β。
        calib_sample_size: 較正用サンプル数 (省略時は cfg の値)。

    Returns:
        スケール c。
    """
    size = calib_sample_size or cfg.calib_sample_size
    z, x = _draw_design(size, cfg.p_signal, derive_rng(cfg.seed, "calibrate"))
    signal = scenario_signal(cfg.scenario, z, x, alpha, beta)
    target = cfg.snr_target

    lo, hi = SCALE_BRACKET
    snr_lo, snr_hi = _snr_at(lo, signal), _snr_at(hi, signal)
    if not snr_lo <= target * (1 + CALIBRATION_TOLERANCE):
        raise CalibrationError(
            f"目標 SNR {target} は範囲の下限より小さいです。",
            {"low": snr_lo, "high": snr_hi},
        )
    if not snr_hi >= target * (1 - CALIBRATION_TOLERANCE):
        raise CalibrationError(
            f"目標 SNR {target} に届きません。",
            {"low": snr_lo, "high": snr_hi},
        )

    for _ in range(MAX_BISECTIONS):
        mid = float(np.sqrt(lo * hi))
        snr = _snr_at(mid, signal)
        if abs(snr - target) <= CALIBRATION_TOLERANCE * target:
            logger.debug("calibrated scale %.6g (snr %.4f)", mid, snr)
            return mid
        if snr < target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"目標 SNR {target} に収束しませんでした。",
        {"low": snr_lo, "high": snr_hi},
    )


def _bernoulli(prob: np.ndarray, seed: int) -> np.ndarray:
    return (derive_rng(seed, "labels").random(prob.size) < prob).astype(
        np.float64
    )


def generate(
    cfg: SimConfig,
    alpha: Optional[Sequence[float]] = None,
    beta: Optional[Sequence[float]] = None,
) -> SimDataset:
    """
    シナリオに従ってコホートを生成する。ノイズ共変量は α, β に入らない。

    Args:
        cfg: シミュレーション設定。
        alpha: シグナル係数 (省略時は draw_coefficients)。
        beta: シグナル係数 (省略時は draw_coefficients)。

    Returns:
        SimDataset。
    """
    if alpha is None or beta is None:
        drawn_alpha, drawn_beta = draw_coefficients(cfg.p_signal, cfg.seed)
        alpha = drawn_alpha if alpha is None else alpha
        beta = drawn_beta if beta is None else beta
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    for name, vec in (("alpha", alpha), ("beta", beta)):
        if vec.shape != (cfg.p_signal,):
            raise ConfigurationError(
                f"{name} の長さは p_signal={cfg.p_signal} が必要です。"
            )

    scale = calibrate_scale(cfg, alpha, beta)
    z, x = _draw_design(cfg.n_samples, cfg.p, derive_rng(cfg.seed, "design"))
    n_signal = cfg.p_signal
    signal_columns = z[:, :n_signal]
    logit = scale * scenario_signal(
        cfg.scenario, signal_columns, x, alpha, beta
    )
    prob = expit(logit)
    labels = _bernoulli(prob, cfg.seed)
    achieved = estimate_snr(prob)
    logger.info(
        "generated %s dataset: n=%d, p=%d+%d, snr %.3f (target %.3f)",
        cfg.scenario.value,
        cfg.n_samples,
        cfg.p_signal,
        cfg.p_noise,
        achieved,
        cfg.snr_target,
    )
    return SimDataset(
        cohort=Cohort(z, x, labels),
        true_prob=prob,
        logit=logit,
        alpha=alpha,
        beta=beta,
        scale=scale,
        achieved_snr=achieved,
        scenario=cfg.scenario,
        config=cfg,
    )


def generate_logistic(
    n: int,
    w_alpha: Sequence[float],
    b_alpha: float,
    w_beta: Sequence[float],
    b_beta: float,
    seed: int = 0,
) -> SimDataset:
    """
    logit = Zᵀw_α + b_α + (Zᵀw_β + b_β)·X の通常のロジスティックモデル。
    係数の復元を確かめるためのデータ。
    """
    w_alpha = np.asarray(w_alpha, dtype=np.float64)
    w_beta = np.asarray(w_beta, dtype=np.float64)
    if w_alpha.shape != w_beta.shape or w_alpha.ndim != 1:
        raise ConfigurationError("w_alpha と w_beta の長さが違います。")
    if n < 1:
        raise ConfigurationError(f"n は1以上が必要です: {n}")
    z, x = _draw_design(n, w_alpha.size, derive_rng(seed, "design"))
    logit = z @ w_alpha + b_alpha + (z @ w_beta + b_beta) * x
    prob = expit(logit)
    return SimDataset(
        cohort=Cohort(z, x, _bernoulli(prob, seed)),
        true_prob=prob,
        logit=logit,
        alpha=w_alpha,
        beta=w_beta,
        scale=1.0,
        achieved_snr=estimate_snr(prob),
        scenario=Scenario.LOGISTIC,
        intercepts=(float(b_alpha), float(b_beta)),
    )


# --- 実験グリッド ---
class GridMode(str, Enum):
    BLOCKS = "blocks"
    CARTESIAN = "cartesian"


@dataclass(frozen=True)
class GridSpec:
    """
    BLOCKS: SNR の軸、ノイズ数の軸、(共変量数, サンプル数) の軸を
    それぞれ他を基準値に固定して並べる。
    CARTESIAN: 3つの軸の直積 (空の軸は基準値1点)。
    """

    snr: Tuple[float, ...] = ()
    noise: Tuple[int, ...] = ()
    cells: Tuple[Tuple[int, int], ...] = ()
    scenario: Scenario = Scenario.CORRECT
    base_n: int = 40_000
    base_p: int = 16
    base_snr: float = 3.2
    mode: GridMode = GridMode.BLOCKS
    seed: int = 0
    calib_sample_size: int = CALIBRATION_SAMPLE_SIZE

    def __post_init__(self):
        object.__setattr__(self, "snr", tuple(float(v) for v in self.snr))
        object.__setattr__(self, "noise", tuple(int(v) for v in self.noise))
        object.__setattr__(
            self, "cells", tuple((int(p), int(n)) for p, n in self.cells)
        )
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "mode", GridMode(self.mode))

    @property
    def is_empty(self) -> bool:
        return not (self.snr or self.noise or self.cells)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["snr"] = list(self.snr)
        data["noise"] = list(self.noise)
        data["cells"] = [list(c) for c in self.cells]
        data["scenario"] = self.scenario.value
        data["mode"] = self.mode.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpec":
        return cls(**data)


def _cell(spec: GridSpec, n: int, p: int, noise: int, snr: float, i: int):
    return SimConfig(
        n_samples=n,
        p_signal=p,
        p_noise=noise,
        snr_target=snr,
        scenario=spec.scenario,
        seed=derive_seed(spec.seed, "cell", i),
        calib_sample_size=spec.calib_sample_size,
    )


def experiment_grid(spec: GridSpec) -> List[SimConfig]:
    """GridSpec をセルごとの SimConfig に展開する。空の spec は空リスト。"""
    if spec.is_empty:
        return []
    settings: List[Tuple[int, int, int, float]] = []
    if spec.mode is GridMode.BLOCKS:
        settings += [(spec.base_n, spec.base_p, 0, s) for s in spec.snr]
        settings += [
            (spec.base_n, spec.base_p, k, spec.base_snr) for k in spec.noise
        ]
        settings += [(n, p, 0, spec.base_snr) for p, n in spec.cells]
    else:
        for snr, noise, (p, n) in product(
            spec.snr or (spec.base_snr,),
            spec.noise or (0,),
            spec.cells or ((spec.base_p, spec.base_n),),
        ):
            settings.append((n, p, noise, snr))
    return [
        _cell(spec, n, p, noise, snr, i)
        for i, (n, p, noise, snr) in enumerate(settings)
    ]


def reference_grid(
    scenario: Scenario = Scenario.CORRECT, seed: int = 0
) -> GridSpec:
    """SNR 3水準・ノイズ3水準・共変量数×サンプル数 9セルの基準グリッド。"""
    return GridSpec(
        snr=(0.2, 0.8, 3.2),
        noise=(8, 12, 16),
        cells=tuple(
            (p, n) for p in (8, 16, 18) for n in (5_000, 10_000, 20_000)
        ),
        scenario=scenario,
        seed=seed,
    )


# --- 書き出し ---
def dataset_frame(dataset: SimDataset) -> pd.DataFrame:
    cohort = dataset.cohort
    frame = pd.DataFrame(
        cohort.covariates,
        columns=[f"z{j + 1}" for j in range(cohort.p)],
    )
    frame.insert(0, "x", cohort.pain)
    frame.insert(0, "y", cohort.require_labels().astype(np.int64))
    return frame


def save_dataset(
    dataset: SimDataset, csv_path: str, truth_path: str
) -> None:
    """CSV (y,x,z1..zp) と真値の JSON を書き出す。"""
    dataset_frame(dataset).to_csv(csv_path, index=False, lineterminator="\n")
    with open(truth_path, "w", encoding="utf-8") as f:
        json.dump(dataset.truth_dict(), f, indent=2, sort_keys=True)
    logger.info("wrote %s and %s", csv_path, truth_path)


@dataclass
class CalibrationCheck:
    """較正済みスケールを新しいサンプルで確かめた結果。"""

    snr_target: float
    scale: float
    achieved_snr: float
    relative_error: float = field(init=False)

    def __post_init__(self):
        self.relative_error = abs(self.achieved_snr - self.snr_target) / (
            self.snr_target
        )


def check_calibration(
    cfg: SimConfig,
    alpha: np.ndarray,
    beta: np.ndarray,
    fresh_size: int = CALIBRATION_SAMPLE_SIZE,
) -> CalibrationCheck:
    """較正に使っていない新しいサンプルで SNR を測り直す。"""
    scale = calibrate_scale(cfg, alpha, beta)
    z, x = _draw_design(
        fresh_size, cfg.p_signal, derive_rng(cfg.seed, "calibrate:fresh")
    )
    prob = expit(scale * scenario_signal(cfg.scenario, z, x, alpha, beta))
    return CalibrationCheck(cfg.snr_target, scale, estimate_snr(prob))
