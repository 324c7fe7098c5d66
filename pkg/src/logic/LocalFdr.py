# LocalFdr.py
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from logic.errors import ContractError, LfdrFitError

logger = logging.getLogger(__name__)

MIN_OBSERVATIONS = 200
# 経験的帰無分布を当てはめる中央帯 (分位点)
CENTRAL_BAND = (0.05, 0.95)


@dataclass
class LfdrModel:
    """
    局所FDR: lfdr(z) = pi0 · φ((z−μ₀)/σ₀)/σ₀ / f̂(z) を [0, 1] に切り詰めたもの。

    μ₀, σ₀ と f̂ は標準化後のスケール (center, scale で標準化) で保持する。
    """

    center: float
    scale: float
    null_mean: float
    null_sd: float
    pi0: float
    density: stats.gaussian_kde

    def standardize(self, values: Sequence[float]) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.center) / (
            self.scale
        )

    def null_density(self, z: np.ndarray) -> np.ndarray:
        return stats.norm.pdf(z, loc=self.null_mean, scale=self.null_sd)

    def lfdr(self, values: Sequence[float]) -> np.ndarray:
        """元のスケールの値に対する局所FDR。"""
        z = self.standardize(values)
        f = self.density(z)
        f0 = self.pi0 * self.null_density(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(f > 0.0, f0 / f, 1.0)
        return np.clip(ratio, 0.0, 1.0)

    def side(self, values: Sequence[float]) -> np.ndarray:
        """帰無平均より上なら +1、下なら −1。"""
        return np.sign(self.standardize(values) - self.null_mean)


def _fit_central_null(
    z: np.ndarray, lo: float, hi: float, band: Tuple[float, float]
):
    """
    [lo, hi] に切断した正規分布の最尤推定で (μ₀, σ₀) を求める。
    """
    inside = z[(z >= lo) & (z <= hi)]
    mu0 = float(np.median(inside))
    width = stats.norm.ppf(band[1]) - stats.norm.ppf(band[0])
    sd0 = float((hi - lo) / width)

    def neg_loglik(theta):
        mu, log_sd = theta
        sd = np.exp(log_sd)
        a = (lo - mu) / sd
        b = (hi - mu) / sd
        return -np.sum(stats.truncnorm.logpdf(inside, a, b, mu, sd))

    result = optimize.minimize(
        neg_loglik, x0=[mu0, np.log(sd0)], method="Nelder-Mead"
    )
    mu, log_sd = result.x
    sd = float(np.exp(log_sd))
    if not (np.isfinite(mu) and np.isfinite(sd) and sd > 0.0):
        raise LfdrFitError(f"帰無分布の当てはめに失敗しました: {result.message}")
    if not result.success:
        logger.warning("empirical null fit: %s", result.message)
    return float(mu), sd, inside.size


def fit_lfdr(
    values: Sequence[float], band: Tuple[float, float] = CENTRAL_BAND
) -> LfdrModel:
    """
    経験的帰無分布 (中央帯での最尤推定) と Silverman バンド幅の
    ガウスカーネル密度推定で局所FDRモデルを当てはめる。

    Args:
        values: スコア (n >= 200)。
        band: 帰無分布を当てはめる分位点の帯。(0.25, 0.75) なら四分位範囲。

    Returns:
        LfdrModel。
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size < MIN_OBSERVATIONS:
        raise ContractError(
            f"局所FDRの推定には {MIN_OBSERVATIONS} 件以上が必要です: {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise LfdrFitError("スコアに非有限値が含まれています。")
    center = float(np.mean(x))
    scale = float(np.std(x))
    if not scale > 0.0:
        raise LfdrFitError("スコアの分散が0です。")
    z = (x - center) / scale

    if not 0.0 < band[0] < band[1] < 1.0:
        raise ContractError(f"band が不正です: {band}")
    lo, hi = np.quantile(z, band)
    if not hi > lo:
        raise LfdrFitError("中央帯の幅が0です。")
    null_mean, null_sd, n_inside = _fit_central_null(z, lo, hi, band)

    # 中央帯の観測割合 / 帰無分布のもとでの中央帯の確率
    null_mass = stats.norm.cdf(hi, null_mean, null_sd) - stats.norm.cdf(
        lo, null_mean, null_sd
    )
    pi0 = float(min(1.0, n_inside / (z.size * null_mass)))

    density = stats.gaussian_kde(z, bw_method="silverman")
    logger.debug(
        "lfdr null: mean %.4f, sd %.4f, pi0 %.4f",
        null_mean,
        null_sd,
        pi0,
    )
    return LfdrModel(center, scale, null_mean, null_sd, pi0, density)
