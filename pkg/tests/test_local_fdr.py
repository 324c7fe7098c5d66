# tests/test_local_fdr.py
import numpy as np
import pytest
from scipy import stats

from logic.LocalFdr import fit_lfdr
from logic.errors import ContractError, LfdrFitError


def _null_check(seed):
    values = np.random.default_rng(seed).standard_normal(10_000)
    model = fit_lfdr(values)
    mu0 = model.center + model.scale * model.null_mean
    sd0 = model.scale * model.null_sd
    flagged = int(np.sum(model.lfdr(values) < 0.2))
    return mu0, sd0, flagged


def test_null_only_scores():
    """帰無分布だけなら (0, 1) を復元し、lfdr < 0.2 の対象はいない"""
    mu0, sd0, flagged = _null_check(0)
    assert mu0 == pytest.approx(0.0, abs=0.05)
    assert sd0 == pytest.approx(1.0, abs=0.05)
    assert flagged <= 1


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_null_only_scores_many_seeds(seed):
    mu0, sd0, flagged = _null_check(100 + seed)
    assert mu0 == pytest.approx(0.0, abs=0.05)
    assert sd0 == pytest.approx(1.0, abs=0.05)
    assert flagged <= 1


def test_planted_component_is_recovered():
    rng = np.random.default_rng(1)
    null = rng.standard_normal(9_500)
    planted = rng.normal(6.0, 0.5, size=500)
    values = np.concatenate([null, planted])
    model = fit_lfdr(values)
    lfdr = model.lfdr(values)
    recall = np.mean(lfdr[9_500:] < 0.2)
    assert recall >= 0.9
    assert np.all(model.side(planted) > 0)
    assert 0.0 < model.pi0 <= 1.0


def test_lfdr_is_clipped_to_unit_interval(rng):
    model = fit_lfdr(rng.standard_normal(500))
    lfdr = model.lfdr(np.linspace(-6.0, 6.0, 121))
    assert np.all((lfdr >= 0.0) & (lfdr <= 1.0))


def test_constant_scores_raise():
    with pytest.raises(LfdrFitError):
        fit_lfdr(np.full(300, 2.5))


def test_too_few_scores_raise(rng):
    with pytest.raises(ContractError):
        fit_lfdr(rng.standard_normal(199))


def test_interquartile_band_is_available(rng):
    model = fit_lfdr(rng.standard_normal(2_000), band=(0.25, 0.75))
    assert model.null_sd > 0.0
    with pytest.raises(ContractError):
        fit_lfdr(rng.standard_normal(300), band=(0.0, 0.5))


def _quantile_sample(n, loc=0.0, sd=1.0):
    return stats.norm.ppf((np.arange(n) + 0.5) / n, loc, sd)


@pytest.mark.parametrize("direction", [1.0, -1.0])
def test_lfdr_decreases_away_from_null_mean(direction):
    values = np.concatenate(
        [
            _quantile_sample(4_000),
            _quantile_sample(150, 4.0, 0.5),
            _quantile_sample(150, -4.0, 0.5),
        ]
    )
    model = fit_lfdr(values)
    mu0 = model.center + model.scale * model.null_mean
    sd0 = model.scale * model.null_sd
    distance = np.linspace(0.0, 4.0 * sd0, 81)
    lfdr = model.lfdr(mu0 + direction * distance)
    assert np.all(np.diff(lfdr) <= 1e-9)
    assert lfdr[0] > 0.9
    assert lfdr[-1] < 0.2
