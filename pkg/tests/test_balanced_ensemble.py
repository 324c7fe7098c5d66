# tests/test_balanced_ensemble.py
import numpy as np
import pytest
from scipy.special import logit

from conftest import linear_model
from logic.BalancedEnsemble import (
    BalancedEnsemble,
    SamplingStrategy,
    balanced_subsample,
    ensemble_predict,
    fit_balanced_ensemble,
    load_ensemble,
    load_predictor,
    oversample_cases,
    save_ensemble,
)
from logic.Cohort import Cohort, Subject
from logic.InnerModel import (
    InnerModel,
    load_model,
    make_logistic_baseline,
    save_model,
)
from logic.TrainConfig import TrainConfig
from logic.errors import ContractError


@pytest.fixture
def imbalanced(rng):
    """陽性 15、陰性 45 のコホート。"""
    y = np.zeros(60)
    y[rng.permutation(60)[:15]] = 1.0
    return Cohort(rng.standard_normal((60, 2)), rng.uniform(0, 10, 60), y)


def _constant_model(prob):
    return linear_model([0.0, 0.0], logit(prob), [0.0, 0.0], 0.0)


# --- サンプリング ---
def test_subsample_is_balanced(imbalanced):
    index = balanced_subsample(imbalanced, seed=1)
    y = imbalanced.labels[index]
    assert len(index) == 30
    assert y.mean() == 0.5
    assert len(set(index.tolist())) == 30


def test_every_case_is_kept(imbalanced):
    cases = set(np.flatnonzero(imbalanced.labels == 1).tolist())
    for seed in range(3):
        index = balanced_subsample(imbalanced, seed)
        picked = set(index[imbalanced.labels[index] == 1].tolist())
        assert picked == cases
    a = balanced_subsample(imbalanced, 0)
    b = balanced_subsample(imbalanced, 1)
    assert not np.array_equal(a, b)


def test_one_case_one_control():
    cohort = Cohort(np.zeros((2, 1)), [1.0, 2.0], [1, 0])
    np.testing.assert_array_equal(balanced_subsample(cohort, 0), [0, 1])


def test_more_cases_than_controls(rng):
    y = np.array([1, 1, 1, 0])
    cohort = Cohort(rng.standard_normal((4, 1)), np.ones(4), y)
    with pytest.raises(ContractError):
        balanced_subsample(cohort, 0)
    with pytest.raises(ContractError):
        oversample_cases(cohort, 0)


def test_single_class_is_rejected(rng):
    cohort = Cohort(rng.standard_normal((5, 1)), np.ones(5), np.zeros(5))
    with pytest.raises(ContractError):
        balanced_subsample(cohort, 0)


def test_oversampling_matches_control_count(imbalanced):
    index = oversample_cases(imbalanced, seed=2)
    assert len(index) == 90
    assert imbalanced.labels[index].mean() == 0.5


# --- アンサンブル ---
def test_prediction_is_mean_of_members(small_cohort):
    ensemble = BalancedEnsemble(
        [_constant_model(0.2), _constant_model(0.6)]
    )
    cohort = Cohort(
        small_cohort.covariates[:, :2], small_cohort.pain, small_cohort.labels
    )
    np.testing.assert_allclose(ensemble_predict(ensemble, cohort), 0.4)
    value = ensemble.predict(Subject(5.0, [0.3, -0.1]))
    assert isinstance(value, float)
    assert value == pytest.approx(0.4)


def test_identical_members_match_single_model(small_cohort):
    model = InnerModel.build(3, hidden=(6, 3), seed=4)
    ensemble = BalancedEnsemble([model.copy() for _ in range(5)])
    np.testing.assert_allclose(
        ensemble.predict(small_cohort),
        model.predict(small_cohort),
        rtol=0.0,
        atol=1e-12,
    )


def test_empty_or_mixed_ensemble_is_rejected():
    with pytest.raises(ContractError):
        ensemble_predict(BalancedEnsemble(), Subject(1.0, [0.0]))
    mixed = BalancedEnsemble(
        [_constant_model(0.5), linear_model([0.0], 0.0, [0.0], 0.0)]
    )
    with pytest.raises(ContractError):
        ensemble_predict(mixed, Subject(1.0, [0.0]))


def _fit(imbalanced, **kwargs):
    train_set, validation_set = imbalanced.subset(range(40)), imbalanced
    cfg = TrainConfig(learning_rate=0.01, batch_size=5, max_epochs=3)
    return fit_balanced_ensemble(
        lambda s: make_logistic_baseline(2, seed=s),
        train_set,
        validation_set,
        cfg,
        seed=7,
        **kwargs,
    )


def test_fit_trains_k_members(imbalanced):
    ensemble, logs = _fit(imbalanced, k=3)
    assert len(ensemble) == 3 and len(logs) == 3
    train_labels = imbalanced.labels[:40]
    for index in ensemble.index_sets:
        assert train_labels[index].mean() == 0.5
    first = ensemble.models[0].parameters()
    second = ensemble.models[1].parameters()
    assert not all(np.array_equal(a, b) for a, b in zip(first, second))


def test_fit_is_reproducible(imbalanced):
    a, _ = _fit(imbalanced, k=2)
    b, _ = _fit(imbalanced, k=2)
    np.testing.assert_array_equal(a.predict(imbalanced), b.predict(imbalanced))


def test_no_sampling_uses_every_row(imbalanced):
    ensemble, _ = _fit(imbalanced, k=1, strategy=SamplingStrategy.NONE)
    np.testing.assert_array_equal(ensemble.index_sets[0], np.arange(40))


def test_k_must_be_positive(imbalanced):
    with pytest.raises(ContractError):
        _fit(imbalanced, k=0)


# --- 保存 ---
def test_save_and_load(tmp_path, imbalanced):
    ensemble, _ = _fit(imbalanced, k=2)
    path = str(tmp_path / "ensemble.json")
    save_ensemble(path, ensemble, "hash1")
    loaded, schema_hash = load_ensemble(path)
    assert schema_hash == "hash1"
    np.testing.assert_allclose(
        loaded.predict(imbalanced), ensemble.predict(imbalanced)
    )
    predictor, _ = load_predictor(path)
    assert isinstance(predictor, BalancedEnsemble)
    with pytest.raises(ContractError):
        load_model(path)


def test_load_predictor_reads_single_model(tmp_path):
    path = str(tmp_path / "model.json")
    save_model(path, _constant_model(0.3))
    predictor, _ = load_predictor(path)
    assert isinstance(predictor, InnerModel)
    with pytest.raises(ContractError):
        load_ensemble(path)
