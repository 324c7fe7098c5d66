# tests/test_trainer.py
import numpy as np
import pytest

from conftest import linear_model
from logic.Cohort import Cohort
from logic.CohortData import split
from logic.InnerModel import InnerModel, make_logistic_baseline
from logic.Metrics import c_statistic
from logic.Simulator import generate_logistic
from logic.TrainConfig import TrainConfig
from logic.Trainer import (
    StopReason,
    default_lr_grid,
    grid_search_lr,
    iterate_minibatches,
    train,
)
from logic.errors import (
    ConfigurationError,
    DivergenceError,
    SearchFailedError,
)


@pytest.fixture
def separable():
    """1共変量・4人の線形分離可能なデータ (pain は0)"""
    z = np.array([[-1.0], [-0.5], [0.5], [1.0]])
    return Cohort(z, np.zeros(4), np.array([0, 0, 1, 1]))


def test_minibatches_cover_every_index_once():
    rng = np.random.default_rng(0)
    batches = list(iterate_minibatches(10, 4, rng))
    assert [len(b) for b in batches] == [4, 4, 2]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))


def test_zero_learning_rate_keeps_parameters(small_cohort):
    model = InnerModel.build(3, hidden=(4,), seed=2)
    cfg = TrainConfig(learning_rate=0.0, batch_size=8, max_epochs=3)
    trained, log = train(model, small_cohort, small_cohort, cfg)
    for before, after in zip(model.parameters(), trained.parameters()):
        np.testing.assert_array_equal(before, after)
    losses = {r.train_loss for r in log.records}
    assert len(losses) == 1
    assert log.epochs == 3
    assert log.stop_reason is StopReason.MAX_EPOCHS


def test_input_model_is_not_mutated(small_cohort):
    model = InnerModel.build(3, hidden=(4,), seed=3)
    snapshot = [p.copy() for p in model.parameters()]
    cfg = TrainConfig(learning_rate=0.01, batch_size=8, max_epochs=2)
    train(model, small_cohort, small_cohort, cfg)
    for before, now in zip(snapshot, model.parameters()):
        np.testing.assert_array_equal(before, now)


def test_gap_stops_after_first_epoch():
    """検証損失が訓練損失を Δ 以上上回ったら停止する"""
    z = np.zeros((6, 1))
    x = np.zeros(6)
    train_set = Cohort(z, x, np.ones(6))
    validation_set = Cohort(z, x, np.zeros(6))
    model = linear_model([0.0], 2.0, [0.0], 0.0)
    cfg = TrainConfig(learning_rate=0.0, batch_size=3, max_epochs=50)
    _, log = train(model, train_set, validation_set, cfg)
    assert log.epochs == 1
    assert log.stop_reason is StopReason.GAP_EXCEEDED
    assert log.final_validation_loss > log.final_train_loss


def test_infinite_learning_rate_diverges(small_cohort):
    model = InnerModel.build(3, hidden=(4,), seed=0)
    cfg = TrainConfig(learning_rate=float("inf"), batch_size=8)
    with pytest.raises(DivergenceError) as info:
        train(model, small_cohort, small_cohort, cfg)
    assert info.value.epoch == 1


def test_batch_larger_than_training_set(small_cohort):
    model = InnerModel.build(3, hidden=(2,))
    with pytest.raises(ConfigurationError):
        train(
            model, small_cohort, small_cohort, TrainConfig(batch_size=41)
        )


def test_empty_sets_rejected(small_cohort):
    model = InnerModel.build(3, hidden=(2,))
    empty = small_cohort.subset([])
    with pytest.raises(ConfigurationError):
        train(model, empty, small_cohort, TrainConfig(batch_size=1))


def test_separable_toy_is_learned(separable):
    model = make_logistic_baseline(1, seed=5)
    cfg = TrainConfig(learning_rate=0.1, batch_size=4, max_epochs=200)
    trained, log = train(model, separable, separable, cfg)
    assert log.final_train_loss < model.mean_loss(separable)
    predicted = (trained.predict(separable) > 0.5).astype(int)
    np.testing.assert_array_equal(predicted, separable.labels)


def test_training_is_reproducible(small_cohort):
    cfg = TrainConfig(
        learning_rate=0.01, batch_size=8, max_epochs=4, seed=17
    )
    model = InnerModel.build(3, hidden=(5,), dropout_rates=[0.3], seed=1)
    _, log_a = train(model, small_cohort, small_cohort, cfg)
    _, log_b = train(model, small_cohort, small_cohort, cfg)
    assert log_a.to_dict() == log_b.to_dict()


def test_default_grid():
    grid = default_lr_grid()
    assert len(grid) == 20
    assert grid[0] == pytest.approx(0.005)
    assert grid[-1] == pytest.approx(0.1)


def test_single_point_grid_returns_that_point(separable):
    best, points = grid_search_lr(
        lambda seed: make_logistic_baseline(1, seed=seed),
        separable,
        separable,
        grid=[0.03],
        cfg=TrainConfig(batch_size=2, max_epochs=5),
    )
    assert best == 0.03
    assert len(points) == 1


def test_nonzero_rate_beats_null_training(separable):
    best, points = grid_search_lr(
        lambda seed: make_logistic_baseline(1, seed=seed),
        separable,
        separable,
        grid=[0.0, 0.1],
        cfg=TrainConfig(batch_size=4, max_epochs=50),
    )
    assert best == 0.1
    assert points[1].validation_loss < points[0].validation_loss


def test_all_diverged_grid_fails(separable):
    with pytest.raises(SearchFailedError) as info:
        grid_search_lr(
            lambda seed: make_logistic_baseline(1, seed=seed),
            separable,
            separable,
            grid=[float("inf")],
            cfg=TrainConfig(batch_size=2, max_epochs=3),
        )
    assert info.value.results[0].diverged


@pytest.mark.slow
def test_one_layer_model_recovers_logistic_coefficients():
    """p = 5, n = 20,000 の通常のロジスティックデータから係数を復元する"""
    w_alpha = [0.5, -0.5, 0.3, 0.0, 0.2]
    w_beta = [0.1, 0.0, -0.1, 0.05, 0.0]
    data = generate_logistic(20_000, w_alpha, 0.5, w_beta, -0.15, seed=1)
    fit_set, validation_set = split(data.cohort, 0.8, seed=2)
    cfg = TrainConfig(
        learning_rate=0.002, batch_size=64, max_epochs=200, gap_delta=1.0
    )
    trained, _ = train(
        make_logistic_baseline(5, seed=3), fit_set, validation_set, cfg
    )
    alpha = trained.net_alpha.layers[0]
    beta = trained.net_beta.layers[0]
    np.testing.assert_allclose(alpha.weights[0], w_alpha, atol=0.1)
    np.testing.assert_allclose(beta.weights[0], w_beta, atol=0.1)
    assert alpha.bias[0] == pytest.approx(0.5, abs=0.1)
    assert beta.bias[0] == pytest.approx(-0.15, abs=0.1)
    labels = data.cohort.labels
    oracle = c_statistic(data.true_prob, labels)
    learned = c_statistic(trained.predict(data.cohort), labels)
    assert learned >= oracle - 0.02


def test_full_batch_sgd_epoch_decreases_loss():
    """2共変量の分離可能なデータで、全バッチ1エポックの SGD が損失を下げる"""
    z = np.array([[-1.0, -0.5], [-0.5, -1.0], [0.5, 1.0], [1.0, 0.5]])
    cohort = Cohort(z, np.array([1.0, 3.0, 2.0, 4.0]), [0, 0, 1, 1])
    model = make_logistic_baseline(2, seed=4)
    cfg = TrainConfig(learning_rate=0.01, batch_size=4, max_epochs=1)
    trained, log = train(model, cohort, cohort, cfg)
    assert log.epochs == 1
    assert trained.batch_loss(cohort) < model.batch_loss(cohort)
