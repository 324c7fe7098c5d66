# train.py
import os

from commands.common import (
    model_factory,
    prepare_output,
    prepare_training_data,
)
from logic.BalancedEnsemble import (
    SamplingStrategy,
    fit_balanced_ensemble,
    save_ensemble,
)
from logic.InnerModel import save_model
from logic.Metrics import DEFAULT_THRESHOLD, evaluate_scores
from logic.RunConfig import RunConfig
from logic.TrainConfig import TrainConfig
from logic.Trainer import train
from logic.util.derive_seed import derive_seed
from ui.LearningCurveView import LearningCurveView
from ui.ReportView import ReportView


def run(cfg: RunConfig) -> str:
    """
    モデル (または K 個のアンサンブル) を学習して、model.json,
    transform.json, loss.csv, learning_curve.svg, test_metrics.* を書き出す。
    """
    out_dir = prepare_output(cfg)
    data = prepare_training_data(cfg)
    train_cfg = cfg.train_config(TrainConfig())
    factory = model_factory(cfg, data.fit_set.p)
    schema_hash = data.schema.schema_hash()
    model_path = os.path.join(out_dir, "model.json")

    if cfg.ensemble > 0:
        predictor, logs = fit_balanced_ensemble(
            factory,
            data.fit_set,
            data.validation_set,
            train_cfg,
            k=cfg.ensemble,
            seed=cfg.seed,
            strategy=SamplingStrategy(cfg.sampling),
            n_jobs=cfg.threads,
        )
        save_ensemble(model_path, predictor, schema_hash)
    else:
        predictor, log = train(
            factory(derive_seed(cfg.seed, "init")),
            data.fit_set,
            data.validation_set,
            train_cfg,
        )
        logs = [log]
        save_model(model_path, predictor, schema_hash)

    data.transform.save(os.path.join(out_dir, "transform.json"))
    LearningCurveView(logs).render(out_dir)

    thresholds = [DEFAULT_THRESHOLD, data.transform.label_prevalence]
    reports = evaluate_scores(
        predictor.predict(data.test_set), data.test_set.labels, thresholds
    )
    ReportView(
        {"reports": [r.to_dict() for r in reports]}, "test_metrics"
    ).render(out_dir)
    return (
        f"train: {len(logs)} model(s), epochs "
        f"{[log.epochs for log in logs]}, test C-statistic "
        f"{reports[0].c_statistic:.4f} -> {model_path}"
    )
