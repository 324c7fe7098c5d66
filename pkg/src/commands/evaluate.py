# evaluate.py
from commands.common import check_schema_hash, prepare_output, require
from logic.BalancedEnsemble import load_predictor
from logic.CohortData import FittedTransform, apply_transform, load_cohort
from logic.Metrics import (
    DEFAULT_THRESHOLD,
    evaluate_scores,
    prevalence_threshold,
)
from logic.RunConfig import RunConfig
from ui.ReportView import ReportView


def run(cfg: RunConfig) -> str:
    """
    保存済みのモデルと変換でラベル付き CSV を評価する。
    閾値は 0.5 と訓練データの有病率。
    """
    out_dir = prepare_output(cfg)
    model_path = require(cfg.model, "--model")
    transform = FittedTransform.load(require(cfg.transform, "--transform"))
    predictor, schema_hash = load_predictor(model_path)
    check_schema_hash(transform.schema.schema_hash(), schema_hash, model_path)

    cohort = apply_transform(
        load_cohort(require(cfg.data, "--data"), transform.schema), transform
    )
    labels = cohort.require_labels()
    prevalence = transform.label_prevalence
    if prevalence is None:
        prevalence = prevalence_threshold(labels)
    reports = evaluate_scores(
        predictor.predict(cohort), labels, [DEFAULT_THRESHOLD, prevalence]
    )
    report = {"reports": [r.to_dict() for r in reports]}
    ReportView(report, "metrics").render(out_dir)
    return (
        f"evaluate: n={len(cohort)}, C-statistic "
        f"{reports[0].c_statistic:.4f}, thresholds "
        f"{DEFAULT_THRESHOLD} / {prevalence:.4f}"
    )
