# subgroup.py
from commands.common import check_schema_hash, prepare_output, require
from logic.CohortData import FittedTransform, apply_transform, load_cohort
from logic.InnerModel import load_model
from logic.RunConfig import RunConfig
from logic.Subgroup import (
    assign_subgroups,
    covariate_r2,
    describe_subgroups,
    risk_curves,
    score_cohort,
)
from ui.RiskCurveView import RiskCurveView
from ui.SubgroupReportView import SubgroupReportView


def run(cfg: RunConfig) -> str:
    """
    BOT/POT で対象を分類し、subgroups.csv, risk_curves.csv/svg, r2.csv,
    characteristics.csv を書き出す。
    """
    out_dir = prepare_output(cfg)
    model_path = require(cfg.model, "--model")
    model, schema_hash = load_model(model_path)
    transform = FittedTransform.load(require(cfg.transform, "--transform"))
    check_schema_hash(transform.schema.schema_hash(), schema_hash, model_path)

    table = load_cohort(require(cfg.data, "--data"), transform.schema)
    cohort = apply_transform(table, transform)
    scores = score_cohort(model, cohort)
    assignments = assign_subgroups(scores, cfg.q)
    curve = risk_curves(model, cohort, assignments)
    view = SubgroupReportView(
        scores,
        assignments,
        covariate_r2(scores, cohort),
        describe_subgroups(table, assignments),
    )
    view.render(out_dir)
    RiskCurveView(curve).render(out_dir)

    summary = f"subgroup: {view.summary_line()}"
    if curve.omitted:
        summary += f" (omitted from curves: {', '.join(curve.omitted)})"
    return summary
