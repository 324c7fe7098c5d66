# format_report_output.py
import json
from typing import Any, Dict, List

# --- 表の列見出し ---
METRIC_LABELS = {
    "c_statistic": "C-statistic",
    "accuracy": "Accuracy",
    "sensitivity": "Sensitivity",
    "specificity": "Specificity",
    "balance_accuracy": "Balance acc.",
}


def _mean_se(summary: Dict[str, float]) -> str:
    return f"{summary['mean']:.2f} ({summary['se']:.4f})"


def _table(header: List[str], rows: List[List[str]]) -> List[str]:
    widths = [
        max(len(str(r[i])) for r in [header] + rows)
        for i in range(len(header))
    ]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    out = [line, "-" * len(line)]
    for r in rows:
        out.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    return out


def _cell_label(config: Dict[str, Any]) -> str:
    return (
        f"{config['scenario']} snr={config['snr_target']:g} "
        f"p={config['p_signal']} noise={config['p_noise']} "
        f"n={config['n_samples']}"
    )


def _benchmark_lines(report: Dict[str, Any]) -> List[str]:
    methods = report["methods"]
    rows = []
    failures = []
    for cell in report["cells"]:
        label = _cell_label(cell["config"])
        row = [label]
        for name in methods:
            agg = cell["methods"].get(name)
            if agg is None:
                row.append("NA")
                continue
            row.append(_mean_se(agg["metrics"]["c_statistic"]))
        rows.append(row)
        failures += [f"- {label}: {msg}" for msg in cell["failures"]]
    lines = [f"### C-statistic, mean (SE), R = {report['reps']}"]
    lines += _table(["cell"] + list(methods), rows)
    if failures:
        lines.append("")
        lines.append("### failures")
        lines += failures
    return lines


def _aggregate_lines(
    title: str, aggregates: Dict[str, Any], first_column: str
) -> List[str]:
    rows = []
    for name, agg in aggregates.items():
        if agg is None:
            rows.append([name] + ["NA"] * len(METRIC_LABELS))
            continue
        rows.append(
            [name]
            + [_mean_se(agg["metrics"][key]) for key in METRIC_LABELS]
        )
    return [title] + _table(
        [first_column] + list(METRIC_LABELS.values()), rows
    )


def _evaluation_lines(report: Dict[str, Any]) -> List[str]:
    rows = [
        [f"{r['threshold']:.4f}"]
        + [f"{r[key]:.4f}" for key in METRIC_LABELS]
        + [f"{r['tp']}/{r['fp']}/{r['tn']}/{r['fn']}"]
        for r in report["reports"]
    ]
    return ["### test metrics"] + _table(
        ["threshold"] + list(METRIC_LABELS.values()) + ["tp/fp/tn/fn"],
        rows,
    )


def _grid_lines(report: Dict[str, Any]) -> List[str]:
    rows = []
    for point in report["grid"]:
        auc = point["c_statistic"]
        rows.append(
            [
                f"{point['learning_rate']:.6g}",
                (
                    "diverged"
                    if point["diverged"]
                    else f"{point['validation_loss']:.6f}"
                ),
                "NA" if auc is None else f"{auc:.4f}",
                str(point["epochs"]),
                point["stop_reason"] or "-",
            ]
        )
    lines = [f"### best learning rate: {report['best_learning_rate']:.6g}"]
    return lines + _table(
        ["lr", "val. loss", "C-statistic", "epochs", "stop"], rows
    )


def format_report_output(report: Dict[str, Any], format_type: str) -> str:
    """
    レポートの辞書を JSON またはテキストの表に整形する。

    Args:
        report: BenchmarkReport / StudyReport / 評価結果の to_dict()。
        format_type: "JSON" または "TEXT"。

    Returns:
        整形済みの文字列。
    """
    # 1. JSON形式
    if format_type == "JSON":
        return json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True)

    # 2. テキストの表
    if "study" in report:
        lines = _aggregate_lines(
            f"### {report['study']} study, mean (SE)",
            report["methods"],
            "setting",
        )
        spread = report.get("spread")
        lines.append("")
        lines.append(
            "C-statistic spread: "
            + ("NA" if spread is None else f"{spread:.4f}")
        )
        return "\n".join(lines)
    if "cells" in report:
        return "\n".join(_benchmark_lines(report))
    if "reports" in report:
        return "\n".join(_evaluation_lines(report))
    if "grid" in report:
        return "\n".join(_grid_lines(report))
    raise ValueError(f"未対応のレポート形式です: {sorted(report)}")
