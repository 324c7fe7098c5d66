# tests/test_run_config.py
import json

import pytest

from logic.RunConfig import (
    RunConfig,
    parse_cells,
    parse_floats,
    parse_ints,
)
from logic.TrainConfig import OptimizerKind, TrainConfig
from logic.errors import ConfigurationError
from logic.util.format_report_output import format_report_output


def test_parse_helpers():
    assert parse_ints("250,125,1") == [250, 125, 1]
    assert parse_floats("0.5, 0.3") == [0.5, 0.3]
    assert parse_cells("8x5000,16X10000") == [(8, 5000), (16, 10000)]
    with pytest.raises(ConfigurationError):
        parse_cells("8-5000")
    with pytest.raises(ConfigurationError):
        parse_ints("a,b")


def test_arch_must_end_with_output_layer():
    with pytest.raises(ConfigurationError):
        RunConfig("train", arch="8,4").hidden(())


def test_logistic_baseline_has_no_hidden_layers():
    cfg = RunConfig("train", arch="8,1", dropout="0.5", baseline="logistic")
    assert cfg.hidden((5,)) == ()
    assert cfg.dropout_rates() is None


def test_only_given_training_flags_override():
    default = TrainConfig(learning_rate=0.02, max_epochs=7)
    cfg = RunConfig("train", batch_size=8, optimizer="adam", seed=3)
    merged = cfg.train_config(default)
    assert merged.learning_rate == 0.02
    assert merged.max_epochs == 7
    assert merged.batch_size == 8
    assert merged.optimizer is OptimizerKind.ADAM
    assert merged.seed == 3


@pytest.mark.parametrize(
    "kwargs",
    [{"command": "plot"}, {"threads": 0}, {"reps": 0}, {"ensemble": -1}],
)
def test_invalid_run_config(kwargs):
    values = {"command": "train", **kwargs}
    with pytest.raises(ConfigurationError):
        RunConfig(**values)


def test_saved_config_reloads(tmp_path):
    cfg = RunConfig("tune", out=str(tmp_path), lr_grid="0.01,0.02")
    path = cfg.save()
    with open(path, encoding="utf-8") as f:
        assert RunConfig.from_dict(json.load(f)) == cfg


# --- レポートの整形 ---
def test_evaluation_text_table():
    report = {
        "reports": [
            {
                "threshold": 0.5,
                "c_statistic": 0.8,
                "accuracy": 0.75,
                "sensitivity": 0.5,
                "specificity": 1.0,
                "balance_accuracy": 0.75,
                "tp": 1,
                "fp": 0,
                "tn": 2,
                "fn": 1,
            }
        ]
    }
    text = format_report_output(report, "TEXT")
    assert text.splitlines()[0] == "### test metrics"
    assert "1/0/2/1" in text
    assert json.loads(format_report_output(report, "JSON")) == report


def test_benchmark_text_marks_missing_method():
    summary = {"mean": 0.81, "se": 0.0123}
    report = {
        "reps": 2,
        "methods": ["inner", "logistic"],
        "cells": [
            {
                "config": {
                    "scenario": "correct",
                    "snr_target": 3.2,
                    "p_signal": 16,
                    "p_noise": 0,
                    "n_samples": 40000,
                },
                "methods": {
                    "inner": {"metrics": {"c_statistic": summary}},
                    "logistic": None,
                },
                "failures": ["logistic: diverged"],
            }
        ],
    }
    text = format_report_output(report, "TEXT")
    assert "0.81 (0.0123)" in text
    assert "NA" in text
    assert "### failures" in text


def test_unknown_report_shape():
    with pytest.raises(ValueError):
        format_report_output({"other": 1}, "TEXT")
