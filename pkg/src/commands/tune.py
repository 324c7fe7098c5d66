# tune.py
from dataclasses import asdict

from commands.common import (
    model_factory,
    prepare_output,
    prepare_training_data,
)
from logic.RunConfig import RunConfig, parse_floats
from logic.TrainConfig import TrainConfig
from logic.Trainer import grid_search_lr
from ui.ReportView import ReportView


def run(cfg: RunConfig) -> str:
    """学習率のグリッドサーチ結果を tune.json / tune.txt に書き出す。"""
    out_dir = prepare_output(cfg)
    data = prepare_training_data(cfg)
    grid = None if cfg.lr_grid is None else parse_floats(cfg.lr_grid)
    best, points = grid_search_lr(
        model_factory(cfg, data.fit_set.p),
        data.fit_set,
        data.validation_set,
        grid=grid,
        cfg=cfg.train_config(TrainConfig()),
        n_jobs=cfg.threads,
    )
    report = {
        "best_learning_rate": best,
        "grid": [
            dict(
                asdict(p),
                validation_loss=None if p.diverged else p.validation_loss,
            )
            for p in points
        ],
    }
    ReportView(report, "tune").render(out_dir)
    diverged = sum(p.diverged for p in points)
    return (
        f"tune: best learning rate {best:.6g} "
        f"({len(points)} points, {diverged} diverged)"
    )
