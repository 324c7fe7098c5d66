# LearningCurveView.py
import os
from typing import List, Sequence

import matplotlib.pyplot as plt
import pandas as pd

from logic.Trainer import TrainLog
from logic.util.save_svg import save_svg


class LearningCurveView:
    """
    エポックごとの訓練損失・検証損失を CSV と SVG に書き出すクラス。
    アンサンブルのときはモデルごとに1本ずつ描く。
    """

    def __init__(self, logs: Sequence[TrainLog]):
        self.logs: List[TrainLog] = list(logs)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "model": i,
                "epoch": r.epoch,
                "train_loss": r.train_loss,
                "validation_loss": r.validation_loss,
            }
            for i, log in enumerate(self.logs)
            for r in log.records
        ]
        return pd.DataFrame(
            rows, columns=["model", "epoch", "train_loss", "validation_loss"]
        )

    def render(self, out_dir: str) -> List[str]:
        """loss.csv と learning_curve.svg を書き出し、パスを返す。"""
        csv_path = os.path.join(out_dir, "loss.csv")
        svg_path = os.path.join(out_dir, "learning_curve.svg")
        frame = self.to_frame()
        frame.to_csv(csv_path, index=False, lineterminator="\n")

        fig, ax = plt.subplots(figsize=(6, 4))
        for i, part in frame.groupby("model"):
            suffix = f" ({i + 1})" if len(self.logs) > 1 else ""
            ax.plot(part["epoch"], part["train_loss"], label="train" + suffix)
            ax.plot(
                part["epoch"],
                part["validation_loss"],
                linestyle="--",
                label="validation" + suffix,
            )
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean cross-entropy loss")
        ax.legend(fontsize="small")
        fig.tight_layout()
        save_svg(fig, svg_path)
        return [csv_path, svg_path]
