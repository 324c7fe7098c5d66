# RiskCurveView.py
import os
from typing import List

import matplotlib.pyplot as plt

from logic.Subgroup import CROSSING_LEVEL, RiskCurve
from logic.util.save_svg import save_svg


class RiskCurveView:
    """
    サブグループ別の平均予測確率を pain に対して描く。
    """

    def __init__(self, curve: RiskCurve):
        self.curve = curve

    def render(self, out_dir: str) -> List[str]:
        csv_path = os.path.join(out_dir, "risk_curves.csv")
        svg_path = os.path.join(out_dir, "risk_curves.svg")
        self.curve.to_frame().to_csv(
            csv_path, index=False, lineterminator="\n"
        )

        fig, ax = plt.subplots(figsize=(7, 4.5))
        for label, probs in self.curve.mean_prob.items():
            ax.plot(
                self.curve.pain_grid,
                probs,
                label=f"{label} (n={self.curve.sizes[label]})",
            )
        ax.axhline(CROSSING_LEVEL, color="grey", linewidth=0.8, linestyle=":")
        ax.set_xlim(self.curve.pain_grid[0], self.curve.pain_grid[-1])
        ax.set_ylim(0.0, 1.0)
        ax.set_xlabel("pain score")
        ax.set_ylabel("estimated probability")
        ax.legend(fontsize="small", loc="lower right")
        fig.tight_layout()
        save_svg(fig, svg_path)
        return [csv_path, svg_path]
