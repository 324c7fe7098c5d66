# SubgroupReportView.py
import os
from typing import List, Optional, Sequence

import pandas as pd

from logic.InnerModel import TendencyScore
from logic.Subgroup import (
    CovariateR2,
    SubgroupAssignment,
    subgroup_counts,
    subgroup_frame,
)


class SubgroupReportView:
    """
    対象ごとの分類 (subgroups.csv)、共変量ごとの R² (r2.csv)、
    任意でサブグループの特性表 (characteristics.csv) を書き出す。
    """

    def __init__(
        self,
        scores: Sequence[TendencyScore],
        assignments: Sequence[SubgroupAssignment],
        r2: Sequence[CovariateR2],
        characteristics: Optional[pd.DataFrame] = None,
    ):
        self.scores = list(scores)
        self.assignments = list(assignments)
        self.r2 = list(r2)
        self.characteristics = characteristics

    def r2_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "covariate": r.covariate,
                    "r2_bot": r.r2_bot,
                    "r2_pot": r.r2_pot,
                }
                for r in self.r2
            ],
            columns=["covariate", "r2_bot", "r2_pot"],
        )

    def summary_line(self) -> str:
        counts = subgroup_counts(self.assignments)
        return "; ".join(f"{label}: {n}" for label, n in counts.items())

    def render(self, out_dir: str) -> List[str]:
        paths = [
            os.path.join(out_dir, "subgroups.csv"),
            os.path.join(out_dir, "r2.csv"),
        ]
        subgroup_frame(self.scores, self.assignments).to_csv(
            paths[0], index=False, lineterminator="\n"
        )
        # 定義できない R² は NA
        self.r2_frame().to_csv(
            paths[1], index=False, na_rep="NA", lineterminator="\n"
        )
        if self.characteristics is not None:
            path = os.path.join(out_dir, "characteristics.csv")
            self.characteristics.to_csv(
                path, index_label="characteristic", lineterminator="\n"
            )
            paths.append(path)
        return paths
