# Cohort.py
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from logic.errors import ContractError, DataFormatError

PAIN_MIN = 0.0
PAIN_MAX = 10.0


@dataclass
class Subject:
    """
    1人分のデータ。pain は X_i、covariates は Z_i、label は Y_i。
    """

    pain: float
    covariates: Sequence[float]
    label: Optional[int] = None

    def __post_init__(self):
        self.pain = float(self.pain)
        self.covariates = np.asarray(self.covariates, dtype=np.float64)
        if not PAIN_MIN <= self.pain <= PAIN_MAX:
            raise DataFormatError(f"pain は [0, 10] が必要です: {self.pain}")
        if not np.all(np.isfinite(self.covariates)):
            raise DataFormatError("covariates に非有限値が含まれています。")
        if self.label is not None:
            if self.label not in (0, 1):
                raise DataFormatError(f"label は 0/1 が必要です: {self.label}")
            self.label = int(self.label)


class Cohort:
    """
    Subject の集まりを配列で保持するクラス。

    covariates は (n, p)、pain と labels は長さ n。columns と groups は
    設計行列の列名と、元の共変量ごとの列インデックス (カテゴリ変数は
    one-hot ブロック) を保持する。
    """

    def __init__(
        self,
        covariates: np.ndarray,
        pain: np.ndarray,
        labels: Optional[np.ndarray] = None,
        columns: Optional[List[str]] = None,
        groups: Optional[Dict[str, List[int]]] = None,
    ):
        z = np.asarray(covariates, dtype=np.float64)
        if z.ndim == 1:
            z = z.reshape(-1, 1) if len(z) else z.reshape(0, 0)
        x = np.asarray(pain, dtype=np.float64).reshape(-1)
        if z.ndim != 2 or z.shape[0] != x.shape[0]:
            raise ContractError(
                f"covariates {z.shape} と pain {x.shape} の行数が一致しません。"
            )
        if not np.all(np.isfinite(z)):
            raise DataFormatError("covariates に非有限値が含まれています。")
        bad = np.flatnonzero(~((x >= PAIN_MIN) & (x <= PAIN_MAX)))
        if bad.size:
            raise DataFormatError(
                "pain が [0, 10] の範囲外です", [int(i) for i in bad]
            )
        y = None
        if labels is not None:
            y = np.asarray(labels).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise ContractError("labels の長さが一致しません。")
            if not np.all((y == 0) | (y == 1)):
                raise DataFormatError("labels は 0/1 が必要です。")
            y = y.astype(np.float64)

        self.covariates = z
        self.pain = x
        self.labels = y
        self.columns = (
            list(columns)
            if columns is not None
            else [f"z{j + 1}" for j in range(z.shape[1])]
        )
        self.groups = (
            dict(groups)
            if groups is not None
            else {c: [j] for j, c in enumerate(self.columns)}
        )

    @classmethod
    def from_subjects(cls, subjects: Sequence[Subject]) -> "Cohort":
        if not subjects:
            raise ContractError("subjects が空です。")
        z = np.vstack([s.covariates for s in subjects])
        x = np.array([s.pain for s in subjects])
        has_label = [s.label is not None for s in subjects]
        labels = None
        if all(has_label):
            labels = np.array([s.label for s in subjects])
        return cls(z, x, labels)

    def __len__(self) -> int:
        return int(self.pain.shape[0])

    @property
    def n(self) -> int:
        return len(self)

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise ContractError("ラベルのない対象が含まれています。")
        return self.labels

    @property
    def prevalence(self) -> float:
        return float(np.mean(self.require_labels()))

    def subject(self, i: int) -> Subject:
        label = None if self.labels is None else int(self.labels[i])
        return Subject(float(self.pain[i]), self.covariates[i], label)

    def subset(self, index: Sequence[int]) -> "Cohort":
        idx = np.asarray(index, dtype=np.int64)
        return Cohort(
            self.covariates[idx],
            self.pain[idx],
            None if self.labels is None else self.labels[idx],
            self.columns,
            self.groups,
        )

    def with_pain(self, value: float) -> "Cohort":
        """全員の pain を value に置き換えたコピーを返す。"""
        return Cohort(
            self.covariates,
            np.full(len(self), float(value)),
            self.labels,
            self.columns,
            self.groups,
        )
