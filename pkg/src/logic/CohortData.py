# CohortData.py
import csv
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from logic.Cohort import PAIN_MAX, PAIN_MIN, Cohort
from logic.errors import ConfigurationError, ContractError, DataFormatError
from logic.util.derive_seed import derive_rng

logger = logging.getLogger(__name__)

MISSING_MARKERS = ["", "NA"]


# --- スキーマ ---
class CovariateKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class CovariateSpec:
    name: str
    kind: CovariateKind = CovariateKind.CONTINUOUS
    levels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", CovariateKind(self.kind))
        if self.levels is not None:
            object.__setattr__(
                self, "levels", tuple(str(v) for v in self.levels)
            )


@dataclass(frozen=True)
class CovariateSchema:
    """
    共変量の順序付き定義と、pain 列・label 列の名前。
    """

    covariates: Tuple[CovariateSpec, ...]
    pain_column: str = "x"
    label_column: str = "y"

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        names = [c.name for c in self.covariates]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ConfigurationError(f"共変量名が重複しています: {duplicated}")
        for column in (self.pain_column, self.label_column):
            if column in names:
                raise ConfigurationError(
                    f"{column} は共変量に含められません。"
                )
        if self.pain_column == self.label_column:
            raise ConfigurationError("pain 列と label 列が同じです。")

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.covariates]

    def to_dict(self) -> Dict[str, Any]:
        covariates = []
        for c in self.covariates:
            entry: Dict[str, Any] = {"name": c.name, "kind": c.kind.value}
            if c.levels is not None:
                entry["levels"] = list(c.levels)
            covariates.append(entry)
        return {
            "covariates": covariates,
            "pain_column": self.pain_column,
            "label_column": self.label_column,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CovariateSchema":
        return cls(
            covariates=tuple(
                CovariateSpec(
                    c["name"], c.get("kind", "continuous"), c.get("levels")
                )
                for c in data["covariates"]
            ),
            pain_column=data.get("pain_column", "x"),
            label_column=data.get("label_column", "y"),
        )

    @classmethod
    def load(cls, path: str) -> "CovariateSchema":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)

    def schema_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def infer_schema(
    path: str, pain_column: str = "x", label_column: str = "y"
) -> CovariateSchema:
    """pain・label 以外のすべての列を連続変数とみなすスキーマ。"""
    header = pd.read_csv(path, nrows=0).columns
    return CovariateSchema(
        covariates=tuple(
            CovariateSpec(str(c))
            for c in header
            if c not in (pain_column, label_column)
        ),
        pain_column=pain_column,
        label_column=label_column,
    )


# --- 読み込み ---
@dataclass
class RawTable:
    """
    欠損をそのまま残した読み込み直後の表。
    line_numbers はファイル上の行番号 (ヘッダーが1行目)。
    """

    frame: pd.DataFrame
    pain: np.ndarray
    labels: Optional[np.ndarray]
    schema: CovariateSchema
    line_numbers: np.ndarray

    def __len__(self) -> int:
        return int(self.pain.shape[0])

    def subset(self, index: Sequence[int]) -> "RawTable":
        idx = np.asarray(index, dtype=np.int64)
        return RawTable(
            self.frame.iloc[idx].reset_index(drop=True),
            self.pain[idx],
            None if self.labels is None else self.labels[idx],
            self.schema,
            self.line_numbers[idx],
        )


def _offending_lines(mask: np.ndarray, lines: np.ndarray) -> List[int]:
    return [int(n) for n in lines[np.asarray(mask, dtype=bool)]]


def _record_lines(path: str) -> np.ndarray:
    """
    空行を除いた各レコードのファイル上の行番号。フィールド数がヘッダーと
    異なる行があれば DataFormatError。
    """
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise DataFormatError(f"CSVが空です: {path}")
        lines: List[int] = []
        malformed: List[int] = []
        for row in reader:
            if not row:
                continue
            lines.append(reader.line_num)
            if len(row) != len(header):
                malformed.append(reader.line_num)
    if malformed:
        raise DataFormatError(
            f"フィールド数がヘッダーの {len(header)} と一致しません",
            malformed,
        )
    return np.asarray(lines, dtype=np.int64)


def load_cohort(path: str, schema: CovariateSchema) -> RawTable:
    """
    CSV を読み込み、空欄と NA を欠損として残す。

    Args:
        path: 入力CSVのパス (UTF-8, カンマ区切り, ヘッダー行あり)。
        schema: 共変量スキーマ。

    Returns:
        RawTable。
    """
    lines = _record_lines(path)
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            na_values=MISSING_MARKERS,
            encoding="utf-8",
        )
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        where = [int(match.group(1))] if match else []
        raise DataFormatError(f"CSVの形式が不正です: {exc}", where) from exc
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f"CSVが空です: {path}") from exc

    required = schema.names + [schema.pain_column]
    missing_columns = [c for c in required if c not in frame.columns]
    if missing_columns:
        raise DataFormatError(f"ヘッダーに列がありません: {missing_columns}")

    if len(frame) != len(lines):
        raise DataFormatError(
            f"CSVの行数を対応づけられません: {len(frame)} / {len(lines)}"
        )

    pain = pd.to_numeric(frame[schema.pain_column], errors="coerce")
    bad = pain.isna().to_numpy()
    if bad.any():
        raise DataFormatError(
            "pain が欠損または数値ではありません", _offending_lines(bad, lines)
        )
    pain = pain.to_numpy(dtype=np.float64)
    out_of_range = (pain < PAIN_MIN) | (pain > PAIN_MAX)
    if out_of_range.any():
        raise DataFormatError(
            "pain が [0, 10] の範囲外です",
            _offending_lines(out_of_range, lines),
        )

    labels = None
    if schema.label_column in frame.columns:
        raw = pd.to_numeric(frame[schema.label_column], errors="coerce")
        bad = ~raw.isin([0, 1]).to_numpy()
        if bad.any():
            raise DataFormatError(
                "label は 0/1 が必要です", _offending_lines(bad, lines)
            )
        labels = raw.to_numpy(dtype=np.float64)

    covariates = pd.DataFrame(index=frame.index)
    for spec in schema.covariates:
        column = frame[spec.name]
        if spec.kind is CovariateKind.CONTINUOUS:
            values = pd.to_numeric(column, errors="coerce")
            bad = (values.isna() & column.notna()).to_numpy()
            if bad.any():
                raise DataFormatError(
                    f"{spec.name} に数値でない値があります",
                    _offending_lines(bad, lines),
                )
            covariates[spec.name] = values.astype(np.float64)
        else:
            covariates[spec.name] = column.astype(object)

    logger.info("loaded %d rows from %s", len(frame), path)
    return RawTable(covariates, pain, labels, schema, lines)


# --- 変換 (補完・one-hot・標準化) ---
class ImputationMode(str, Enum):
    TRAIN_FITTED = "train_fitted"
    PER_SPLIT = "per_split"


@dataclass
class FittedTransform:
    """
    訓練データから求めた補完値・標準化パラメータ・カテゴリ水準。
    """

    schema: CovariateSchema
    means: Dict[str, float] = field(default_factory=dict)
    sds: Dict[str, float] = field(default_factory=dict)
    standardized: Dict[str, bool] = field(default_factory=dict)
    modes: Dict[str, str] = field(default_factory=dict)
    levels: Dict[str, List[str]] = field(default_factory=dict)
    label_prevalence: Optional[float] = None

    @property
    def columns(self) -> List[str]:
        columns: List[str] = []
        for spec in self.schema.covariates:
            if spec.kind is CovariateKind.CONTINUOUS:
                columns.append(spec.name)
            else:
                columns.extend(
                    f"{spec.name}={lv}" for lv in self.levels[spec.name][1:]
                )
        return columns

    @property
    def groups(self) -> Dict[str, List[int]]:
        groups: Dict[str, List[int]] = {}
        position = 0
        for spec in self.schema.covariates:
            width = 1
            if spec.kind is CovariateKind.CATEGORICAL:
                width = len(self.levels[spec.name]) - 1
            groups[spec.name] = list(range(position, position + width))
            position += width
        return groups

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": self.schema.to_dict(),
            "means": self.means,
            "sds": self.sds,
            "standardized": self.standardized,
            "modes": self.modes,
            "levels": self.levels,
            "label_prevalence": self.label_prevalence,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FittedTransform":
        return cls(
            schema=CovariateSchema.from_dict(data["schema"]),
            means={k: float(v) for k, v in data["means"].items()},
            sds={k: float(v) for k, v in data["sds"].items()},
            standardized=dict(data["standardized"]),
            modes=dict(data["modes"]),
            levels={k: list(v) for k, v in data["levels"].items()},
            label_prevalence=data.get("label_prevalence"),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "FittedTransform":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def fit_transform(
    table: RawTable, reference: Optional[FittedTransform] = None
) -> FittedTransform:
    """
    連続変数は平均補完後の平均・標準偏差、カテゴリ変数は最頻値と水準を求める。

    Args:
        table: 当てはめに使う表 (通常は訓練データのみ)。
        reference: 指定するとカテゴリ水準をこちらから引き継ぐ
            (分割ごとに補完する場合に列構成を揃えるため)。
    """
    schema = table.schema
    t = FittedTransform(schema=schema)
    if table.labels is not None and len(table):
        t.label_prevalence = float(np.mean(table.labels))
    for spec in schema.covariates:
        column = table.frame[spec.name]
        if column.notna().sum() == 0:
            raise ConfigurationError(f"{spec.name} の観測値がありません。")
        if spec.kind is CovariateKind.CONTINUOUS:
            mean = float(column.mean())
            imputed = column.fillna(mean).to_numpy(dtype=np.float64)
            sd = float(np.std(imputed))
            t.means[spec.name] = mean
            t.sds[spec.name] = sd
            t.standardized[spec.name] = sd > 0.0
        else:
            observed = column.dropna().astype(str)
            t.modes[spec.name] = str(observed.mode().sort_values().iloc[0])
            if reference is not None:
                t.levels[spec.name] = list(reference.levels[spec.name])
            elif spec.levels is not None:
                t.levels[spec.name] = list(spec.levels)
            else:
                t.levels[spec.name] = sorted(observed.unique().tolist())
    return t


def apply_transform(table: RawTable, t: FittedTransform) -> Cohort:
    """
    補完 → 標準化 / one-hot (先頭水準を除外) した設計行列を Cohort で返す。
    pain は標準化しない。
    """
    blocks: List[np.ndarray] = []
    for spec in t.schema.covariates:
        column = table.frame[spec.name]
        if spec.kind is CovariateKind.CONTINUOUS:
            mean = t.means[spec.name]
            values = column.fillna(mean).to_numpy(dtype=np.float64) - mean
            if t.standardized[spec.name]:
                values = values / t.sds[spec.name]
            blocks.append(values.reshape(-1, 1))
        else:
            values = column.fillna(t.modes[spec.name]).astype(str)
            levels = t.levels[spec.name]
            unseen = ~values.isin(levels)
            if unseen.any():
                logger.warning(
                    "%s: %d rows with unseen levels %s encoded as zeros",
                    spec.name,
                    int(unseen.sum()),
                    sorted(values[unseen].unique().tolist()),
                )
            onehot = pd.get_dummies(
                pd.Categorical(values, categories=levels),
                drop_first=True,
                dtype=np.float64,
            )
            blocks.append(onehot.to_numpy())
    z = (
        np.hstack(blocks)
        if blocks
        else np.zeros((len(table), 0), dtype=np.float64)
    )
    return Cohort(z, table.pain, table.labels, t.columns, t.groups)


# --- 分割 ---
def split_indices(
    n: int, fraction: float, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    一様ランダムな非復元分割。先頭側のサイズは ⌈fraction·n⌉。
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"fraction は (0, 1) が必要です: {fraction}")
    n_first = int(math.ceil(round(fraction * n, 9)))
    order = derive_rng(seed, "split").permutation(n)
    return np.sort(order[:n_first]), np.sort(order[n_first:])


def split(table, fraction: float, seed: int):
    """RawTable / Cohort を (train, test) に分ける。"""
    first, second = split_indices(len(table), fraction, seed)
    return table.subset(first), table.subset(second)


def prepare_splits(
    train_table: RawTable,
    test_table: RawTable,
    mode: ImputationMode = ImputationMode.TRAIN_FITTED,
) -> Tuple[Cohort, Cohort, FittedTransform]:
    """
    TRAIN_FITTED: 訓練データで当てはめた変換を両方に適用する。
    PER_SPLIT: 訓練・テストそれぞれで補完と標準化を当てはめる
    (カテゴリ水準は訓練側に揃える)。
    """
    mode = ImputationMode(mode)
    if len(train_table) == 0:
        raise ContractError("訓練データが空です。")
    t_train = fit_transform(train_table)
    t_test = t_train
    if mode is ImputationMode.PER_SPLIT:
        t_test = fit_transform(test_table, reference=t_train)
    return (
        apply_transform(train_table, t_train),
        apply_transform(test_table, t_test),
        t_train,
    )
