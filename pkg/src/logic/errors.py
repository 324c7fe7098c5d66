# errors.py
from typing import Any, Dict, List, Optional, Sequence

# --- 終了コード ---
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class InnerError(Exception):
    """
    ライブラリ全体の基底例外。
    コアロジックは例外を送出するだけで、表示は呼び出し元 (CLI) で行う。
    """

    exit_code = EXIT_VALIDATION


class ConfigurationError(InnerError, ValueError):
    """設定値・次元リストの不整合。"""


class ContractError(InnerError, ValueError):
    """形状や事前条件の違反。"""


class DataFormatError(InnerError, ValueError):
    """
    入力CSVの不正。問題のある行番号 (ヘッダーを1行目とする) を保持する。
    """

    def __init__(self, message: str, lines: Sequence[int] = ()):
        self.lines: List[int] = list(lines)
        if self.lines:
            shown = ", ".join(str(n) for n in self.lines[:20])
            more = " ..." if len(self.lines) > 20 else ""
            message = f"{message} (line: {shown}{more})"
        super().__init__(message)


class UndefinedMetricError(InnerError, ValueError):
    """片方のクラスしか存在せず指標が定義できない。"""


class NumericError(InnerError, ArithmeticError):
    """非有限値などの数値的な失敗。"""

    exit_code = EXIT_NUMERIC


class DivergenceError(NumericError):
    """学習中に損失が非有限になった。"""

    def __init__(self, epoch: int, log: Optional[Any] = None):
        self.epoch = epoch
        self.log = log
        super().__init__(f"損失が発散しました (epoch {epoch})")


class CalibrationError(NumericError):
    """目標SNRがスケール探索区間で到達できない。"""

    def __init__(self, message: str, bracket_snr: Dict[str, float]):
        self.bracket_snr = bracket_snr
        detail = ", ".join(f"{k}={v:.6g}" for k, v in bracket_snr.items())
        super().__init__(f"{message} [{detail}]")


class DegenerateSignalError(NumericError):
    """確率がすべて {0, 1} でSNRの分母が0になる。"""


class SearchFailedError(NumericError):
    """グリッドサーチの全点が発散した。"""

    def __init__(self, message: str, results: List[Any]):
        self.results = results
        super().__init__(message)


class LfdrFitError(NumericError):
    """局所FDRモデルの当てはめに失敗した。"""


def exit_code_for(exc: BaseException) -> int:
    """
    例外から CLI の終了コードを決める。

    Args:
        exc: 捕捉した例外。

    Returns:
        0 以外の終了コード。
    """
    if isinstance(exc, InnerError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (ArithmeticError, FloatingPointError)):
        return EXIT_NUMERIC
    return EXIT_VALIDATION
