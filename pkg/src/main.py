# main.py
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from commands import benchmark, evaluate, simulate, subgroup, train, tune
from logic.RunConfig import RunConfig, load_run_config
from logic.errors import (
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigurationError,
    exit_code_for,
)

logger = logging.getLogger(__name__)

APP_TITLE = "INNER: ニューラルネットワークを埋め込んだロジスティック回帰"

COMMAND_RUNNERS: Dict[str, Callable[[RunConfig], str]] = {
    "simulate": simulate.run,
    "train": train.run,
    "evaluate": evaluate.run,
    "tune": tune.run,
    "benchmark": benchmark.run,
    "subgroup": subgroup.run,
}

# 値を指定しなかったフラグは RunConfig の既定値に任せる
NOT_GIVEN = None


# --- 引数の定義 ---
class InnerArgumentParser(argparse.ArgumentParser):
    """不正な引数を SystemExit ではなく ConfigurationError で報告する。"""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, help="グローバルシード")
    parser.add_argument("--out", help="出力ディレクトリ")
    parser.add_argument(
        "--config", help="JSON 設定ファイル (フラグの値を上書きする)"
    )
    parser.add_argument("--threads", type=int, help="並列ジョブ数")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")
    return parser


def _data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="入力CSV")
    parser.add_argument("--schema", help="共変量スキーマの JSON")
    parser.add_argument("--pain-column")
    parser.add_argument("--label-column")


def _split_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--test-data", help="テスト用CSV (省略時は分割)")
    parser.add_argument("--train-fraction", type=float)
    parser.add_argument("--validation-fraction", type=float)
    parser.add_argument("--imputation", choices=["train_fitted", "per_split"])


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--arch", help='例: "250,125,1" (末尾は出力層)')
    parser.add_argument("--dropout", help='隠れ層ごとの dropout 率 "0.5,0.3"')
    parser.add_argument("--baseline", choices=["none", "logistic"])
    parser.add_argument(
        "--init", choices=["glorot_uniform", "glorot_normal", "he_uniform"]
    )
    parser.add_argument("--bias", choices=["zeros", "ones"])
    parser.add_argument(
        "--optimizer", choices=["sgd", "adagrad", "adadelta", "adam"]
    )
    parser.add_argument("--lr", dest="learning_rate", type=float)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--max-epochs", type=int)
    parser.add_argument("--gap-delta", type=float)


def _simulation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=["correct", "misspec"])
    parser.add_argument("--n", type=int, help="サンプル数")
    parser.add_argument("--p", type=int, help="シグナル共変量の数")
    parser.add_argument("--noise", type=int, help="ノイズ共変量の数")
    parser.add_argument("--snr", type=float, help="目標 SNR")
    parser.add_argument("--calib-sample-size", type=int)


def _saved_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="model.json")
    parser.add_argument("--transform", help="transform.json")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = InnerArgumentParser(prog="inner", description=APP_TITLE)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="データ生成")
    _simulation_flags(p)

    p = sub.add_parser("train", parents=[common], help="学習")
    _data_flags(p)
    _split_flags(p)
    _model_flags(p)
    p.add_argument("--ensemble", type=int, help="K 個のサブサンプルモデル")
    p.add_argument(
        "--sampling", choices=["none", "undersample", "oversample"]
    )

    p = sub.add_parser("evaluate", parents=[common], help="評価")
    _data_flags(p)
    _saved_model_flags(p)

    p = sub.add_parser("tune", parents=[common], help="学習率の探索")
    _data_flags(p)
    _split_flags(p)
    _model_flags(p)
    p.add_argument("--lr-grid", help='例: "0.005,0.01,0.05"')

    p = sub.add_parser("benchmark", parents=[common], help="ベンチマーク")
    _simulation_flags(p)
    _model_flags(p)
    p.add_argument("--reps", type=int, help="セルあたりの繰り返し回数")
    p.add_argument("--grid-snr", help='例: "0.2,0.8,3.2"')
    p.add_argument("--grid-noise", help='例: "8,12,16"')
    p.add_argument("--grid-cells", help='例: "8x5000,16x10000"')
    p.add_argument("--grid-mode", choices=["blocks", "cartesian"])
    p.add_argument("--reference-grid", action="store_true", default=NOT_GIVEN)
    p.add_argument(
        "--study", choices=["lr-batch", "init", "optimizer", "architecture"]
    )

    p = sub.add_parser("subgroup", parents=[common], help="サブグループ解析")
    _data_flags(p)
    _saved_model_flags(p)
    p.add_argument("--q", type=float, help="局所FDRの閾値")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """
    指定されたフラグから RunConfig を作り、--config の JSON で上書きする。
    """
    skip = {"config", "verbose", "quiet"}
    given = {
        key: value
        for key, value in vars(args).items()
        if key not in skip and value is not NOT_GIVEN
    }
    cfg = RunConfig.from_dict(given)
    if args.config is not None:
        data = load_run_config(args.config)
        if data.pop("command", cfg.command) != cfg.command:
            raise ConfigurationError(
                f"{args.config} は別のコマンドの設定です。"
            )
        cfg = cfg.override(data)
    return cfg


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.INFO
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI のエントリポイント。終了コードを返す。
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigurationError as exc:
        parser.print_usage(sys.stderr)
        logger.error("%s", exc)
        return EXIT_VALIDATION
    configure_logging(args.verbose, args.quiet)
    try:
        cfg = build_run_config(args)
        summary = COMMAND_RUNNERS[cfg.command](cfg)
    except Exception as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        logger.debug("traceback", exc_info=True)
        return exit_code_for(exc)
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
