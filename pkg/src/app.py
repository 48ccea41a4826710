# src/app.py
import sys
import os

# --- プロジェクトのルートディレクトリをsys.pathに追加 (一番上に置く) ---
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))
if project_root not in sys.path:
    sys.path.append(project_root)
# ----------------------------------------------------------------------

import argparse
import logging

# 各サブコマンドをインポート
from src.app_commands import (
    criterion_command, kernel_command, norms_command, semigroup_command, trace_command,
)
from src.utils.errors import EXIT_OK, ConfigError, HermiteLabError
from src.utils.report_io import emit, emit_error
from src.utils.run_config import resolve_config

logger = logging.getLogger("src.app")

COMMANDS = {
    "norms": norms_command,
    "criterion": criterion_command,
    "trace": trace_command,
    "semigroup": semigroup_command,
    "kernel": kernel_command,
}


class ConfigArgumentParser(argparse.ArgumentParser):
    """引数の誤りを SystemExit ではなく ConfigError として投げる。"""

    def error(self, message):
        raise ConfigError(f"引数が不正です: {message}")


def build_parser():
    common = ConfigArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--n", type=int, help="次元 (既定 1)")
    common.add_argument("--symbol", help="heat:<t> / power:<a> / table:<path> / const:<c>")
    common.add_argument("--k", type=int, help="分割の閾値 (既定 10)")
    common.add_argument("--N", type=int, help="打ち切り次数 (省略時は裾の上界が tol を下回るまで伸ばす)")
    common.add_argument("--tol", type=float, help="許容誤差 (既定 1e-8)")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--output", help="出力先ファイル (省略時は標準出力)")
    common.add_argument("--config", help="YAML 設定ファイル (numerics: と run:)")
    common.add_argument("--verbose", action="store_true", help="DEBUG ログを標準エラーに出す")

    parser = ConfigArgumentParser(
        prog="hermite-lab",
        description="Hermite 乗作用素の r-核型判定とトレースの数値実験",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ConfigArgumentParser)
    for module in COMMANDS.values():
        module.register(subparsers, common)
    return parser


def configure_logging(verbose=False):
    logging.basicConfig(
        stream=sys.stderr,
        format="%(levelname)s: %(message)s",
        level=logging.DEBUG if verbose else logging.WARNING,
        force=True,
    )


def main(argv=None):
    configure_logging()
    try:
        arguments = vars(build_parser().parse_args(argv))
        config = resolve_config(arguments)
        configure_logging(config.verbose)
        logger.debug(f"実行設定: {config}")
        payload = COMMANDS[config.command].run(config)
        emit(payload, config.format, config.output)
        return EXIT_OK
    except HermiteLabError as e:
        logger.error(f"{e.kind}: {e.message}")
        emit_error(e)
        return e.exit_code
    except Exception as e:
        logger.exception(f"予期せぬエラーが発生しました: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
