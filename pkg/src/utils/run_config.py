# src/utils/run_config.py
import logging
import math
import typing
from dataclasses import dataclass, field
from typing import List, Optional

from typeguard import TypeCheckError, check_type

from src.utils.errors import ConfigError
from src.utils.settings import load_settings

logger = logging.getLogger(__name__)

COMMAND_NAMES = ("norms", "criterion", "trace", "semigroup", "kernel")
FORMATS = ("json", "csv")
METHODS = ("kappa", "s_r")


@dataclass(frozen=True)
class RunConfig:
    """CLI の 1 回の実行の設定。既定値 < YAML の run: セクション < コマンドライン の順で上書きする。"""
    command: str
    n: int = 1
    p1: float = 2.0
    p2: float = 2.0
    r: Optional[float] = None
    gl_order: Optional[float] = None
    symbol: str = "heat:1"
    k: int = 10
    N: Optional[int] = None
    tol: float = 1e-8
    format: str = "json"
    output: Optional[str] = None
    t: List[float] = field(default_factory=lambda: [1.0])
    p: List[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, math.inf])
    nu: List[int] = field(default_factory=lambda: [10, 20, 50, 100, 200])
    fit: bool = False
    fit_range: List[int] = field(default_factory=lambda: [200, 2000])
    samples: int = 12
    compare: bool = False
    method: str = "kappa"
    points: int = 10
    seed: int = 0
    verbose: bool = False
    config: Optional[str] = None


def _coerce(value, hint):
    # YAML の整数を float の項目に入れたときだけ変換する
    if hint in (float, Optional[float]) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if hint == List[float] and isinstance(value, list):
        return [float(v) if isinstance(v, int) and not isinstance(v, bool) else v for v in value]
    return value


def _validate(config):
    problems = []
    if config.command not in COMMAND_NAMES:
        problems.append(f"command は {COMMAND_NAMES} のいずれか")
    if config.format not in FORMATS:
        problems.append(f"format は {FORMATS} のいずれか")
    if config.method not in METHODS:
        problems.append(f"method は {METHODS} のいずれか")
    if config.n < 1:
        problems.append("n ≥ 1")
    if config.k < 2:
        problems.append("k ≥ 2")
    if config.N is not None and config.N < 0:
        problems.append("N ≥ 0")
    if not 0 < config.tol < 1:
        problems.append("0 < tol < 1")
    if config.points < 1 or config.samples < 1:
        problems.append("points, samples ≥ 1")
    if len(config.fit_range) != 2:
        problems.append("fit_range は 2 つの整数")
    if config.r is not None and config.gl_order is not None:
        problems.append("--r と --gl-order は同時に指定できません")
    if problems:
        raise ConfigError("設定が不正です: " + "; ".join(problems), problems=problems)


def resolve_config(arguments):
    """
    argparse の結果 (指定された項目だけを含む辞書) から RunConfig を作る。
    --config があれば YAML の numerics: を数値設定に、run: を既定値に反映する。
    """
    arguments = dict(arguments)
    values = {}
    config_path = arguments.get("config")
    if config_path:
        document = load_settings(config_path)
        run_section = document.get("run") or {}
        if not isinstance(run_section, dict):
            raise ConfigError("設定ファイルの run: はマッピングである必要があります。", path=str(config_path))
        values.update(run_section)
        logger.debug(f"設定ファイル '{config_path}' の run: {sorted(run_section)}")
    values.update(arguments)

    hints = typing.get_type_hints(RunConfig)
    unknown = sorted(set(values) - set(hints))
    if unknown:
        raise ConfigError(f"未知の設定項目です: {', '.join(unknown)}", keys=unknown)
    for name, value in list(values.items()):
        value = _coerce(value, hints[name])
        try:
            check_type(value, hints[name])
        except TypeCheckError as e:
            raise ConfigError(f"設定項目 '{name}' の型が不正です: {e}", key=name)
        values[name] = value

    if "command" not in values:
        raise ConfigError("サブコマンドが指定されていません。")
    config = RunConfig(**values)
    _validate(config)
    return config
