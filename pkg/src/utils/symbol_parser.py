# src/utils/symbol_parser.py
import logging
import math
import re
from fractions import Fraction

import pandas as pd

from src.core.spectral_ops import constant_symbol, heat_symbol, power_symbol, table_symbol
from src.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

# シンボル指定の文法: heat:<t> / power:<a> / table:<path> / const:<c>
SYMBOL_PATTERN = re.compile(r'^(heat|power|table|const):(.+)$')
_NU_COLUMN = re.compile(r'^nu_(\d+)$')


def parse_number(text, name="値"):
    """'0.5', '4/3', 'inf' を受け付ける。分数は Fraction 経由で float にする。"""
    raw = str(text).strip()
    if raw.lower() in ("inf", "infinity", "∞", "+inf"):
        return math.inf
    try:
        if "/" in raw:
            return float(Fraction(raw))
        return float(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{name} を数値として解釈できません: '{raw}'", value=raw)


def load_symbol_table(path, n=None):
    """
    列 nu_1..nu_n, value の CSV を読み込んでテーブルシンボルにする。
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"シンボルのテーブル '{path}' を読み込めません: {e}", path=str(path))

    nu_columns = sorted(
        (c for c in frame.columns if _NU_COLUMN.match(str(c))),
        key=lambda c: int(_NU_COLUMN.match(c).group(1)),
    )
    if not nu_columns or "value" not in frame.columns:
        raise ConfigError(
            f"テーブル '{path}' には nu_1..nu_n と value の列が必要です: {list(frame.columns)}",
            path=str(path),
        )
    if n is not None and len(nu_columns) != n:
        raise ConfigError(
            f"テーブル '{path}' の次元 {len(nu_columns)} が --n {n} と一致しません。", path=str(path),
        )
    mapping = {}
    for row in frame[nu_columns + ["value"]].itertuples(index=False, name=None):
        key = tuple(int(v) for v in row[:-1])
        if key in mapping:
            raise ConfigError(f"テーブル '{path}' に重複した多重指数があります: {key}", path=str(path))
        mapping[key] = float(row[-1])
    logger.debug(f"シンボルのテーブル '{path}' から {len(mapping)} 件を読み込みました。")
    try:
        return table_symbol(mapping, n=len(nu_columns))
    except DomainError as e:
        raise ConfigError(f"テーブル '{path}' が不正です: {e.message}", path=str(path))


def parse_symbol(spec, n=1):
    """シンボル指定の文字列を Symbol にする。"""
    match = SYMBOL_PATTERN.match(str(spec).strip())
    if not match:
        raise ConfigError(
            f"シンボル指定 '{spec}' を解釈できません (heat:<t>, power:<a>, table:<path>, const:<c>)。",
            symbol=str(spec),
        )
    kind, argument = match.groups()
    if kind == "table":
        return load_symbol_table(argument, n)

    value = parse_number(argument, name=f"{kind} のパラメータ")
    try:
        if kind == "heat":
            return heat_symbol(value, n)
        if kind == "power":
            return power_symbol(value, n)
        return constant_symbol(value, n)
    except DomainError as e:
        raise ConfigError(f"シンボル指定 '{spec}' が不正です: {e.message}", symbol=str(spec))
