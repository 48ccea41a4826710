# src/utils/report_io.py
"""
結果の出力。JSON は最上位に "schema": 1 を持ち、NaN は null、±∞ は文字列 "inf" / "-inf" にする。
CSV は pandas で書き出す (ヘッダ行あり、列順は行の辞書の順)。
"""
import json
import logging
import math
import sys
from fractions import Fraction

import numpy as np
import pandas as pd

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def to_plain(value):
    """JSON にそのまま書ける値へ変換する。"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating, Fraction)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def render_json(payload):
    document = {"schema": SCHEMA_VERSION}
    document.update(to_plain(payload))
    return json.dumps(document, indent=2, ensure_ascii=False)


def rows_to_frame(rows):
    """入れ子の辞書は json_normalize で 'a.b' の列に平坦化する。"""
    return pd.json_normalize(to_plain(rows))


def render_csv(payload):
    rows = payload.get("rows")
    if rows is None:
        rows = [payload.get("report", payload)]
    frame = rows_to_frame(rows)
    return frame.to_csv(index=False, lineterminator="\n")


def render(payload, fmt):
    if fmt == "json":
        return render_json(payload)
    if fmt == "csv":
        return render_csv(payload)
    raise ConfigError(f"未知の出力形式です: {fmt}", format=fmt)


def emit(payload, fmt="json", output=None):
    """結果を標準出力かファイルに書き出す。"""
    text = render(payload, fmt)
    if not text.endswith("\n"):
        text += "\n"
    if output is None:
        sys.stdout.write(text)
        return text
    try:
        with open(output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(f"出力ファイル '{output}' に書き込めません: {e}", path=str(output))
    logger.info(f"結果を '{output}' に書き出しました。")
    return text


def emit_error(error):
    """HermiteLabError を機械可読な形で標準出力に書く。"""
    sys.stdout.write(render_json({"error": error.to_dict()}) + "\n")
