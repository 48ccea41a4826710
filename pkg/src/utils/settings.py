# src/utils/settings.py
import dataclasses
import logging
from dataclasses import dataclass

import yaml

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericsSettings:
    """数値計算のガード値と既定値。YAML で上書きできる。"""
    max_degree: int = 10**6
    max_gauss_hermite_nodes: int = 10**4
    partition_cutoff: int = 10
    zero_threshold: float = 1e-14
    max_refinements: int = 12
    default_truncation: int = 200
    max_doublings: int = 3
    galerkin_size: int = 60


_current = NumericsSettings()


def get_settings():
    return _current


def configure(**overrides):
    """プロセス全体の設定を差し替える。未知のキーは ConfigError。"""
    global _current
    known = {f.name for f in dataclasses.fields(NumericsSettings)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"未知の設定項目です: {', '.join(unknown)}", keys=unknown)
    _current = dataclasses.replace(_current, **overrides)
    logger.debug(f"数値設定を更新しました: {overrides}")
    return _current


def reset_settings():
    global _current
    _current = NumericsSettings()
    return _current


def load_settings(path):
    """
    YAML ファイルの `numerics:` セクションを読み込んで設定に反映する。
    セクションが無い場合は何もしない。
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"設定ファイルを開けません ('{path}'): {e}", path=str(path))
    except yaml.YAMLError as e:
        raise ConfigError(f"設定ファイルの YAML が不正です ('{path}'): {e}", path=str(path))

    if not isinstance(document, dict):
        raise ConfigError("設定ファイルの最上位はマッピングである必要があります。", path=str(path))
    numerics = document.get("numerics") or {}
    if numerics:
        configure(**numerics)
    return document
