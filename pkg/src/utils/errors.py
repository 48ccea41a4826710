# src/utils/errors.py
"""
計算モジュール共通の例外クラス。
CLI (src/app.py) は HermiteLabError を捕まえて to_dict() の内容を JSON で出力し、
exit_code をそのままプロセスの終了コードにする。
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSUPPORTED = 3
EXIT_CONVERGENCE = 4


class HermiteLabError(Exception):
    kind = "error"
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        payload = {"kind": self.kind, "message": self.message}
        payload.update(self.details)
        return payload


class DomainError(HermiteLabError, ValueError):
    """入力が定義域の外 (非有限値、次元不一致、範囲外の指数など)。"""
    kind = "domain_error"
    exit_code = EXIT_CONFIG


class CapabilityError(HermiteLabError):
    """設定された上限 (最大次数、ノード数、オーバーフロー閾値) を超えた。"""
    kind = "capability_error"
    exit_code = EXIT_CONFIG


class ConfigError(HermiteLabError):
    kind = "config_error"
    exit_code = EXIT_CONFIG


class ConvergenceError(HermiteLabError):
    """求積の細分化が上限に達しても許容誤差に届かなかった。"""
    kind = "convergence_error"
    exit_code = EXIT_CONVERGENCE

    def __init__(self, message, last_estimate, previous_estimate, **details):
        super().__init__(message, last_estimate=last_estimate,
                         previous_estimate=previous_estimate, **details)
        self.last_estimate = last_estimate
        self.previous_estimate = previous_estimate


class InconclusiveError(HermiteLabError):
    """裾の評価ができないため和が確定できない。"""
    kind = "inconclusive"
    exit_code = EXIT_CONVERGENCE


class UnsupportedRegimeError(HermiteLabError):
    """定理の仮定 (1 < p1 < inf など) を満たさない指数の組。"""
    kind = "unsupported_regime"
    exit_code = EXIT_UNSUPPORTED

    def __init__(self, message, hypothesis, **details):
        super().__init__(message, hypothesis=hypothesis, **details)
        self.hypothesis = hypothesis


class CriterionRefusedError(HermiteLabError):
    """GL 指数で判定が finite にならないためスペクトルトレースの照合を拒否した。"""
    kind = "criterion_refused"
    exit_code = EXIT_UNSUPPORTED

    def __init__(self, message, report):
        super().__init__(message, report=report.to_dict())
        self.report = report
