# src/utils/tail_bounds.py
"""
級数の裾 Σ_{|ν|>N} の厳密な上界。

各モジュールの和はすべて「レベル K = |ν| ごとの項数 C(K+n−1, n−1)」×「レベルだけで決まる
上界」の形に押さえられるので、ここではその形の裾だけを扱う:

    Σ_{K>N} P · C(K+n−1, n−1) · (1+K)^γ · (ln(1+K))^B · env(K)^r
"""
import logging
import math
from dataclasses import dataclass

logger = logging.getLogger(__name__)

EXPONENTIAL = "exponential"
POLYNOMIAL = "polynomial"

# 幾何級数の比が 1 未満になるまで明示的に足す項数の上限
_MAX_EXPLICIT_TERMS = 100_000


@dataclass(frozen=True)
class Envelope:
    """
    |m(ν)| の |ν| だけによる評価。
      exponential: C · e^{-rate·|ν|}
      polynomial:  C · (1+|ν|)^{-rate}
    """
    kind: str
    constant: float
    rate: float

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, POLYNOMIAL):
            raise ValueError(f"未知のエンベロープ種別: {self.kind}")
        if self.constant < 0 or self.rate < 0:
            raise ValueError("エンベロープの定数と減衰率は非負である必要があります。")

    def log_bound(self, K):
        if self.constant == 0.0:
            return -math.inf
        if self.kind == EXPONENTIAL:
            return math.log(self.constant) - self.rate * K
        return math.log(self.constant) - self.rate * math.log1p(K)

    def bound(self, K):
        return math.exp(self.log_bound(K))

    def to_dict(self):
        return {"kind": self.kind, "constant": self.constant, "rate": self.rate}


def _log_term(K, n, envelope, r, growth, log_growth, log_prefactor):
    log_binom = math.lgamma(K + n) - math.lgamma(K + 1) - math.lgamma(n)
    log_ln = log_growth * math.log(math.log1p(K)) if log_growth else 0.0
    return (log_prefactor + log_binom + growth * math.log1p(K) + log_ln
            + r * envelope.log_bound(K))


def _ratio_bound(K, n, envelope, r, growth, log_growth):
    # term(K'+1)/term(K') の K' ≥ K での上界 (各因子は K' について単調減少)
    q = (K + n) / (K + 1)
    if growth > 0:
        q *= ((K + 2) / (K + 1)) ** growth
    if log_growth:
        q *= (math.log(K + 2) / math.log1p(K)) ** log_growth
    return q * math.exp(-r * envelope.rate)


def level_tail_bound(envelope, n, N, r=1.0, growth=0.0, log_growth=0.0, prefactor=1.0):
    """
    Σ_{K>N} prefactor · C(K+n−1,n−1) · (1+K)^growth · (ln(1+K))^log_growth · env(K)^r
    の上界を返す。上界が得られない (級数が比較判定で収束しない) 場合は None。
    """
    if envelope is None:
        return None
    if envelope.constant == 0.0 or prefactor == 0.0:
        return 0.0
    log_prefactor = math.log(prefactor)
    K = N + 1

    if envelope.kind == EXPONENTIAL:
        if envelope.rate <= 0.0:
            return None
        explicit = []
        for _ in range(_MAX_EXPLICIT_TERMS):
            q = _ratio_bound(K, n, envelope, r, growth, log_growth)
            log_t = _log_term(K, n, envelope, r, growth, log_growth, log_prefactor)
            if q < 1.0:
                tail = math.fsum(explicit) + math.exp(log_t) / (1.0 - q)
                return tail
            explicit.append(math.exp(log_t))
            K += 1
        logger.debug(f"幾何比が 1 未満になりませんでした (K={K})。裾の上界なし。")
        return None

    # 多項式エンベロープ: C(K+n−1,n−1) ≤ (1+K)^{n−1}, ln u ≤ u^ε/(eε)
    exponent = (n - 1) + growth - r * envelope.rate
    if exponent >= -1.0:
        return None
    factor = 1.0
    if log_growth:
        eps = (-1.0 - exponent) / (2.0 * log_growth)
        factor = (math.e * eps) ** (-log_growth)
        exponent += eps * log_growth
    u0 = N + 1
    integral = u0 ** (exponent + 1.0) / (-exponent - 1.0)
    return math.exp(log_prefactor + r * math.log(envelope.constant)) * factor * integral


def comparison_diverges(lower, n, r=1.0, growth=0.0):
    """
    下側エンベロープ L(K) = C(1+K)^{-β} について、
    Σ_K (1+K)^{n−1}/(n−1)! · (1+K)^growth · L(K)^r が発散するか。
    """
    if lower is None or lower.kind != POLYNOMIAL or lower.constant <= 0.0:
        return False
    return (n - 1) + growth - r * lower.rate >= -1.0
