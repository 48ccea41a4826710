# src/core/nuclearity.py
"""
r-核型 (r-nuclear) 判定の和。

  - s_r(m, p₁, p₂) = Σ |m(ν)|^r ‖φ_ν‖_{p₂}^r ‖φ_ν‖_{p₁′}^r  (ノルムは求積で計算)
  - ϰ(m, p₁, p₂)   = Σ_s Σ_{ν∈I_s} (重み) |m(ν)|^r        (ノルムを漸近モデルで置き換えたもの)

p₂ の 3 区分 (1≤p₂<4, p₂=4, 4<p₂≤∞) と p₁ の 3 区分 (p₁>4/3, p₁=4/3, 1<p₁<4/3) の
9 通りごとに重みの形が決まる。和は有限の N で打ち切り、裾の上界が許容誤差を下回ったときだけ
finite と判定する。
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from src.core.hermite_core import as_multi_index, level_array
from src.core.quadrature import EQ4, SUB4, SUPER4, lp_norm_1d
from src.core.spectral_ops import heat_symbol
from src.utils.errors import DomainError, UnsupportedRegimeError
from src.utils.settings import get_settings
from src.utils.tail_bounds import comparison_diverges, level_tail_bound

logger = logging.getLogger(__name__)

GT43 = "gt43"
EQ43 = "eq43"
LT43 = "lt43"

FINITE = "finite"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

KAPPA = "kappa"
S_R = "s_r"

FOUR_THIRDS = Fraction(4, 3)
# Grothendieck の範囲: r ≤ 2/3 ならどの p でもトレース = 固有値和
GROTHENDIECK_ORDER = Fraction(2, 3)


def _exact(value):
    """有理数として扱える指数は Fraction に、∞ はそのまま返す。"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return Fraction(int(value))
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return value
    return Fraction(value).limit_denominator(10**6)


def _reciprocal(p):
    return Fraction(0) if p == math.inf else 1 / p


@dataclass(frozen=True)
class RegimeCase:
    p1: object
    p2: object
    r: object
    p2_regime: str
    p1_branch: str
    k: int
    p1_conjugate: object

    @property
    def label(self):
        return f"{self.p2_regime},{self.p1_branch}"

    def to_dict(self):
        return {
            "p1": float(self.p1),
            "p2": float(self.p2),
            "r": float(self.r),
            "p1_conjugate": float(self.p1_conjugate),
            "p2_regime": self.p2_regime,
            "p1_branch": self.p1_branch,
            "k": self.k,
        }


def classify_regime(p1, p2, r, k=None):
    """(p₁, p₂, r) がどの定理・どの分岐に当たるかを決める。"""
    if k is None:
        k = get_settings().partition_cutoff
    if k < 2:
        raise DomainError(f"分割の閾値 k は 2 以上である必要があります: {k}", k=k)
    p1, p2, r = _exact(p1), _exact(p2), _exact(r)
    if not (isinstance(p1, Fraction) and p1 > 1):
        raise UnsupportedRegimeError(
            f"p1={float(p1)} は定理の仮定 1 < p1 < ∞ を満たしません。",
            hypothesis="1 < p1 < inf", p1=float(p1),
        )
    if not (p2 == math.inf or (isinstance(p2, Fraction) and p2 >= 1)):
        raise UnsupportedRegimeError(
            f"p2={float(p2)} は定理の仮定 1 ≤ p2 ≤ ∞ を満たしません。",
            hypothesis="1 <= p2 <= inf", p2=float(p2),
        )
    if not (isinstance(r, Fraction) and 0 < r <= 1):
        raise UnsupportedRegimeError(
            f"r={float(r)} は定理の仮定 0 < r ≤ 1 を満たしません。",
            hypothesis="0 < r <= 1", r=float(r),
        )

    if p2 == math.inf or p2 > 4:
        p2_regime = SUPER4
    elif p2 == 4:
        p2_regime = EQ4
    else:
        p2_regime = SUB4

    if p1 > FOUR_THIRDS:
        p1_branch = GT43
    elif p1 == FOUR_THIRDS:
        p1_branch = EQ43
    else:
        p1_branch = LT43

    return RegimeCase(
        p1=p1, p2=p2, r=r, p2_regime=p2_regime, p1_branch=p1_branch,
        k=int(k), p1_conjugate=p1 / (p1 - 1),
    )


@dataclass(frozen=True)
class PartitionCell:
    """I_s: ちょうど s 個の成分が k 以下である多重指数の集合。"""
    s: int
    k: int

    def __contains__(self, nu):
        return partition_cell_of(nu, self.k) == self.s


def partition_cell_of(nu, k):
    if k < 2:
        raise DomainError(f"分割の閾値 k は 2 以上である必要があります: {k}", k=k)
    return sum(1 for v in as_multi_index(nu) if v <= k)


def weight_exponents(case):
    """
    重みを 1 成分あたり v^a (ln v)^b (v > k) / k^a (ln k)^b (v ≤ k) と書いたときの (a, b)。
    """
    r = case.r
    inv_p1 = 1 / case.p1
    inv_p2 = _reciprocal(case.p2)
    table = {
        (SUB4, GT43): ((r / 2) * (inv_p2 - inv_p1), 0),
        (SUB4, EQ43): ((r / 2) * (inv_p2 - Fraction(3, 4)), r),
        (SUB4, LT43): ((r / 2) * (inv_p2 + inv_p1 / 3 - 1), 0),
        (EQ4, GT43): ((r / 2) * (Fraction(1, 4) - inv_p1), r),
        (EQ4, EQ43): (-r / 4, 2 * r),
        (EQ4, LT43): ((r / 6) * (inv_p1 - Fraction(9, 4)), r),
        # 1/(3p₂′) = (1 − 1/p₂)/3
        (SUPER4, GT43): ((r / 2) * ((1 - inv_p2) / 3 - inv_p1), 0),
        (SUPER4, EQ43): (-(r / 6) * (inv_p2 + Fraction(5, 4)), r),
        (SUPER4, LT43): ((r / 6) * (inv_p1 - inv_p2 - 2), 0),
    }
    a, b = table[(case.p2_regime, case.p1_branch)]
    return float(a), float(b)


def kappa_weights(case, indices):
    """形状 (count, n) の多重指数配列に対する重み (ベクトル化)。"""
    indices = np.asarray(indices, dtype=np.int64)
    a, b = weight_exponents(case)
    k = case.k
    above = indices > k
    cells = np.count_nonzero(~above, axis=1)
    safe = np.where(above, indices, k + 1).astype(float)
    log_entry = a * np.log(safe)
    if b:
        log_entry = log_entry + b * np.log(np.log(safe))
    log_weight = np.where(above, log_entry, 0.0).sum(axis=1)
    log_k = a * math.log(k) + (b * math.log(math.log(k)) if b else 0.0)
    return np.exp(cells * log_k + log_weight)


def kappa_weight(case, nu):
    nu = as_multi_index(nu)
    return float(kappa_weights(case, np.array([nu.entries]))[0])


@dataclass(frozen=True)
class CriterionReport:
    partial_sum: float
    tail_bound: float
    truncation_order: int
    verdict: str
    method: str
    p1: object
    p2: object
    r: object
    k: int = None
    case: RegimeCase = field(default=None, repr=False)

    def to_dict(self):
        payload = {
            "method": self.method,
            "partial_sum": self.partial_sum,
            "tail_bound": self.tail_bound,
            "N": self.truncation_order,
            "verdict": self.verdict,
            "p1": float(self.p1),
            "p2": float(self.p2),
            "r": float(self.r),
            "k": self.k,
        }
        if self.case is not None:
            payload["p2_regime"] = self.case.p2_regime
            payload["p1_branch"] = self.case.p1_branch
        return payload


def _summation_order(m, N, floor):
    """(打ち切り次数, 途中で止めてよいか)。"""
    n = m.dimension
    if N is not None:
        if N < floor:
            raise DomainError(f"打ち切り次数 N={N} は {floor} 以上である必要があります。", N=N)
        return int(N), False
    base = max(get_settings().default_truncation * n, floor)
    if m.finite_support:
        return max(floor, m.support_order), False
    return base, True


def _accumulate(m, level_terms, tail_after, diverges, N, tol, floor):
    """
    レベル 0, 1, 2, ... の項を足していき (partial_sum, tail, N) を返す。
    N を省略したときは裾の上界が tol を下回った時点で止め、既定の次数で足りなければ
    max_doublings 回まで次数を倍にする。
    """
    order, adaptive = _summation_order(m, N, floor)
    # 裾の上界がどの次数でも得られないなら伸ばしても意味がない
    if adaptive and (diverges or tail_after is None or tail_after(order) is None):
        adaptive = False
    limit = order * 2 ** get_settings().max_doublings if adaptive else order
    pieces = []
    tail = None
    K = -1
    while K < limit:
        K += 1
        pieces.append(level_terms(K))
        if K < floor or tail_after is None:
            continue
        if adaptive:
            tail = tail_after(K)
            if tail is not None and tail < tol:
                break
        elif K == order:
            tail = tail_after(K)
    partial = math.fsum(np.concatenate(pieces))
    return partial, tail, K


def _verdict(tail, diverges, tol):
    if diverges:
        return DIVERGENT
    if tail is not None and tail < tol:
        return FINITE
    return INCONCLUSIVE


def kappa_sum(m, case, N=None, tol=1e-8):
    """
    ϰ(m, p₁, p₂) の部分和 Σ_{|ν|≤N} (重み)·|m(ν)|^r と裾の上界。
    N を省略すると 200n から始めて裾が tol を下回るまで伸ばす。
    """
    n = m.dimension
    r = float(case.r)
    a, b = weight_exponents(case)
    k = case.k
    floor = k * n

    def level_terms(K):
        indices = level_array(n, K)
        return kappa_weights(case, indices) * np.abs(m.values(indices)) ** r

    if m.finite_support:
        entries = [(nu, value) for nu, value in m.table.items()]

        def tail_after(K):
            rest = [kappa_weight(case, nu) * abs(value) ** r for nu, value in entries if nu.order > K]
            return math.fsum(rest)
    elif m.envelope is not None:
        # |ν| = K での重みは (k^{min(a,0)} (1+K)^{a⁺} (ln(1+K))^b)^n 以下
        def tail_after(K):
            return level_tail_bound(
                m.envelope, n, K, r=r,
                growth=n * max(a, 0.0), log_growth=n * b,
                prefactor=float(k) ** (n * min(a, 0.0)),
            )
    else:
        tail_after = None

    diverges = comparison_diverges(m.lower_envelope, n, r=r, growth=n * min(a, 0.0))
    partial, tail, order = _accumulate(m, level_terms, tail_after, diverges, N, tol, floor)
    verdict = _verdict(tail, diverges, tol)
    logger.debug(f"ϰ [{case.label}] N={order}: 部分和 {partial:.10g}, 裾 {tail}, 判定 {verdict}")
    return CriterionReport(
        partial_sum=partial, tail_bound=tail, truncation_order=order, verdict=verdict,
        method=KAPPA, p1=case.p1, p2=case.p2, r=case.r, k=k, case=case,
    )


class _NormTable:
    """1 次元ノルム ‖φ_v‖_p を v = 0, 1, 2, ... の順に必要な分だけ計算して保持する。"""

    def __init__(self, p, tol):
        self.p = float(p)
        self.tol = tol
        self.values = []

    def up_to(self, degree):
        while len(self.values) <= degree:
            v = len(self.values)
            # 正規直交性から ‖φ_v‖_2 = 1
            self.values.append(1.0 if self.p == 2.0 else lp_norm_1d(v, self.p, self.tol))
        return np.array(self.values)


def _norm_growth(p):
    """1 成分あたり ‖φ_v‖_p ≤ (π(v+3/2))^{g} となる g ≥ 0 (p ≥ 2 では g = 0)。"""
    return max(1.0 / float(p) - 0.5, 0.0)


def _norm_decay(p):
    """1 成分あたり ‖φ_v‖_p ≥ (π(v+3/2))^{−h} となる h ≥ 0 (p ≤ 2 では h = 0)。"""
    return max(0.5 - 1.0 / float(p), 0.0)


def s_r_sum(m, p1, p2, r, N=None, tol=1e-8, quad_tol=1e-10):
    """
    s_r(m, p₁, p₂) の部分和。ノルムは求積による値をそのまま使う (p₁′ = p₁/(p₁−1), p₁ = 1 なら ∞)。
    """
    n = m.dimension
    p1, p2, r = _exact(p1), _exact(p2), _exact(r)
    if not (p1 == math.inf or p1 >= 1) or not (p2 == math.inf or p2 >= 1):
        raise DomainError(f"Lebesgue 指数は [1, ∞] にある必要があります: p1={p1}, p2={p2}")
    if not (isinstance(r, Fraction) and 0 < r <= 1):
        raise DomainError(f"r は (0, 1] にある必要があります: {r}", r=float(r))
    if p1 == 1:
        p1_conjugate = math.inf
    elif p1 == math.inf:
        p1_conjugate = Fraction(1)
    else:
        p1_conjugate = p1 / (p1 - 1)
    r_value = float(r)

    norms_p2 = _NormTable(p2, quad_tol)
    norms_dual = _NormTable(p1_conjugate, quad_tol)

    def norm_products(indices):
        top = int(indices.max()) if indices.size else 0
        table = norms_p2.up_to(top) * norms_dual.up_to(top)
        return np.prod(table[indices], axis=1)

    def level_terms(K):
        indices = level_array(n, K)
        return (np.abs(m.values(indices)) * norm_products(indices)) ** r_value

    growth = _norm_growth(p2) + _norm_growth(p1_conjugate)
    decay = _norm_decay(p2) + _norm_decay(p1_conjugate)
    if m.finite_support:
        entries = list(m.table.items())

        def tail_after(K):
            rest = [
                (abs(value) * float(norm_products(np.array([nu.entries]))[0])) ** r_value
                for nu, value in entries if nu.order > K
            ]
            return math.fsum(rest)
    elif m.envelope is not None:
        # Π_j ‖φ_{ν_j}‖ ≤ (1.5π(1+K))^{n·growth}
        def tail_after(K):
            return level_tail_bound(
                m.envelope, n, K, r=r_value,
                growth=r_value * n * growth,
                prefactor=(1.5 * math.pi) ** (r_value * n * growth),
            )
    else:
        tail_after = None

    diverges = comparison_diverges(m.lower_envelope, n, r=r_value, growth=-r_value * n * decay)
    partial, tail, order = _accumulate(m, level_terms, tail_after, diverges, N, tol, 0)
    verdict = _verdict(tail, diverges, tol)
    logger.debug(f"s_r N={order}: 部分和 {partial:.10g}, 裾 {tail}, 判定 {verdict}")
    return CriterionReport(
        partial_sum=partial, tail_bound=tail, truncation_order=order, verdict=verdict,
        method=S_R, p1=p1, p2=p2, r=r, k=None,
    )


@dataclass(frozen=True)
class RatioReport:
    """N と 2N での s_r / ϰ の比とその変化率。"""
    truncation_order: int
    s_r: tuple
    kappa: tuple
    ratio: float
    ratio_doubled: float
    drift: float
    anomaly: bool

    def to_dict(self):
        return {
            "N": self.truncation_order,
            "s_r": list(self.s_r),
            "kappa": list(self.kappa),
            "ratio": self.ratio,
            "ratio_2N": self.ratio_doubled,
            "drift": self.drift,
            "anomaly": self.anomaly,
        }


def _ratio(numerator, denominator):
    """(比, 異常フラグ)。両方 0 なら比 1、片方だけ 0 なら異常。"""
    if numerator == 0.0 and denominator == 0.0:
        return 1.0, False
    if numerator == 0.0 or denominator == 0.0:
        return math.nan, True
    return numerator / denominator, False


def compare_sr_kappa(m, case, N=80, tol=1e-8):
    s_r = [s_r_sum(m, case.p1, case.p2, case.r, N=order, tol=tol).partial_sum for order in (N, 2 * N)]
    kappa = [kappa_sum(m, case, N=order, tol=tol).partial_sum for order in (N, 2 * N)]
    ratio, anomaly = _ratio(s_r[0], kappa[0])
    ratio_doubled, anomaly_doubled = _ratio(s_r[1], kappa[1])
    anomaly = anomaly or anomaly_doubled
    drift = math.nan if anomaly else abs(ratio_doubled - ratio) / abs(ratio)
    if anomaly:
        logger.warning(f"s_r と ϰ の一方だけが 0 です ({case.label}, N={N})。")
    return RatioReport(
        truncation_order=N, s_r=tuple(s_r), kappa=tuple(kappa),
        ratio=ratio, ratio_doubled=ratio_doubled, drift=drift, anomaly=anomaly,
    )


def gl_condition(p):
    """1/r = 1 + |1/p − 1/2| を満たす r。p が整数か Fraction なら Fraction で返す。"""
    exact = isinstance(p, Fraction) or (isinstance(p, (int, np.integer)) and not isinstance(p, bool))
    value = Fraction(p) if exact else float(p)
    if math.isnan(value) or math.isinf(value) or value < 1:
        raise DomainError(f"p は [1, ∞) にある必要があります: {p}", p=float(p))
    if exact:
        return 1 / (1 + abs(1 / value - Fraction(1, 2)))
    return 1.0 / (1.0 + abs(1.0 / value - 0.5))


def gl_hypotheses_met(p, r):
    """トレース = 固有値和が保証される (r が GL 指数に一致するか r ≤ 2/3)。"""
    if float(r) <= float(GROTHENDIECK_ORDER) + 1e-15:
        return True
    return math.isclose(float(r), float(gl_condition(p)), rel_tol=1e-12)


def heat_nuclearity_sweep(t, n=1, p_values=(1, Fraction(4, 3), 2, 4, 6), tol=1e-8):
    """
    e^{-tH} を各 p について (p, p, gl_condition(p)) で判定する。
    p = 1 は ϰ の定理の範囲外なので s_r の直接和を使う。
    """
    m = heat_symbol(t, n)
    reports = []
    for p in p_values:
        r = gl_condition(p)
        if _exact(p) == 1:
            report = s_r_sum(m, p, p, r, tol=tol)
        else:
            report = kappa_sum(m, classify_regime(p, p, r), tol=tol)
        logger.info(f"t={t}, p={float(p)}, r={float(r):.6g}: {report.verdict}")
        reports.append(report)
    return reports
