# src/core/trace_lab.py
"""
核型トレースとスペクトルトレースの計算と照合。

トレースは 3 通りの経路で求めて突き合わせる:
  1. シンボルの和          Tr(T_m) = Σ m(ν)
  2. 核の対角の求積        ∫ Σ_{|ν|≤N} m(ν) φ_ν(x)² dx
  3. Hermite 半群の閉形式  Tr(e^{-tH}) = (e^t − e^{-t})^{-n}
"""
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from src.core.hermite_core import lattice_array, level_array, level_multiplicity, phi_table
from src.core.nuclearity import (
    FINITE, classify_regime, gl_condition, gl_hypotheses_met, kappa_sum, s_r_sum,
)
from src.core.quadrature import gauss_hermite_rule
from src.core.spectral_ops import HEAT, contract_axes, log_sinh, scaled_weights
from src.utils.errors import (
    CapabilityError, ConvergenceError, CriterionRefusedError, DomainError, InconclusiveError,
)
from src.utils.settings import get_settings
from src.utils.tail_bounds import level_tail_bound

logger = logging.getLogger(__name__)

# 対角求積で比較用に増やすノード数
_EXTRA_NODES = 8


def _check_dimension(m, n):
    if n is None:
        return m.dimension
    if n != m.dimension:
        raise DomainError(f"次元が一致しません: シンボルは n={m.dimension}、指定は n={n}")
    return n


def _check_time(t):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t は正の有限値である必要があります: {t}", t=t)
    return float(t)


@dataclass(frozen=True)
class TraceSum:
    value: float
    tail_bound: float
    truncation_order: int

    def to_dict(self):
        return {"value": self.value, "tail_bound": self.tail_bound, "N": self.truncation_order}


def _level_sum(m, K):
    if m.radial:
        return level_multiplicity(m.dimension, K) * m.level_value(K)
    return math.fsum(m.values(level_array(m.dimension, K)))


def trace_symbol_sum(m, n=None, tol=1e-12):
    """
    Σ m(ν) をレベルごとにまとめて足す (レベルだけで決まるシンボルは多重度を掛けて 1 項)。
    裾の上界が tol を下回った次数で止める。
    """
    n = _check_dimension(m, n)
    if m.finite_support:
        return TraceSum(math.fsum(m.table.values()), 0.0, m.support_order)
    if m.envelope is None:
        raise InconclusiveError("台が無限でエンベロープも無いシンボルのトレースは確定できません。")

    settings = get_settings()
    limit = settings.default_truncation * n * 2 ** settings.max_doublings
    levels = []
    tail = None
    for K in range(limit + 1):
        levels.append(_level_sum(m, K))
        tail = level_tail_bound(m.envelope, n, K)
        if tail is None:
            raise InconclusiveError(
                "エンベロープの減衰が遅くトレースの裾を評価できません。",
                envelope=m.envelope.to_dict(),
            )
        if tail < tol:
            value = math.fsum(levels)
            logger.debug(f"Σ m(ν): N={K} で裾 {tail:.3e} < {tol}、値 {value:.12g}")
            return TraceSum(value, tail, K)
    raise InconclusiveError(
        f"次数 {limit} まで足しても裾の上界 {tail:.3e} が許容誤差 {tol} を下回りません。",
        partial_sum=math.fsum(levels), tail_bound=tail, N=limit,
    )


def _diagonal_integral(tensor, N, M):
    """Gauss–Hermite M 点の直積則で ∫ Σ T[ν] Π_j φ_{ν_j}(x_j)² dx を計算する。"""
    n = tensor.ndim
    rule = gauss_hermite_rule(M)
    squares = phi_table(N, rule.nodes).T ** 2
    diagonal = contract_axes(tensor, squares, n)
    weights = scaled_weights(rule)[None, :]
    return float(contract_axes(diagonal, weights, n).reshape(()))


def _level_diagonal_integrals(n, N, M):
    """D_k = Σ_{|ν|=k} Π_j ∫φ_{ν_j}² (k = 0..N)。1 次元の積分の列を n 回畳み込む。"""
    rule = gauss_hermite_rule(M)
    squares = phi_table(N, rule.nodes) ** 2 @ scaled_weights(rule)
    levels = squares
    for _ in range(n - 1):
        levels = np.convolve(levels, squares)[: N + 1]
    return levels


def trace_diagonal_quadrature(m, n=None, N=60, tol=1e-10):
    """
    打ち切った核の対角 K_m^N(x, x) = Σ_{|ν|≤N} m(ν) φ_ν(x)² を ℝⁿ 上で積分する。
    レベルだけで決まるシンボルは Σ_k m_k D_k の形にまとめ、(N+1)ⁿ のテンソルは作らない。
    M = N+1 点と M = N+9 点の Gauss–Hermite 則で計算し、差が tol を超えたら ConvergenceError。
    """
    n = _check_dimension(m, n)
    if N < 0:
        raise DomainError(f"最大次数 N は非負である必要があります: {N}")
    max_nodes = get_settings().max_gauss_hermite_nodes
    if N + 1 + _EXTRA_NODES > max_nodes:
        raise CapabilityError(
            f"N={N} には {N + 1 + _EXTRA_NODES} 点の求積が必要ですが上限は {max_nodes} です。",
            N=N, max_nodes=max_nodes,
        )
    if m.radial:
        levels = np.array([m.level_value(k) for k in range(N + 1)])

        def integral(M):
            return math.fsum(levels * _level_diagonal_integrals(n, N, M))
    else:
        indices = lattice_array(n, N)
        tensor = np.zeros((N + 1,) * n)
        tensor[tuple(indices.T)] = m.values(indices)

        def integral(M):
            return _diagonal_integral(tensor, N, M)

    coarse = integral(N + 1)
    fine = integral(N + 1 + _EXTRA_NODES)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise ConvergenceError(
            f"対角の求積が一致しません (M={N + 1}: {coarse!r}, M={N + 1 + _EXTRA_NODES}: {fine!r})。",
            last_estimate=fine, previous_estimate=coarse, N=N,
        )
    return fine


def semigroup_trace_closed_form(t, n=1):
    """
    Tr(e^{-tH}) = (e^t − e^{-t})^{-n}。Mehler 核の対角の Gaussian 積分の形
    (mehler_trace_integral) とも一致することを確かめてから返す。
    """
    t = _check_time(t)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise DomainError(f"次元 n は 1 以上の整数である必要があります: {n}")
    base = math.exp(-t) / -math.expm1(-2.0 * t)
    try:
        value = base ** n
    except OverflowError:
        raise CapabilityError(f"t={t}, n={n} ではトレースが倍精度の範囲を超えます。", t=t, n=n)

    integral = mehler_trace_integral(t, n)
    tolerance = 1e-12 + n * sys.float_info.epsilon / (t * t)
    if value > 0.0 and abs(integral - value) > tolerance * value:
        raise ConvergenceError(
            f"閉形式 {value!r} と Gaussian 積分の形 {integral!r} が一致しません (t={t}, n={n})。",
            last_estimate=value, previous_estimate=integral, t=t, n=n,
        )
    return value


def mehler_trace_integral(t, n=1):
    """(2π)^{-n/2} sinh(2t)^{-n/2} (π/(coth 2t − csch 2t))^{n/2}。"""
    t = _check_time(t)
    two_t = 2.0 * t
    coth = 1.0 / math.tanh(two_t)
    csch = 2.0 * math.exp(-two_t) / -math.expm1(-2.0 * two_t)
    log_value = 0.5 * n * (
        -math.log(2.0 * math.pi) - log_sinh(two_t) + math.log(math.pi) - math.log(coth - csch)
    )
    return math.exp(log_value)


def level_trace_partial_sums(t, n=1, N=50):
    """Σ_{k≤K} C(k+n−1, n−1) e^{-t(2k+n)} (K = 0..N)。項はすべて正なので単調増加。"""
    t = _check_time(t)
    levels = np.arange(N + 1)
    multiplicities = np.array([level_multiplicity(n, int(k)) for k in levels], dtype=float)
    return np.cumsum(multiplicities * np.exp(-t * (2.0 * levels + n)))


@dataclass(frozen=True)
class SpectralTraceReport:
    p: float
    r: float
    hypotheses_met: bool
    criterion: object
    trace: float
    galerkin_trace: float
    galerkin_size: int
    max_off_diagonal: float
    eigenvalues: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "p": self.p,
            "r": self.r,
            "hypotheses_met": self.hypotheses_met,
            "criterion": self.criterion.to_dict(),
            "trace": self.trace,
            "galerkin_trace": self.galerkin_trace,
            "galerkin_size": self.galerkin_size,
            "max_off_diagonal": self.max_off_diagonal,
            "discrepancy": abs(self.trace - self.galerkin_trace),
        }


def _galerkin_order(m):
    """行列の大きさ C(L+n, n) が galerkin_size 以下になる最大の L (有限台なら台を含む大きさ)。"""
    n = m.dimension
    size = get_settings().galerkin_size
    L = 0
    while math.comb(L + 1 + n, n) <= size:
        L += 1
    if m.finite_support:
        L = max(L, m.support_order)
    return L


def galerkin_matrix(m, L):
    """
    ⟨T_m φ_μ, φ_ν⟩ (|μ|, |ν| ≤ L) を求積で組み立てる。
    A[μ, λ] = ⟨φ_μ, φ_λ⟩ を Gauss–Hermite で計算し、G = A diag(m) Aᵀ。
    """
    n = m.dimension
    rule = gauss_hermite_rule(L + 1)
    basis = phi_table(L, rule.nodes)
    gram_1d = (basis * scaled_weights(rule)[None, :]) @ basis.T
    indices = lattice_array(n, L)
    gram = np.ones((len(indices), len(indices)))
    for j in range(n):
        gram *= gram_1d[np.ix_(indices[:, j], indices[:, j])]
    return gram @ np.diag(m.values(indices)) @ gram.T


def spectral_trace_check(m, p, n=None, tol=1e-8, r=None):
    """
    GL 指数 r = gl_condition(p) で判定が finite なら、Σ m(ν) と
    Galerkin 行列の固有値和を照合する。r を与えた場合は仮定を満たすかどうかを hypotheses_met に記録する。
    """
    n = _check_dimension(m, n)
    if r is None:
        r = gl_condition(p)
    if float(p) == 1.0:
        # ϰ の定理は p₁ = 1 を含まないので s_r を直接使う
        criterion = s_r_sum(m, p, p, r, tol=tol)
    else:
        criterion = kappa_sum(m, classify_regime(p, p, r), tol=tol)
    if criterion.verdict != FINITE:
        raise CriterionRefusedError(
            f"r={float(r):.6g} で判定が {criterion.verdict} のためトレースの照合を行いません。",
            criterion,
        )

    trace = trace_symbol_sum(m, n, tol=min(tol, 1e-12)).value
    L = _galerkin_order(m)
    matrix = galerkin_matrix(m, L)
    off_diagonal = matrix - np.diag(np.diag(matrix))
    eigenvalues = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    galerkin_trace = math.fsum(eigenvalues)
    met = gl_hypotheses_met(p, r)
    if not met:
        logger.warning(f"p={float(p)}, r={float(r)} は GL の仮定を満たしません。両辺を計算するだけです。")
    return SpectralTraceReport(
        p=float(p), r=float(r), hypotheses_met=met, criterion=criterion,
        trace=trace, galerkin_trace=galerkin_trace, galerkin_size=len(matrix),
        max_off_diagonal=float(np.max(np.abs(off_diagonal))) if off_diagonal.size else 0.0,
        eigenvalues=tuple(float(v) for v in eigenvalues),
    )


@dataclass(frozen=True)
class TraceReport:
    symbol_sum: float
    tail_bound: float
    truncation_order: int
    diagonal_quadrature: float
    quadrature_tolerance: float
    closed_form: float = None
    spectral: SpectralTraceReport = None

    @property
    def discrepancies(self):
        routes = {"symbol_sum": self.symbol_sum, "diagonal_quadrature": self.diagonal_quadrature}
        if self.closed_form is not None:
            routes["closed_form"] = self.closed_form
        names = list(routes)
        return {
            f"{a}-{b}": abs(routes[a] - routes[b])
            for i, a in enumerate(names) for b in names[i + 1:]
        }

    def to_dict(self):
        payload = {
            "symbol_sum": self.symbol_sum,
            "tail_bound": self.tail_bound,
            "N": self.truncation_order,
            "diagonal_quadrature": self.diagonal_quadrature,
            "quadrature_tolerance": self.quadrature_tolerance,
            "closed_form": self.closed_form,
            "discrepancies": self.discrepancies,
        }
        if self.spectral is not None:
            payload["spectral"] = self.spectral.to_dict()
        return payload


def trace_report(m, n=None, tol=1e-10, N=None):
    """3 通りのトレースを計算してまとめる。N を省略したときはシンボルの和が止まった次数を使う。"""
    n = _check_dimension(m, n)
    symbol = trace_symbol_sum(m, n, tol=tol)
    order = symbol.truncation_order if N is None else int(N)
    quadrature_tol = max(tol, 1e-12)
    diagonal = trace_diagonal_quadrature(m, n, order, tol=quadrature_tol)
    closed = semigroup_trace_closed_form(m.params["t"], n) if m.kind == HEAT else None
    return TraceReport(
        symbol_sum=symbol.value,
        tail_bound=symbol.tail_bound,
        truncation_order=order,
        diagonal_quadrature=diagonal,
        quadrature_tolerance=quadrature_tol,
        closed_form=closed,
    )
