# src/core/quadrature.py
"""
ℝ, ℝⁿ 上の積分。
  - Gauss–Hermite 則 (重み e^{-x²}) による Hermite 関数の内積
  - 打ち切り区間上の複合 Gauss–Kronrod 則による ‖φ_ν‖_p
  - 1 次元 L^p ノルムの漸近モデル (ν^{1/(2p)−1/4}, ν^{−1/8} ln ν, ν^{−1/(6p)−1/12}) とその指数フィット
"""
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import roots_hermite

from src.core.hermite_core import as_multi_index, phi_values
from src.utils.errors import CapabilityError, ConvergenceError, DomainError
from src.utils.settings import get_settings

logger = logging.getLogger(__name__)

GAUSS_HERMITE = "gauss_hermite"
TRUNCATED_ADAPTIVE = "truncated_adaptive"

SUB4 = "sub4"
EQ4 = "eq4"
SUPER4 = "super4"

# 15 点 Gauss–Kronrod 則のノードと重み (区間 [-1, 1])
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])

_TOL_MIN = 1e-14
_TOL_MAX = 1e-2
# ρ_k など内部で使う固定精度
_MODEL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    truncation_radius: float = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("ノードと重みの個数が一致しません。")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise DomainError("ノードは狭義単調増加である必要があります。")
        # 大きな M ではアンダーフローした重みが 0 になる
        if np.any(weights < 0):
            raise DomainError("重みは非負である必要があります。")
        if self.kind not in (GAUSS_HERMITE, TRUNCATED_ADAPTIVE):
            raise DomainError(f"未知の求積則の種別: {self.kind}")
        if (self.kind == TRUNCATED_ADAPTIVE) != (self.truncation_radius is not None):
            raise DomainError("truncation_radius は打ち切り則のときだけ指定します。")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def integrate(self, values):
        """ノード上の値の重み付き和 (Gauss–Hermite なら ∫ g e^{-x²} に対応)。"""
        return float(np.dot(self.weights, values))


def gauss_hermite_rule(M):
    """重み e^{-x²} の M 点 Gauss–Hermite 則。"""
    max_nodes = get_settings().max_gauss_hermite_nodes
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or not 1 <= M <= max_nodes:
        raise CapabilityError(
            f"ノード数 M={M} は範囲 [1, {max_nodes}] の外です。", nodes=M, max_nodes=max_nodes,
        )
    nodes, weights = roots_hermite(int(M))
    return QuadratureRule(nodes, weights, GAUSS_HERMITE)


def _kronrod_points(edges):
    """各小区間 [edges[i], edges[i+1]] 上の 15 点 Kronrod ノードと重み (平坦化済み)。"""
    left = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = left + half * (KRONROD_NODES[None, :] + 1.0)
    weights = half * KRONROD_WEIGHTS[None, :]
    return nodes.ravel(), weights.ravel()


def truncated_rule(radius, panels=64):
    """[-R, R] を等分した複合 15 点 Gauss–Kronrod 則。"""
    if not radius > 0 or not math.isfinite(radius):
        raise DomainError(f"打ち切り半径は正の有限値である必要があります: {radius}")
    if panels < 1:
        raise DomainError(f"小区間の数は 1 以上である必要があります: {panels}")
    edges = np.linspace(-radius, radius, int(panels) + 1)
    nodes, weights = _kronrod_points(edges)
    return QuadratureRule(nodes, weights, TRUNCATED_ADAPTIVE, truncation_radius=float(radius))


def truncation_radius(degree):
    """R = √(2λ_ν) + 12。転回点 √λ_ν より十分外側。"""
    return math.sqrt(2.0 * (2 * degree + 1)) + 12.0


def _check_exponent(p):
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise DomainError(f"Lebesgue 指数は [1, ∞] にある必要があります: {p}", p=p)
    return p


def _check_tol(tol):
    if not _TOL_MIN < tol < _TOL_MAX:
        raise DomainError(f"許容誤差 tol={tol} は ({_TOL_MIN}, {_TOL_MAX}) の外です。", tol=tol)


def _refine_edges(base_edges, level):
    """基本区間それぞれを 2^level 等分した区切り点。"""
    pieces = 2 ** level
    left = base_edges[:-1, None]
    width = np.diff(base_edges)[:, None]
    inner = left + width * (np.arange(pieces)[None, :] / pieces)
    return np.append(inner.ravel(), base_edges[-1])


def _sup_norm_1d(degree):
    # 極値の間隔は 1/√λ 程度なので 0.25/√λ の格子で探してから局所的に磨く
    lam = 2 * degree + 1
    radius = truncation_radius(degree)
    h = 0.25 / math.sqrt(lam)
    grid = np.arange(0.0, radius + h, h)
    values = np.abs(phi_values(degree, grid))
    i = int(np.argmax(values))
    best = float(values[i])
    lo, hi = max(0.0, grid[i] - h), grid[i] + h
    polished = minimize_scalar(
        lambda x: -abs(float(phi_values(degree, x)[0])),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-12},
    )
    return max(best, -float(polished.fun))


@functools.lru_cache(maxsize=8192)
def _lp_norm_1d(degree, p, tol, max_refinements):
    if math.isinf(p):
        return _sup_norm_1d(degree)

    # 零点を小区間の端に置くと |φ|^p は各小区間で (±φ)^p となり滑らか
    radius = truncation_radius(degree)
    if degree >= 1:
        zeros = roots_hermite(degree)[0]
        positive = zeros[zeros > 1e-12]
    else:
        positive = np.empty(0)
    last = positive[-1] if positive.size else 0.0
    # 転回点の外側の裾は幅 0.5 程度に刻んでおく
    tail = np.linspace(last, radius, max(2, int(math.ceil((radius - last) / 0.5)) + 1))
    base_edges = np.concatenate([[0.0], positive, tail[1:]])

    # sup ノルムで割ってから p 乗する (大きな p でも積分が 0 にならない)
    scale = _sup_norm_1d(degree)
    previous = None
    for level in range(max_refinements + 1):
        nodes, weights = _kronrod_points(_refine_edges(base_edges, level))
        with np.errstate(under="ignore"):
            integrand = (np.abs(phi_values(degree, nodes)) / scale) ** p
        # |φ_ν| は偶関数なので [0, R] の 2 倍
        estimate = 2.0 * math.fsum(weights * integrand)
        if previous is not None and abs(estimate - previous) <= tol * abs(estimate):
            logger.debug(f"‖φ_{degree}‖_{p}: 細分レベル {level} で収束しました。")
            return scale * estimate ** (1.0 / p)
        previous = estimate

    raise ConvergenceError(
        f"‖φ_{degree}‖_{p} の求積が {max_refinements} 回の細分で収束しませんでした。",
        last_estimate=scale * estimate ** (1.0 / p),
        previous_estimate=scale * previous ** (1.0 / p),
        degree=degree, p=p,
    )


def lp_norm_1d(degree, p, tol=1e-10):
    p = _check_exponent(p)
    _check_tol(tol)
    return _lp_norm_1d(int(degree), p, float(tol), get_settings().max_refinements)


def lp_norm_phi(nu, p, tol=1e-10):
    """
    ‖φ_ν‖_{L^p(ℝⁿ)}。テンソル積なので座標ごとの 1 次元ノルムの積になる。
    p = ∞ のときは格子上の最大値 (局所的に磨いたもの)。
    """
    nu = as_multi_index(nu)
    p = _check_exponent(p)
    _check_tol(tol)
    refinements = get_settings().max_refinements
    result = 1.0
    for degree in nu:
        result *= _lp_norm_1d(degree, p, float(tol), refinements)
    return result


def norm_regime(p):
    p = _check_exponent(p)
    if math.isclose(p, 4.0, rel_tol=1e-12):
        return EQ4
    return SUB4 if p < 4.0 else SUPER4


def asymptotic_exponent(p):
    """ν → ∞ での ‖φ_ν‖_p のべき指数。"""
    regime = norm_regime(p)
    if regime == SUB4:
        return 1.0 / (2.0 * p) - 0.25
    if regime == EQ4:
        return -0.125
    return -1.0 / (6.0 * p) - 1.0 / 12.0


def asymptotic_norm_model(nu_1d, p, k=None):
    """
    1 次元ノルムの漸近モデル。ν > k では
        ν^{1/(2p)−1/4} (1 ≤ p < 4),  ν^{−1/8} ln ν (p = 4),  ν^{−1/(6p)−1/12} (4 < p ≤ ∞)
    を返し、ν ≤ k では定数 ρ_k = ‖φ_k‖_p を返す。
    """
    if k is None:
        k = get_settings().partition_cutoff
    if k < 2:
        raise DomainError(f"分割の閾値 k は 2 以上である必要があります: {k}", k=k)
    if nu_1d < 0:
        raise DomainError(f"次数は非負である必要があります: {nu_1d}")
    p = _check_exponent(p)
    if nu_1d <= k:
        return lp_norm_1d(int(k), p, _MODEL_TOL)
    power = nu_1d ** asymptotic_exponent(p)
    if norm_regime(p) == EQ4:
        return power * math.log(nu_1d)
    return power


def nd_norm_model(nu, p, k=None):
    """n 次元のモデル値 Π_j asymptotic_norm_model(ν_j, p, k)。"""
    nu = as_multi_index(nu)
    return math.prod(asymptotic_norm_model(degree, p, k) for degree in nu)


@dataclass(frozen=True)
class NormEstimate:
    p: float
    degree: object
    computed: float
    predicted: float
    regime: str

    @property
    def ratio(self):
        return self.computed / self.predicted

    def to_dict(self):
        return {
            "nu": list(as_multi_index(self.degree).entries),
            "p": self.p,
            "computed": self.computed,
            "model": self.predicted,
            "ratio": self.ratio,
            "regime": self.regime,
        }


def estimate_norm(nu, p, k=None, tol=1e-10):
    nu = as_multi_index(nu)
    return NormEstimate(
        p=float(p),
        degree=nu,
        computed=lp_norm_phi(nu, p, tol),
        predicted=nd_norm_model(nu, p, k),
        regime=norm_regime(p),
    )


@dataclass(frozen=True)
class NormFit:
    p: float
    slope: float
    expected: float
    log_power: float = None
    degrees: tuple = field(default=(), repr=False)
    norms: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "p": self.p,
            "slope": self.slope,
            "expected": self.expected,
            "log_power": self.log_power,
            "degrees": list(self.degrees),
            "norms": list(self.norms),
        }


def fit_norm_exponent(p, degree_range, samples, tol=1e-8, log_adjust=0.25):
    """
    等比に取った次数で log‖φ_ν‖_p を log ν に最小二乗で当てはめた傾きを返す。

    p = 4 では log‖φ_ν‖_4 − log_adjust·ln ln ν を当てはめてべき −1/8 を取り出し、
    対数因子のべきは log‖φ_ν‖_4 + (1/8) ln ν を ln ln ν に当てはめて報告する (検証はしない)。
    """
    p = _check_exponent(p)
    lo, hi = degree_range
    if lo < 10 or not lo < hi:
        raise DomainError(f"次数範囲は 10 ≤ lo < hi である必要があります: {degree_range}")
    if samples < 8:
        raise DomainError(f"標本数は 8 以上である必要があります: {samples}")
    degrees = np.unique(np.rint(np.geomspace(lo, hi, samples)).astype(int))
    if degrees.size < 2:
        raise DomainError("異なる次数が 2 つ未満のため当てはめできません。")

    norms = np.array([lp_norm_1d(int(d), p, tol) for d in degrees])
    log_nu = np.log(degrees)
    log_norm = np.log(norms)

    log_power = None
    if norm_regime(p) == EQ4:
        log_log_nu = np.log(log_nu)
        slope = float(np.polyfit(log_nu, log_norm - log_adjust * log_log_nu, 1)[0])
        log_power = float(np.polyfit(log_log_nu, log_norm + 0.125 * log_nu, 1)[0])
    else:
        slope = float(np.polyfit(log_nu, log_norm, 1)[0])
    logger.debug(f"p={p}: 傾き {slope:.5f} (理論値 {asymptotic_exponent(p):.5f})")
    return NormFit(
        p=p,
        slope=slope,
        expected=asymptotic_exponent(p),
        log_power=log_power,
        degrees=tuple(int(d) for d in degrees),
        norms=tuple(float(v) for v in norms),
    )
