# src/core/spectral_ops.py
"""
Hermite–Fourier 解析・合成、乗作用素 T_m、射影 P_k、核 (級数形と Mehler の閉形式)。
"""
import functools
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.core.hermite_core import (
    MultiIndex, as_multi_index, lattice_array, phi_table,
)
from src.core.quadrature import GAUSS_HERMITE, truncated_rule
from src.utils.errors import CapabilityError, DomainError
from src.utils.settings import get_settings
from src.utils.tail_bounds import EXPONENTIAL, POLYNOMIAL, Envelope, level_tail_bound

logger = logging.getLogger(__name__)

HEAT = "heat"
POWER = "power"
TABLE = "table"
CUSTOM = "custom"

# |φ_k(x)| ≤ π^{-1/4} (Indritz の不等式)
PHI_SUP_BOUND = math.pi ** -0.25
_LOG_FLOAT_MAX = math.log(sys.float_info.max)


# ---------------------------------------------------------------- 表象 (シンボル)

@dataclass(frozen=True, eq=False)
class Symbol:
    """
    ℕ₀ⁿ 上の離散関数 m とその減衰の情報。
    envelope は |m(ν)| の上界、lower_envelope は発散の判定にだけ使う下界。
    radial=True なら m(ν) は |ν| だけで決まる。
    """
    kind: str
    dimension: int
    evaluator: object = field(repr=False)
    envelope: Envelope = None
    lower_envelope: Envelope = None
    radial: bool = False
    params: dict = field(default_factory=dict)
    table: dict = field(default=None, repr=False)

    def __call__(self, nu):
        nu = as_multi_index(nu)
        if nu.dimension != self.dimension:
            raise DomainError(
                f"次元が一致しません: シンボルは n={self.dimension}、ν は n={nu.dimension}",
            )
        return float(self.evaluator(nu))

    @property
    def finite_support(self):
        return self.table is not None

    @property
    def support_order(self):
        """有限台のとき台に含まれる最大の |ν|。"""
        if not self.table:
            return 0 if self.table is not None else None
        return max(nu.order for nu in self.table)

    def level_value(self, k):
        if not self.radial:
            raise DomainError("level_value はレベルだけで決まるシンボルにしか使えません。")
        return self(MultiIndex((k,) + (0,) * (self.dimension - 1)))

    def values(self, indices):
        """形状 (count, n) の多重指数配列に対する m の値 (ベクトル化)。"""
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, self.dimension)
        orders = indices.sum(axis=1)
        if self.kind == HEAT:
            t = self.params["t"]
            return np.exp(-t * (2.0 * orders + self.dimension))
        if self.kind == POWER:
            a = self.params["a"]
            return (2.0 * orders + self.dimension) ** (-a)
        if self.kind == TABLE:
            result = np.zeros(len(indices))
            inside = np.flatnonzero(orders <= self.support_order)
            for i in inside:
                result[i] = self.table.get(MultiIndex(tuple(indices[i])), 0.0)
            return result
        if self.radial:
            levels = {int(k): self.level_value(int(k)) for k in np.unique(orders)}
            return np.array([levels[int(k)] for k in orders])
        return np.array([float(self.evaluator(MultiIndex(tuple(row)))) for row in indices])

    def to_dict(self):
        payload = {"kind": self.kind, "dimension": self.dimension, "radial": self.radial}
        payload.update({k: v for k, v in self.params.items() if k != "label"})
        if self.params.get("label"):
            payload["label"] = self.params["label"]
        payload["envelope"] = self.envelope.to_dict() if self.envelope else None
        if self.table is not None:
            payload["support_size"] = len(self.table)
        return payload


def _check_dimension(n):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"次元 n は 1 以上の整数である必要があります: {n}")
    return int(n)


def heat_symbol(t, n=1):
    """Hermite 半群 e^{-tH} のシンボル m_t(ν) = e^{-t(2|ν|+n)}。"""
    n = _check_dimension(n)
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t は正の有限値である必要があります: {t}", t=t)
    t = float(t)
    return Symbol(
        kind=HEAT,
        dimension=n,
        evaluator=lambda nu: math.exp(-t * nu.eigenvalue),
        envelope=Envelope(EXPONENTIAL, math.exp(-t * n), 2.0 * t),
        radial=True,
        params={"t": t},
    )


def power_symbol(a, n=1):
    """m(ν) = (2|ν|+n)^{-a} = λ_ν^{-a}。"""
    n = _check_dimension(n)
    if not (a > 0 and math.isfinite(a)):
        raise DomainError(f"a は正の有限値である必要があります: {a}", a=a)
    a = float(a)
    # min(2,n)(1+|ν|) ≤ 2|ν|+n ≤ max(2,n)(1+|ν|)
    return Symbol(
        kind=POWER,
        dimension=n,
        evaluator=lambda nu: float(nu.eigenvalue) ** (-a),
        envelope=Envelope(POLYNOMIAL, min(2, n) ** (-a), a),
        lower_envelope=Envelope(POLYNOMIAL, float(max(2, n)) ** (-a), a),
        radial=True,
        params={"a": a},
    )


def table_symbol(mapping, n=None):
    """有限台のシンボル。台の外では 0。"""
    table = {}
    for key, value in dict(mapping).items():
        nu = as_multi_index(key)
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"テーブルの値が有限ではありません: {key} -> {value}")
        table[nu] = value
    dims = {nu.dimension for nu in table}
    if n is None:
        if len(dims) != 1:
            raise DomainError("テーブルの次元を決められません (空、または次元が混在しています)。")
        n = dims.pop()
    n = _check_dimension(n)
    if any(d != n for d in dims):
        raise DomainError(f"テーブルに次元 {n} 以外の多重指数が含まれています。")
    return Symbol(
        kind=TABLE,
        dimension=n,
        evaluator=lambda nu: table.get(nu, 0.0),
        radial=False,
        table=table,
    )


def constant_symbol(c, n=1):
    """m ≡ c。上界・下界とも C = |c|, β = 0 の多項式エンベロープ。"""
    n = _check_dimension(n)
    c = float(c)
    envelope = Envelope(POLYNOMIAL, abs(c), 0.0)
    return Symbol(
        kind=CUSTOM,
        dimension=n,
        evaluator=lambda nu: c,
        envelope=envelope,
        lower_envelope=envelope if c != 0.0 else None,
        radial=True,
        params={"label": f"const:{c:g}", "c": c},
    )


def custom_symbol(fn, n=1, envelope=None, lower_envelope=None, radial=False, label=None):
    n = _check_dimension(n)
    return Symbol(
        kind=CUSTOM,
        dimension=n,
        evaluator=fn,
        envelope=envelope,
        lower_envelope=lower_envelope,
        radial=radial,
        params={"label": label} if label else {},
    )


def spectral_symbol(g, n=1, envelope=None, lower_envelope=None, label=None):
    """関数計算 g(H) のシンボル m(ν) = g(λ_ν)。"""
    return custom_symbol(
        lambda nu: g(nu.eigenvalue), n, envelope=envelope,
        lower_envelope=lower_envelope, radial=True, label=label or "spectral",
    )


def oscillator_symbol(n=1):
    """H 自身を乗作用素として書いたもの: m(ν) = λ_ν。"""
    return spectral_symbol(float, n, label="oscillator")


# ---------------------------------------------------------------- 係数ベクトル

@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """|ν| ≤ N の Hermite–Fourier 係数。並びは enumerate_up_to と同じ。"""
    dimension: int
    max_order: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = math.comb(self.max_order + self.dimension, self.dimension)
        if values.shape != (expected,):
            raise DomainError(f"係数の個数が {expected} ではありません: {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @functools.cached_property
    def index_array(self):
        return lattice_array(self.dimension, self.max_order)

    @functools.cached_property
    def _positions(self):
        return {MultiIndex(tuple(row)): i for i, row in enumerate(self.index_array)}

    @property
    def orders(self):
        return self.index_array.sum(axis=1)

    @classmethod
    def zeros(cls, n, N):
        return cls(n, N, np.zeros(math.comb(N + n, n)))

    @classmethod
    def unit(cls, nu, N):
        nu = as_multi_index(nu)
        vec = cls.zeros(nu.dimension, N)
        return vec.with_values({nu: 1.0})

    def with_values(self, mapping):
        values = self.values.copy()
        for key, value in mapping.items():
            nu = as_multi_index(key)
            if nu not in self._positions:
                raise DomainError(f"ν={nu} は |ν| ≤ {self.max_order} の範囲の外です。")
            values[self._positions[nu]] = value
        return CoefficientVector(self.dimension, self.max_order, values)

    def __getitem__(self, nu):
        position = self._positions.get(as_multi_index(nu))
        return 0.0 if position is None else float(self.values[position])

    def norm_squared(self):
        return math.fsum(self.values ** 2)

    def to_frame(self):
        """列 nu_1..nu_n, value の DataFrame。|値| < zero_threshold は 0 に丸める。"""
        threshold = get_settings().zero_threshold
        values = np.where(np.abs(self.values) < threshold, 0.0, self.values)
        frame = pd.DataFrame(self.index_array, columns=[f"nu_{j + 1}" for j in range(self.dimension)])
        frame["value"] = values
        return frame

    def to_dict(self):
        frame = self.to_frame()
        return {
            "dimension": self.dimension,
            "max_order": self.max_order,
            "coefficients": [
                {"nu": [int(v) for v in row[:-1]], "value": float(row[-1])}
                for row in frame.itertuples(index=False, name=None)
            ],
        }

    @classmethod
    def from_frame(cls, frame):
        nu_cols = [c for c in frame.columns if c.startswith("nu_")]
        n = len(nu_cols)
        N = int(frame[nu_cols].sum(axis=1).max())
        vec = cls.zeros(n, N)
        mapping = {tuple(int(v) for v in row[:-1]): float(row[-1])
                   for row in frame[nu_cols + ["value"]].itertuples(index=False, name=None)}
        return vec.with_values(mapping)


# ---------------------------------------------------------------- 解析・合成

def scaled_weights(rule):
    """
    ∫ g dx ≈ Σ_i ŵ_i g(x_i) となる重み。Gauss–Hermite では ŵ_i = w_i e^{x_i²}
    (アンダーフローで w_i = 0 になったノードは 0 のまま)。
    """
    if rule.kind != GAUSS_HERMITE:
        return np.array(rule.weights)
    positive = rule.weights > 0
    scaled = np.zeros_like(rule.weights)
    scaled[positive] = np.exp(np.log(rule.weights[positive]) + rule.nodes[positive] ** 2)
    return scaled


def _basis_matrix(rule, N):
    """B[k, i]: ∫ g φ_k dx ≈ Σ_i B[k, i] g(x_i) となる行列。"""
    return phi_table(N, rule.nodes) * scaled_weights(rule)[None, :]


def contract_axes(tensor, matrix, n):
    # tensor の各軸を matrix の第 2 軸と縮約する
    for axis in range(n):
        tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [axis])), 0, axis)
    return tensor


def analyze(f, N, rule, n=1):
    """
    Hermite–Fourier 係数 f̂(φ_ν) = ∫ f φ_ν dx (|ν| ≤ N) をテンソル積の求積で求める。
    f は n 個の座標配列を受け取り同じ形状の配列を返す関数。
    """
    n = _check_dimension(n)
    if N < 0:
        raise DomainError(f"最大次数 N は非負である必要があります: {N}")
    grids = np.meshgrid(*([rule.nodes] * n), indexing="ij")
    samples = np.asarray(f(*grids), dtype=float)
    if samples.shape != grids[0].shape:
        samples = np.broadcast_to(samples, grids[0].shape)
    if not np.all(np.isfinite(samples)):
        raise DomainError("被積分関数の標本に非有限値があります。")
    if rule.kind == GAUSS_HERMITE and len(rule) < N + 1:
        logger.warning(f"Gauss–Hermite のノード数 {len(rule)} が N+1={N + 1} より少ないため係数は厳密ではありません。")
    coefficients = contract_axes(samples, _basis_matrix(rule, N), n)
    indices = lattice_array(n, N)
    return CoefficientVector(n, N, coefficients[tuple(indices.T)])


def apply_multiplier(m, c):
    """T_m の係数上の作用: 成分ごとの積 m(ν)·c(ν)。"""
    if m.dimension != c.dimension:
        raise DomainError(f"次元が一致しません: シンボル n={m.dimension}, 係数 n={c.dimension}")
    return CoefficientVector(c.dimension, c.max_order, m.values(c.index_array) * c.values)


def _point(x, n):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (n,):
        raise DomainError(f"次元が一致しません: n={n}, dim(x)={x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("評価点に非有限値が含まれています。")
    return x


def _basis_products(indices, tables_x, tables_y=None):
    """Π_j φ_{ν_j}(x_j) (tables_y があれば Π_j φ_{ν_j}(x_j)φ_{ν_j}(y_j))。"""
    product = np.ones(len(indices))
    for j in range(indices.shape[1]):
        column = tables_x[j][indices[:, j]]
        if tables_y is not None:
            column = column * tables_y[j][indices[:, j]]
        product = product * column
    return product


def synthesize(c, x):
    """Σ_{|ν|≤N} c(ν) φ_ν(x)。"""
    x = _point(x, c.dimension)
    tables = [phi_table(c.max_order, [xj])[:, 0] for xj in x]
    return math.fsum(c.values * _basis_products(c.index_array, tables))


def project_level(c, k):
    """P_k: |ν| = k の係数だけを残す。"""
    if not 0 <= k <= c.max_order:
        raise DomainError(f"レベル k={k} は 0..{c.max_order} の外です。")
    return CoefficientVector(c.dimension, c.max_order, np.where(c.orders == k, c.values, 0.0))


# ---------------------------------------------------------------- 核

@dataclass(frozen=True)
class KernelEstimate:
    value: float
    tail_bound: float
    truncation_order: int

    def to_dict(self):
        return {"value": self.value, "tail_bound": self.tail_bound, "N": self.truncation_order}


def kernel_tail_bound(m, N):
    """Σ_{|ν|>N} |m(ν)| · sup|φ_ν(x)φ_ν(y)| の上界 (sup ≤ π^{-n/2})。"""
    prefactor = PHI_SUP_BOUND ** (2 * m.dimension)
    if m.finite_support:
        return prefactor * math.fsum(abs(v) for nu, v in m.table.items() if nu.order > N)
    return level_tail_bound(m.envelope, m.dimension, N, prefactor=prefactor)


def kernel_series(m, x, y, N):
    """打ち切った核 K_m(x,y) = Σ_{|ν|≤N} m(ν) φ_ν(x) φ_ν(y) と裾の上界。"""
    n = m.dimension
    x, y = _point(x, n), _point(y, n)
    if N < 0:
        raise DomainError(f"最大次数 N は非負である必要があります: {N}")
    tables_x = [phi_table(N, [v])[:, 0] for v in x]
    tables_y = [phi_table(N, [v])[:, 0] for v in y]
    indices = lattice_array(n, N)
    # φ(x_j)·φ(y_j) を先に作るので x と y を入れ替えても値は完全に一致する
    terms = m.values(indices) * _basis_products(indices, tables_x, tables_y)
    return KernelEstimate(math.fsum(terms), kernel_tail_bound(m, N), N)


def log_sinh(z):
    # z > 0 で安定な log sinh(z)
    return z + math.log(-math.expm1(-2.0 * z)) - math.log(2.0)


def mehler_overflow_threshold(n):
    """(2π sinh 2t)^{-n/2} が倍精度で表せる最小の t。"""
    target = math.exp(-2.0 * _LOG_FLOAT_MAX / n) / (2.0 * math.pi)
    return 0.5 * math.asinh(target)


def _mehler_log(t, x, y):
    """log K_t(x, y)。x, y は最後の軸が座標の配列。"""
    n = x.shape[-1]
    two_t = 2.0 * t
    log_prefactor = -0.5 * n * (math.log(2.0 * math.pi) + log_sinh(two_t))
    if log_prefactor > _LOG_FLOAT_MAX:
        threshold = mehler_overflow_threshold(n)
        raise CapabilityError(
            f"t={t} では sinh(2t)^(-n/2) がオーバーフローします (t ≥ {threshold:.3e} が必要)。",
            t=t, threshold=threshold,
        )
    with np.errstate(over="ignore"):
        coth = 1.0 / math.tanh(two_t)
        csch = math.exp(-two_t) / (-math.expm1(-2.0 * two_t) / 2.0)
    squares = 0.5 * (np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1))
    cross = np.sum(x * y, axis=-1)
    return log_prefactor - squares * coth + cross * csch


def mehler_kernel(t, x, y):
    """
    Mehler の公式
        K_t(x,y) = (2π)^{-n/2} sinh(2t)^{-n/2} exp(−½(|x|²+|y|²)coth 2t + x·y csch 2t)。
    """
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t は正の有限値である必要があります: {t}", t=t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"次元が一致しません: dim(x)={x.size}, dim(y)={y.size}")
    return float(math.exp(_mehler_log(float(t), x, y)))


def kernel_semigroup_composition(t, s, x, y, rule=None):
    """
    ∫ K_t(x,z) K_s(z,y) dz を求積で計算する。核は座標ごとの積なので 1 次元積分の積になる。
    rule を省略したときは座標ごとに [−(12+max|x_j|,|y_j|), 12+...] の打ち切り則を使う。
    """
    for value in (t, s):
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"t, s は正の有限値である必要があります: {value}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DomainError("次元が一致しません。")
    result = 1.0
    for xj, yj in zip(x, y):
        coordinate_rule = rule or truncated_rule(12.0 + max(abs(xj), abs(yj)), 400)
        z = coordinate_rule.nodes[:, None]
        left = _mehler_log(float(t), np.full_like(z, xj), z)
        right = _mehler_log(float(s), z, np.full_like(z, yj))
        result *= math.fsum(scaled_weights(coordinate_rule) * np.exp(left + right))
    return result
