# src/core/hermite_core.py
"""
Hermite 関数 φ_ν の評価と多重指数格子の列挙。

1 次元の φ_k は正規化された三項漸化式
    φ_{k+1}(x) = x·√(2/(k+1))·φ_k(x) − √(k/(k+1))·φ_{k-1}(x),  φ_0(x) = π^{-1/4} e^{-x²/2}
で計算する。ガウス因子 e^{-x²/2} は最初から対数スケールとして別に持ち、仮数が大きくなったら
その都度スケールへ移すので、φ_0 がアンダーフローする領域でも高次の φ_k を正しく求められる。
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.utils.errors import CapabilityError, DomainError
from src.utils.settings import get_settings

logger = logging.getLogger(__name__)

PI_M14 = math.pi ** -0.25
# 仮数がこの値を超えたら対数スケールへ移す
_RESCALE_AT = 1e150
_RESCALE_LOG = math.log(_RESCALE_AT)
# HermiteValue が直接表現する範囲 [1e-300, 1e300]
_LOG_MIN = math.log(1e-300)
_LOG_MAX = math.log(1e300)


@dataclass(frozen=True, order=True)
class MultiIndex:
    entries: tuple

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        if not entries:
            raise DomainError("多重指数の次元は 1 以上である必要があります。")
        if any(v < 0 for v in entries):
            raise DomainError(f"多重指数の成分は非負である必要があります: {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, *entries):
        return cls(tuple(entries))

    @property
    def dimension(self):
        return len(self.entries)

    @property
    def order(self):
        return sum(self.entries)

    @property
    def eigenvalue(self):
        """調和振動子の固有値 λ_ν = 2|ν| + n (整数演算)。"""
        return 2 * self.order + self.dimension

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, j):
        return self.entries[j]

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.entries) + ")"


def as_multi_index(nu):
    if isinstance(nu, MultiIndex):
        return nu
    if isinstance(nu, (int, np.integer)):
        return MultiIndex((int(nu),))
    return MultiIndex(tuple(nu))


@dataclass(frozen=True)
class HermiteValue:
    """
    φ_ν(x) の値。log_scale が None なら value そのもの、
    そうでなければ value × e^{log_scale} を表す (value は符号付きの仮数)。
    """
    value: float
    log_scale: float = None

    @property
    def sign(self):
        return float(np.sign(self.value))

    def log_magnitude(self):
        if self.value == 0.0:
            return -math.inf
        return math.log(abs(self.value)) + (self.log_scale or 0.0)

    def to_float(self):
        if self.log_scale is None:
            return self.value
        return self.value * math.exp(self.log_scale)

    def __float__(self):
        return self.to_float()

    def __mul__(self, other):
        if not isinstance(other, HermiteValue):
            return NotImplemented
        value = self.value * other.value
        log_scale = (self.log_scale or 0.0) + (other.log_scale or 0.0)
        return _normalized(value, log_scale)


def _normalized(mantissa, log_scale):
    """仮数と対数スケールから HermiteValue を作る。表現可能なら log_scale を落とす。"""
    mantissa = float(mantissa)
    if mantissa == 0.0:
        return HermiteValue(0.0)
    log_mag = math.log(abs(mantissa)) + log_scale
    if _LOG_MIN <= log_mag <= _LOG_MAX:
        return HermiteValue(math.copysign(math.exp(log_mag), mantissa))
    return HermiteValue(math.copysign(1.0, mantissa), log_mag)


def _check_degree(degree):
    if isinstance(degree, bool) or not isinstance(degree, (int, np.integer)):
        raise DomainError(f"次数は整数である必要があります: {degree!r}")
    if degree < 0:
        raise DomainError(f"次数は非負である必要があります: {degree}")
    max_degree = get_settings().max_degree
    if degree > max_degree:
        raise CapabilityError(
            f"次数 {degree} は上限 {max_degree} を超えています。",
            degree=int(degree), max_degree=max_degree,
        )


def _as_points(x):
    points = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(points)):
        raise DomainError("評価点に非有限値が含まれています。")
    return points


def _recurrence(degree, x, weighted, on_step=None):
    """
    漸化式を degree まで回し、(仮数, 対数スケール) を返す。
    on_step が与えられれば各次数 k で on_step(k, mant, log_scale) を呼ぶ。
    """
    mant = np.full_like(x, PI_M14)
    prev = np.zeros_like(x)
    log_scale = np.zeros_like(x) if weighted else -0.5 * x * x
    if on_step is not None:
        on_step(0, mant, log_scale)
    for k in range(degree):
        nxt = x * math.sqrt(2.0 / (k + 1)) * mant - math.sqrt(k / (k + 1)) * prev
        prev, mant = mant, nxt
        big = np.abs(mant) > _RESCALE_AT
        if big.any():
            mant[big] /= _RESCALE_AT
            prev[big] /= _RESCALE_AT
            log_scale[big] += _RESCALE_LOG
        if on_step is not None:
            on_step(k + 1, mant, log_scale)
    return mant, log_scale


def phi_scaled(degree, x, weighted=False):
    """φ_degree(x) を (仮数, 対数スケール) の配列の組で返す。"""
    _check_degree(degree)
    points = _as_points(x)
    return _recurrence(int(degree), points, weighted)


def phi_values(degree, x, weighted=False):
    """
    φ_degree(x) を float 配列で返す (表現範囲外は 0 または inf)。
    weighted=True のときは ψ(x) = φ(x)·e^{x²/2} を返す。
    """
    mant, log_scale = phi_scaled(degree, x, weighted)
    with np.errstate(over="ignore", under="ignore"):
        return mant * np.exp(log_scale)


def phi_table(N, x, weighted=False):
    """次数 0..N のすべての φ_k(x) を形状 (N+1, len(x)) の配列で返す。"""
    _check_degree(N)
    points = _as_points(x)
    table = np.empty((int(N) + 1, points.size))

    def store(k, mant, log_scale):
        with np.errstate(over="ignore", under="ignore"):
            table[k] = mant * np.exp(log_scale)

    _recurrence(int(N), points, weighted, on_step=store)
    return table


def eval_phi_1d(degree, x):
    """1 次元 Hermite 関数 φ_degree(x) を HermiteValue で返す。"""
    _check_degree(degree)
    if not math.isfinite(x):
        raise DomainError(f"評価点が有限ではありません: {x}")
    mant, log_scale = _recurrence(int(degree), np.array([float(x)]), weighted=False)
    return _normalized(mant[0], float(log_scale[0]))


def eval_phi_nd(nu, x):
    """テンソル積 φ_ν(x) = Π_j φ_{ν_j}(x_j)。対数スケールのまま掛け合わせる。"""
    nu = as_multi_index(nu)
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    if len(x) != nu.dimension:
        raise DomainError(
            f"次元が一致しません: dim(ν)={nu.dimension}, dim(x)={len(x)}",
            nu_dimension=nu.dimension, x_dimension=len(x),
        )
    result = HermiteValue(1.0)
    for degree, xj in zip(nu, x):
        factor = eval_phi_1d(degree, float(xj))
        if factor.value == 0.0:
            return HermiteValue(0.0)
        result = result * factor
    return result


def level_multiplicity(n, k):
    """レベル |ν| = k の多重指数の個数 C(k+n−1, n−1)。"""
    return math.comb(k + n - 1, n - 1)


def _check_lattice_args(n, k):
    if n < 1:
        raise DomainError(f"次元 n は 1 以上である必要があります: {n}")
    if k < 0:
        raise DomainError(f"レベルは非負である必要があります: {k}")


def _compositions(n, k):
    # 辞書式順で (ν_1, ..., ν_n), Σν_j = k を生成する
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(n - 1, k - first):
            yield (first,) + rest


def enumerate_level(n, k):
    """|ν| = k の多重指数を辞書式順で列挙する。"""
    _check_lattice_args(n, k)
    count = level_multiplicity(n, k)
    if count > 10**8:
        raise CapabilityError(f"レベル集合が大きすぎます (要素数 {count})。", count=count)
    return [MultiIndex(entries) for entries in _compositions(n, k)]


def enumerate_up_to(n, N):
    """|ν| ≤ N の多重指数を、レベル順・各レベル内は辞書式順で一度ずつ返すイテレータ。"""
    _check_lattice_args(n, N)
    for k in range(N + 1):
        for entries in _compositions(n, k):
            yield MultiIndex(entries)


def level_array(n, k):
    """|ν| = k の多重指数を形状 (count, n) の整数配列で返す (辞書式順)。"""
    _check_lattice_args(n, k)
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    if n == 2:
        first = np.arange(k + 1, dtype=np.int64)
        return np.column_stack([first, k - first])
    blocks = []
    for first in range(k + 1):
        rest = level_array(n - 1, k - first)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def lattice_array(n, N):
    """|ν| ≤ N の多重指数を enumerate_up_to と同じ順で形状 (count, n) の配列にしたもの。"""
    _check_lattice_args(n, N)
    return np.vstack([level_array(n, k) for k in range(N + 1)])
