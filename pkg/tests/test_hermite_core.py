"""Testing the Hermite function evaluation and the lattice enumeration"""

import functools
import math

import numpy as np
import pytest
from scipy.special import eval_hermite, roots_hermite

from src.core.hermite_core import (
    PI_M14, MultiIndex, enumerate_level, enumerate_up_to, eval_phi_1d, eval_phi_nd,
    lattice_array, level_array, level_multiplicity, phi_table, phi_values,
)
from src.utils.errors import CapabilityError, DomainError
from src.utils.settings import configure


def direct_phi(k, x):
    log_norm = -0.5 * (k * math.log(2.0) + math.lgamma(k + 1) + 0.5 * math.log(math.pi))
    return eval_hermite(k, x) * np.exp(-0.5 * x * x + log_norm)


def hermite_coefficients(k):
    # H_k(x) = Σ_m (−1)^m k! / (m! (k−2m)!) (2x)^{k−2m}
    return {
        k - 2 * m: (-1) ** m * math.factorial(k) // (math.factorial(m) * math.factorial(k - 2 * m)) * 2 ** (k - 2 * m)
        for m in range(k // 2 + 1)
    }


def exact_phi(k, x, coefficients):
    """H_k(x) を整数演算で正確に求めてから正規化した φ_k(x)。"""
    p, q = float(x).as_integer_ratio()
    total = sum(c * p ** j * q ** (k - j) for j, c in coefficients.items())
    if total == 0:
        return 0.0
    log_norm = -0.5 * (k * math.log(2.0) + math.lgamma(k + 1) + 0.5 * math.log(math.pi))
    log_abs = math.log(abs(total)) - k * math.log(q) - 0.5 * x * x + log_norm
    return (1.0 if total > 0 else -1.0) * math.exp(log_abs)


def test_phi_zero_at_origin():
    assert eval_phi_1d(0, 0.0).to_float() == pytest.approx(0.7511255444649425, rel=1e-14)
    assert float(eval_phi_nd(MultiIndex.of(0), [0.0])) == pytest.approx(PI_M14, rel=1e-14)


def test_phi_one_closed_form():
    expected = math.sqrt(2.0) * PI_M14 * math.exp(-0.5)
    assert eval_phi_1d(1, 1.0).to_float() == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2, 5, 12, 30])
def test_phi_matches_direct_formula(k):
    x = np.linspace(-5.0, 5.0, 41)
    np.testing.assert_allclose(phi_values(k, x), direct_phi(k, x), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("m", [5, 50, 500])
def test_even_degree_at_origin(m):
    # φ_{2m}(0) = π^{-1/4} (−1)^m √((2m)!) / (2^m m!)
    log_abs = -0.25 * math.log(math.pi) + 0.5 * math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1)
    expected = (-1) ** m * math.exp(log_abs)
    assert eval_phi_1d(2 * m, 0.0).to_float() == pytest.approx(expected, rel=1e-10)
    assert eval_phi_1d(2 * m + 1, 0.0).to_float() == 0.0


def test_far_tail_keeps_log_magnitude():
    value = eval_phi_1d(10, 40.0)
    log_norm = -0.5 * (10 * math.log(2.0) + math.lgamma(11) + 0.5 * math.log(math.pi))
    expected = math.log(eval_hermite(10, 40.0)) - 800.0 + log_norm
    assert value.to_float() == 0.0
    assert value.sign == 1.0
    assert value.log_magnitude() == pytest.approx(expected, rel=1e-12)


def test_parity():
    x = np.linspace(0.1, 4.0, 17)
    for k in (3, 4, 11):
        np.testing.assert_allclose(phi_values(k, -x), (-1) ** k * phi_values(k, x), rtol=1e-13)


def test_phi_table_rows_match_single_degrees():
    x = np.array([-2.5, -0.3, 0.0, 1.7, 6.0])
    table = phi_table(15, x)
    assert table.shape == (16, 5)
    for k in (0, 7, 15):
        np.testing.assert_allclose(table[k], phi_values(k, x), rtol=1e-14)


def test_weighted_table_removes_gaussian():
    x = np.array([-1.0, 0.5, 2.0])
    np.testing.assert_allclose(
        phi_table(6, x, weighted=True)[6], phi_values(6, x) * np.exp(0.5 * x * x), rtol=1e-13,
    )


def test_nd_is_product_of_1d():
    value = float(eval_phi_nd((1, 2), (0.3, -0.7)))
    expected = eval_phi_1d(1, 0.3).to_float() * eval_phi_1d(2, -0.7).to_float()
    assert value == pytest.approx(expected, rel=1e-14)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        eval_phi_1d(-1, 0.0)
    with pytest.raises(DomainError):
        eval_phi_1d(2, math.nan)
    with pytest.raises(DomainError):
        eval_phi_nd((1, 2), (0.3,))
    with pytest.raises(DomainError):
        MultiIndex.of(1, -2)


def test_degree_guard():
    configure(max_degree=100)
    eval_phi_1d(100, 0.5)
    with pytest.raises(CapabilityError):
        eval_phi_1d(101, 0.5)


def test_multi_index_properties():
    nu = MultiIndex.of(2, 1)
    assert nu.order == 3
    assert nu.dimension == 2
    assert nu.eigenvalue == 8
    assert str(nu) == "(2,1)"


def test_enumerate_level_lexicographic():
    assert [nu.entries for nu in enumerate_level(2, 3)] == [(0, 3), (1, 2), (2, 1), (3, 0)]
    assert len(enumerate_level(3, 4)) == level_multiplicity(3, 4) == 15


@pytest.mark.parametrize("n, N", [(1, 6), (2, 5), (3, 4)])
def test_enumerate_up_to_covers_each_index_once(n, N):
    indices = [nu.entries for nu in enumerate_up_to(n, N)]
    assert len(indices) == len(set(indices)) == math.comb(N + n, n)
    orders = [sum(nu) for nu in indices]
    assert orders == sorted(orders)
    np.testing.assert_array_equal(lattice_array(n, N), np.array(indices))


def test_level_array_matches_enumeration():
    for n in (1, 2, 3, 4):
        expected = np.array([nu.entries for nu in enumerate_level(n, 5)])
        np.testing.assert_array_equal(level_array(n, 5), expected)


@pytest.mark.slow
def test_recurrence_matches_explicit_coefficients_up_to_degree_200():
    x = np.linspace(-20.0, 20.0, 81)
    table = phi_table(200, x)
    for k in range(201):
        coefficients = hermite_coefficients(k)
        zeros = roots_hermite(k)[0] if k else np.empty(0)
        for i, xi in enumerate(x):
            expected = exact_phi(k, float(xi), coefficients)
            if abs(expected) <= 1e-300:
                continue
            # 零点のすぐそばでは相対誤差を比べない
            if zeros.size and np.min(np.abs(zeros - xi)) < 1e-4:
                continue
            assert abs(table[k, i] - expected) < 1e-10 * abs(expected), (k, float(xi))


def test_high_degree_inside_oscillatory_region():
    expected = exact_phi(199, 16.7, hermite_coefficients(199))
    assert eval_phi_1d(199, 16.7).to_float() == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_level_counts_by_brute_force(n):
    upper = 30
    axes = [np.arange(upper + 1, dtype=np.int16).reshape([1] * j + [-1] + [1] * (n - 1 - j)) for j in range(n)]
    sums = functools.reduce(np.add, axes)
    counts = np.bincount(sums.ravel(), minlength=upper + 1)
    for k in range(upper + 1):
        assert len(level_array(n, k)) == level_multiplicity(n, k) == counts[k]
    for k in (0, 7, upper):
        assert len(enumerate_level(n, k)) == counts[k]
