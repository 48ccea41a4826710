"""Testing Hermite-Fourier analysis, multipliers and kernels"""

import math

import numpy as np
import pytest

from src.core.hermite_core import PI_M14, phi_table, phi_values
from src.core.quadrature import gauss_hermite_rule, truncated_rule
from src.core.spectral_ops import (
    CoefficientVector, analyze, apply_multiplier, constant_symbol, heat_symbol,
    kernel_semigroup_composition, kernel_series, kernel_tail_bound, mehler_kernel,
    mehler_overflow_threshold, oscillator_symbol, power_symbol, project_level,
    scaled_weights, spectral_symbol, synthesize, table_symbol,
)
from src.utils.errors import CapabilityError, DomainError
from src.utils.settings import configure
from src.utils.tail_bounds import EXPONENTIAL, POLYNOMIAL


def test_heat_symbol_values_and_envelope():
    m = heat_symbol(1.0, 2)
    assert m((1, 2)) == math.exp(-8.0)
    assert m.envelope.kind == EXPONENTIAL
    assert m.envelope.constant == pytest.approx(math.exp(-2.0))
    assert m.envelope.rate == pytest.approx(2.0)
    np.testing.assert_allclose(m.values(np.array([[1, 2], [0, 0]])), [math.exp(-8.0), math.exp(-2.0)], rtol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_power_symbol_envelopes_bracket_values(n):
    m = power_symbol(1.5, n)
    assert m.envelope.kind == POLYNOMIAL
    for order in (0, 4, 17, 300):
        nu = (order,) + (0,) * (n - 1)
        assert m.lower_envelope.bound(order) <= m(nu) * (1 + 1e-12)
        assert m(nu) <= m.envelope.bound(order) * (1 + 1e-12)


def test_table_symbol_outside_support():
    m = table_symbol({(0,): 5.0, (3,): -2.0})
    assert m(0) == 5.0
    assert m(3) == -2.0
    assert m(7) == 0.0
    assert m.support_order == 3
    np.testing.assert_array_equal(m.values(np.array([[0], [1], [3], [9]])), [5.0, 0.0, -2.0, 0.0])


def test_spectral_and_oscillator_symbols():
    assert oscillator_symbol(2)((1, 1)) == 6.0
    g = spectral_symbol(lambda lam: 1.0 / lam, 1)
    assert g(4) == pytest.approx(1.0 / 9.0)
    assert g.radial


def test_symbol_dimension_mismatch():
    with pytest.raises(DomainError):
        heat_symbol(1.0, 2)((1,))
    with pytest.raises(DomainError):
        heat_symbol(-1.0)


@pytest.fixture
def rule():
    return gauss_hermite_rule(16)


def test_analyze_single_hermite_function(rule):
    c = analyze(lambda x: phi_values(3, x), 5, rule)
    assert c[3] == pytest.approx(1.0, abs=1e-10)
    for k in (0, 1, 2, 4, 5):
        assert abs(c[k]) < 1e-10


def test_analyze_linear_combination(rule):
    c = analyze(lambda x: phi_values(0, x) + 2.0 * phi_values(2, x), 4, rule)
    np.testing.assert_allclose(c.values, [1.0, 0.0, 2.0, 0.0, 0.0], atol=1e-10)


def test_analyze_explicit_gaussian(rule):
    c = analyze(lambda x: np.exp(-0.5 * x * x) * PI_M14, 2, rule)
    assert c[0] == pytest.approx(1.0, abs=1e-12)


def test_analyze_in_two_dimensions(rule):
    c = analyze(lambda x, y: phi_values(1, x) * phi_values(2, y), 3, rule, n=2)
    assert c[(1, 2)] == pytest.approx(1.0, abs=1e-10)
    assert abs(c[(2, 1)]) < 1e-10


def test_analyze_with_truncated_rule():
    c = analyze(lambda x: phi_values(4, x), 6, truncated_rule(14.0, 64))
    assert c[4] == pytest.approx(1.0, abs=1e-10)
    assert abs(c[2]) < 1e-10


def test_analyze_rejects_non_finite(rule):
    with pytest.raises(DomainError):
        analyze(lambda x: np.full_like(x, np.nan), 2, rule)


def test_apply_heat_to_unit_vector():
    c = CoefficientVector.unit((2,), 5)
    out = apply_multiplier(heat_symbol(1.0), c)
    assert out[2] == pytest.approx(math.exp(-5.0), rel=1e-15)
    assert out.norm_squared() == pytest.approx(math.exp(-10.0))


def test_apply_identity_and_table():
    c = CoefficientVector.zeros(1, 1).with_values({0: 2.0, 1: 3.0})
    np.testing.assert_array_equal(apply_multiplier(constant_symbol(1.0), c).values, c.values)
    np.testing.assert_array_equal(apply_multiplier(table_symbol({0: 5.0}), c).values, [10.0, 0.0])


def test_synthesize():
    assert synthesize(CoefficientVector.unit((0,), 0), [0.0]) == pytest.approx(PI_M14, rel=1e-14)
    assert synthesize(CoefficientVector.zeros(2, 3), [0.4, -1.0]) == 0.0
    with pytest.raises(DomainError):
        synthesize(CoefficientVector.zeros(2, 3), [0.4])


def test_round_trip(rule):
    c = analyze(lambda x: phi_values(3, x), 5, rule)
    for x in np.linspace(-4.0, 4.0, 9):
        assert synthesize(c, [x]) == pytest.approx(float(phi_values(3, x)[0]), abs=1e-10)


def test_orthonormality_up_to_fifty():
    rule = gauss_hermite_rule(60)
    basis = phi_table(50, rule.nodes)
    gram = (basis * scaled_weights(rule)[None, :]) @ basis.T
    np.testing.assert_allclose(gram, np.eye(51), rtol=0, atol=1e-12)


@pytest.mark.parametrize("m", [heat_symbol(1.0), power_symbol(1.0), power_symbol(0.5)])
def test_eigenfunction_action(m):
    rule = gauss_hermite_rule(40)
    grid = np.linspace(-3.0, 3.0, 7)
    for degree in range(0, 21, 5):
        c = apply_multiplier(m, analyze(lambda x: phi_values(degree, x), 25, rule))
        for x in grid:
            expected = m(degree) * float(phi_values(degree, x)[0])
            assert synthesize(c, [x]) == pytest.approx(expected, abs=1e-8)


def test_project_level():
    rng = np.random.default_rng(7)
    c = CoefficientVector(2, 2, rng.normal(size=6))
    level_one = project_level(c, 1)
    kept = [tuple(nu) for nu, v in zip(c.index_array, level_one.values) if v != 0.0]
    assert sorted(kept) == [(0, 1), (1, 0)]
    np.testing.assert_array_equal(project_level(level_one, 1).values, level_one.values)
    np.testing.assert_array_equal(project_level(level_one, 2).values, np.zeros(6))
    total = sum(project_level(c, k).values for k in range(3))
    np.testing.assert_allclose(total, c.values, rtol=0, atol=0)
    with pytest.raises(DomainError):
        project_level(c, 3)


def test_coefficient_frame_zero_threshold():
    c = CoefficientVector.zeros(1, 2).with_values({0: 1e-16, 1: 0.5})
    frame = c.to_frame()
    assert list(frame.columns) == ["nu_1", "value"]
    assert frame["value"].tolist() == [0.0, 0.5, 0.0]
    back = CoefficientVector.from_frame(frame)
    assert back[1] == 0.5


def test_kernel_series_single_term():
    estimate = kernel_series(table_symbol({0: 1.0}), [0.0], [0.0], 4)
    assert estimate.value == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)
    assert estimate.tail_bound == 0.0


def test_kernel_series_symmetry():
    m = heat_symbol(0.5, 2)
    x, y = [0.3, -1.2], [2.1, 0.7]
    assert kernel_series(m, x, y, 25).value == kernel_series(m, y, x, 25).value


def test_kernel_series_matches_mehler():
    estimate = kernel_series(heat_symbol(1.0), [0.0], [0.0], 60)
    assert estimate.value == pytest.approx(mehler_kernel(1.0, [0.0], [0.0]), abs=1e-10)
    assert estimate.tail_bound < 1e-40


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("n", [1, 2])
def test_series_converges_to_closed_form(t, n):
    m = heat_symbol(t, n)
    N = 1
    while kernel_tail_bound(m, N) >= 1e-9:
        N += 1
    rng = np.random.default_rng(11)
    for _ in range(10):
        x, y = rng.uniform(-3.0, 3.0, size=(2, n))
        assert abs(kernel_series(m, x, y, N).value - mehler_kernel(t, x, y)) < 1e-8


def test_mehler_values():
    assert mehler_kernel(1.0, [0.0], [0.0]) == pytest.approx((2 * math.pi * math.sinh(2.0)) ** -0.5, rel=1e-14)
    assert mehler_kernel(1.0, [0.0], [0.0]) == pytest.approx(0.209528, abs=1e-6)
    assert mehler_kernel(0.7, [0.4], [-1.1]) == mehler_kernel(0.7, [-1.1], [0.4])


def test_mehler_factorizes():
    joint = mehler_kernel(0.8, [0.2, -0.5], [1.0, 0.3])
    split = mehler_kernel(0.8, [0.2], [1.0]) * mehler_kernel(0.8, [-0.5], [0.3])
    assert joint == pytest.approx(split, rel=1e-12)


def test_mehler_diagonal_form():
    t, x = 0.6, 1.3
    expected = (2 * math.pi * math.sinh(2 * t)) ** -0.5 * math.exp(-x * x * math.tanh(t))
    assert mehler_kernel(t, [x], [x]) == pytest.approx(expected, rel=1e-12)


def test_mehler_errors():
    with pytest.raises(DomainError):
        mehler_kernel(0.0, [0.0], [0.0])
    with pytest.raises(CapabilityError) as info:
        mehler_kernel(1e-200, [0.0] * 4, [0.0] * 4)
    assert info.value.details["threshold"] == pytest.approx(mehler_overflow_threshold(4))


@pytest.mark.parametrize("x, y", [(0.3, -0.8), (1.2, 0.4), (-2.0, -1.5)])
def test_semigroup_property_of_kernels(x, y):
    composed = kernel_semigroup_composition(0.5, 0.5, [x], [y])
    assert composed == pytest.approx(mehler_kernel(1.0, [x], [y]), abs=1e-6)


def test_tail_bound_requires_envelope():
    m = table_symbol({0: 1.0, 5: 2.0})
    assert kernel_tail_bound(m, 3) == pytest.approx(2.0 / math.pi ** 0.5)
    assert kernel_tail_bound(constant_symbol(1.0), 10) is None


def test_zero_threshold_follows_settings():
    configure(zero_threshold=1e-3)
    c = CoefficientVector.zeros(1, 0).with_values({0: 1e-4})
    assert c.to_frame()["value"].tolist() == [0.0]
