"""Testing the r-nuclearity criteria (direct sum and regime weights)"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.hermite_core import lattice_array
from src.core.nuclearity import (
    DIVERGENT, EQ43, FINITE, GT43, INCONCLUSIVE, LT43, PartitionCell, classify_regime,
    compare_sr_kappa, gl_condition, gl_hypotheses_met, heat_nuclearity_sweep, kappa_sum,
    kappa_weight, partition_cell_of, s_r_sum,
)
from src.core.quadrature import EQ4, SUB4, SUPER4
from src.core.spectral_ops import (
    constant_symbol, custom_symbol, heat_symbol, power_symbol, table_symbol,
)
from src.utils.errors import DomainError, UnsupportedRegimeError

HEAT_TRACE = 1.0 / (math.e - math.exp(-1.0))


@pytest.mark.parametrize(
    "p1, p2, r, regime, branch",
    [
        (2, 2, 1, SUB4, GT43),
        (Fraction(4, 3), 4, Fraction(1, 2), EQ4, EQ43),
        (4 / 3, 4.0, 0.5, EQ4, EQ43),
        (1.2, 6, Fraction(2, 3), SUPER4, LT43),
        (3, math.inf, 1, SUPER4, GT43),
    ],
)
def test_classify_regime(p1, p2, r, regime, branch):
    case = classify_regime(p1, p2, r)
    assert (case.p2_regime, case.p1_branch) == (regime, branch)
    assert case.k == 10


@pytest.mark.parametrize("p1", [1.1, 1.2, Fraction(4, 3), 1.5, 2, 3, 10])
def test_conjugate_duality(p1):
    case = classify_regime(p1, 2, 1)
    conjugate = case.p1_conjugate
    assert (case.p1_branch == GT43) == (conjugate < 4)
    assert (case.p1_branch == EQ43) == (conjugate == 4)
    assert (case.p1_branch == LT43) == (conjugate > 4)


def test_classify_rejects_unsupported_exponents():
    with pytest.raises(UnsupportedRegimeError) as info:
        classify_regime(1, 2, 1)
    assert info.value.hypothesis == "1 < p1 < inf"
    with pytest.raises(UnsupportedRegimeError):
        classify_regime(math.inf, 2, 1)
    with pytest.raises(UnsupportedRegimeError):
        classify_regime(2, 2, 1.5)
    with pytest.raises(DomainError):
        classify_regime(2, 2, 1, k=1)


def test_partition_cell_examples():
    assert partition_cell_of((11, 12, 13), 10) == 0
    assert partition_cell_of((3, 12), 10) == 1
    assert partition_cell_of((0, 0), 10) == 2
    assert (3, 12) in PartitionCell(1, 10)
    assert (3, 12) not in PartitionCell(2, 10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_partition_covers_box(n):
    k = 2
    box = list(itertools.product(range(2 * k + 1), repeat=n))
    counts = [sum(1 for nu in box if nu in PartitionCell(s, k)) for s in range(n + 1)]
    assert sum(counts) == (2 * k + 1) ** n
    for nu in box:
        assert sum(1 for s in range(n + 1) if nu in PartitionCell(s, k)) == 1


def test_weight_is_one_when_exponents_match():
    case = classify_regime(2.5, 2.5, 1)
    assert kappa_weight(case, (12, 3)) == 1.0
    assert kappa_weight(case, (100,) * 3) == 1.0


def test_weight_first_branch_by_hand():
    case = classify_regime(2, 1, 1)
    assert kappa_weight(case, (100,)) == pytest.approx(100 ** 0.25, rel=1e-12)
    # ν ≤ k では k の冪だけが残る
    assert kappa_weight(case, (4,)) == pytest.approx(10 ** 0.25, rel=1e-12)


def test_weight_log_branch_by_hand():
    case = classify_regime(Fraction(4, 3), 4, 1)
    expected = 55 ** -0.25 * math.log(55) ** 2
    assert kappa_weight(case, (55,)) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(5.898, abs=2e-3)


def test_weight_scale_covariance():
    case_one = classify_regime(2, 1, 1)
    case_half = classify_regime(2, 1, 0.5)
    for nu in [(20, 3), (15, 40), (2, 2)]:
        assert kappa_weight(case_half, nu) == pytest.approx(kappa_weight(case_one, nu) ** 0.5, rel=1e-12)


def test_kappa_heat_geometric_series():
    report = kappa_sum(heat_symbol(1.0), classify_regime(2, 2, 1))
    assert report.partial_sum == pytest.approx(HEAT_TRACE, abs=1e-9)
    assert report.verdict == FINITE
    assert report.tail_bound < 1e-8


def test_kappa_constant_diverges():
    report = kappa_sum(constant_symbol(1.0), classify_regime(2, 2, 1), N=50)
    assert report.verdict == DIVERGENT
    assert report.partial_sum == pytest.approx(51.0)


def test_kappa_finite_table():
    report = kappa_sum(table_symbol({0: 1.0, 4: -0.5}), classify_regime(2, 1, 1))
    assert report.verdict == FINITE
    assert report.tail_bound == 0.0
    assert report.partial_sum == pytest.approx(10 ** 0.25 * 1.5, rel=1e-12)


def test_kappa_without_envelope_is_inconclusive():
    m = custom_symbol(lambda nu: 2.0 ** -nu.order)
    report = kappa_sum(m, classify_regime(2, 2, 1), N=30)
    assert report.verdict == INCONCLUSIVE
    assert report.tail_bound is None


@pytest.mark.parametrize("p", [2, 2.5, 3.9])
def test_kappa_equals_plain_sum_bit_for_bit(p):
    m = heat_symbol(0.7, 2)
    report = kappa_sum(m, classify_regime(p, p, 1), N=40)
    plain = math.fsum(np.abs(m.values(lattice_array(2, 40))))
    assert report.partial_sum == plain


def test_kappa_partial_sums_are_monotone():
    m = power_symbol(1.5)
    case = classify_regime(2, 6, 1)
    sums = [kappa_sum(m, case, N=N).partial_sum for N in (10, 20, 40, 80)]
    assert sums == sorted(sums)


def test_kappa_requires_every_cell():
    with pytest.raises(DomainError):
        kappa_sum(heat_symbol(1.0, 2), classify_regime(2, 2, 1), N=15)


def test_s_r_examples():
    report = s_r_sum(heat_symbol(1.0), 2, 2, 1, tol=1e-12)
    assert report.partial_sum == pytest.approx(HEAT_TRACE, abs=1e-11)
    assert report.verdict == FINITE

    single = s_r_sum(table_symbol({0: 1.0}), 2, 1, 1)
    assert single.partial_sum == pytest.approx(math.sqrt(2.0) * math.pi ** 0.25, rel=1e-9)
    assert single.partial_sum == pytest.approx(1.882793, abs=1e-6)

    zero = s_r_sum(constant_symbol(0.0), 2, 2, 1)
    assert zero.partial_sum == 0.0
    assert zero.verdict == FINITE


def test_s_r_at_p_one_uses_sup_norm():
    report = s_r_sum(heat_symbol(1.0), 1, 1, Fraction(2, 3))
    assert report.verdict == FINITE
    assert report.partial_sum > 0.0


def test_compare_identical_series():
    comparison = compare_sr_kappa(heat_symbol(1.0), classify_regime(2, 2, 1), N=20)
    assert comparison.ratio == pytest.approx(1.0, abs=1e-12)
    assert not comparison.anomaly


def test_compare_drift_is_small():
    comparison = compare_sr_kappa(heat_symbol(0.5), classify_regime(2, 1, 1), N=40)
    assert comparison.drift < 0.05
    assert 0.0 < comparison.ratio < math.inf


def test_compare_finite_table_has_no_drift():
    m = table_symbol({0: 1.0, 2: 0.5})
    comparison = compare_sr_kappa(m, classify_regime(2, 1, 1), N=20)
    assert comparison.drift == 0.0


def test_compare_both_zero():
    comparison = compare_sr_kappa(table_symbol({0: 0.0}), classify_regime(2, 2, 1), N=10)
    assert comparison.ratio == 1.0
    assert not comparison.anomaly


def test_gl_condition():
    assert gl_condition(2) == 1
    assert gl_condition(1) == Fraction(2, 3)
    assert gl_condition(4) == Fraction(4, 5)
    assert gl_condition(4.0) == pytest.approx(0.8)
    assert gl_condition(Fraction(4, 3)) == gl_condition(4)
    assert gl_condition(Fraction(3, 2)) == gl_condition(3)
    with pytest.raises(DomainError):
        gl_condition(math.inf)
    with pytest.raises(DomainError):
        gl_condition(0.5)


def test_gl_condition_decreases_away_from_two():
    orders = [gl_condition(Fraction(p)) for p in (2, 3, 4, 8, 100)]
    assert orders == sorted(orders, reverse=True)
    assert len(set(orders)) == len(orders)
    assert gl_condition(Fraction(3, 2)) > gl_condition(Fraction(6, 5)) > gl_condition(1)


def test_gl_hypotheses():
    assert gl_hypotheses_met(4, 0.8)
    assert not gl_hypotheses_met(4, 0.9)
    assert gl_hypotheses_met(4, 0.5)


def test_heat_sweep_is_finite_everywhere():
    reports = heat_nuclearity_sweep(1.0, 1, p_values=(1, Fraction(4, 3), 2, 4, 6))
    assert [report.verdict for report in reports] == [FINITE] * 5
    assert reports[0].method == "s_r"


CONSISTENCY_CASES = [
    (2, 2), (Fraction(4, 3), 2), (1.2, 2),
    (2, 4), (Fraction(4, 3), 4), (1.2, 4),
    (2, 6), (Fraction(4, 3), 6), (1.2, 6),
]


@pytest.mark.slow
@pytest.mark.parametrize("t", [0.5, 1.0])
@pytest.mark.parametrize("p1, p2", CONSISTENCY_CASES)
def test_criterion_consistency(t, p1, p2):
    m = heat_symbol(t)
    case = classify_regime(p1, p2, 1)
    assert kappa_sum(m, case).verdict == FINITE
    assert s_r_sum(m, p1, p2, 1).verdict == FINITE
    assert compare_sr_kappa(m, case, N=80).drift < 0.05
