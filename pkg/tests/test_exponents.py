import math
import random
from fractions import Fraction

import pytest

from dioph_lab.cfrac import construct_with_sigma, golden_number, quadratic_surd
from dioph_lab.errors import BudgetExceededError, DomainError
from dioph_lab.exponents import (
    ApproxRecord,
    RecordSet,
    decay_threshold,
    exponent_from_threshold,
    gamma_k_estimate,
    omega_estimate,
    omega_from_gamma,
    omega_mult_estimate,
    search_records,
)


def test_decay_threshold_zero_at_dimension():
    for n in (1, 2, 3):
        for k in range(1, n + 1):
            assert decay_threshold(n, k, n) == 0.0


def test_decay_threshold_paper_value():
    assert decay_threshold(4, 1, 2) == pytest.approx(Fraction(1, 3))


def test_threshold_roundtrip():
    rng = random.Random(1)
    for _ in range(100):
        n = rng.randint(1, 5)
        k = rng.randint(1, n)
        v = n + rng.random() * 10
        c = decay_threshold(v, k, n)
        assert exponent_from_threshold(c, k, n) == pytest.approx(v, abs=1e-12)


def test_threshold_domain_errors():
    with pytest.raises(DomainError):
        decay_threshold(1.5, 1, 2)
    with pytest.raises(DomainError):
        exponent_from_threshold(0.6, 2, 2)


def test_omega_from_gamma_zeroes():
    assert omega_from_gamma([0.0, 0.0]) == 2
    assert omega_from_gamma([0.0, 0.0, 0.0]) == 3


def test_omega_from_gamma_known_values():
    assert omega_from_gamma([1 / 3, 0.0]) == pytest.approx(4.0)
    assert omega_from_gamma([0.0, 0.0, 0.1]) == pytest.approx(3.3 / 0.7)
    assert omega_from_gamma([0.5, 0.6]) == math.inf


def test_search_detects_exact_dependence():
    rs = search_records([Fraction(1, 2), Fraction(1, 3)], 10)
    assert rs.exact_dependence
    assert omega_estimate(rs) == math.inf
    assert omega_mult_estimate(rs) == math.inf


def test_golden_records_are_fibonacci():
    rs = search_records([golden_number(40)], 10**5)
    fibs = set()
    a, b = 1, 2
    while a <= 10**5:
        fibs.add(a)
        a, b = b, a + b
    assert {r.sup_h for r in rs.sup_records} <= fibs
    assert len(rs.sup_records) >= 20


def test_golden_omega_near_one():
    rs = search_records([golden_number(40)], 10**5)
    est = omega_estimate(rs)
    assert abs(est - 1.0) <= 0.05
    # with one coordinate the two exponents coincide
    assert omega_mult_estimate(rs) == pytest.approx(est, abs=1e-9)


def test_record_monotonicity_invariant():
    rs = search_records([Fraction(5, 17), Fraction(355, 452)], 200)
    for s in rs.subsets():
        recs = rs.subset_records[s]
        for a, b in zip(recs, recs[1:]):
            assert b.residual < a.residual
            assert b.mult_h > a.mult_h
            assert 1 <= a.k <= rs.n
            assert a.mult_h <= a.sup_h ** a.k
    for k in (1, 2):
        merged = rs.class_records(k)
        assert all(r.k == k for r in merged)
        for a, b in zip(merged, merged[1:]):
            assert b.residual < a.residual and b.mult_h > a.mult_h


def test_sign_symmetry():
    y = [Fraction(13, 37), Fraction(29, 41)]
    plus = search_records(y, 30)
    minus = search_records([-v for v in y], 30)
    res_plus = sorted((r.sup_h, r.residual) for r in plus.all_records())
    res_minus = sorted((r.sup_h, r.residual) for r in minus.all_records())
    assert res_plus == res_minus


def test_larger_cap_extends_records():
    y = [Fraction(5, 17), Fraction(251, 907)]
    small = search_records(y, 64, budget=10**8)
    large = search_records(y, 256, budget=10**8)

    def within(rs, bound):
        return sorted(
            (r.q, r.p, r.residual)
            for r in rs.all_records()
            if all(abs(qi) <= bound for qi in r.q)
        )

    assert within(small, 32) == within(large, 32)
    assert len(large.all_records()) > len(small.all_records())


def test_badly_approximable_pair():
    y = [quadratic_surd(2, 40), quadratic_surd(3, 40)]
    rs = search_records(y, 1000)
    est = omega_estimate(rs)
    assert abs(est - 2.0) <= 0.3


def test_sandwich_on_random_points():
    rng = random.Random(7)
    for _ in range(3):
        den = (1 << 63) | rng.getrandbits(63) | 1
        y = [Fraction(rng.randrange(den), den) for _ in range(2)]
        rs = search_records(y, 2000)
        om = omega_estimate(rs)
        omx = omega_mult_estimate(rs)
        assert om - 0.05 <= omx <= 2 * om + 0.05


def test_generic_points_have_dimension_exponent():
    # statistical check: almost every vector has standard exponent n
    rng = random.Random(2024)
    hits = 0
    for _ in range(10):
        den = (1 << 255) | rng.getrandbits(255) | 1
        y = [Fraction(rng.randrange(den), den) for _ in range(2)]
        rs = search_records(y, 5000)
        if abs(omega_estimate(rs) - 2.0) <= 0.3:
            hits += 1
    assert hits >= 9


def test_strict_budget_raises():
    y = [Fraction(1, 3), Fraction(2, 7), Fraction(3, 11)]
    with pytest.raises(BudgetExceededError):
        search_records(y, 10**4, budget=10**6, strict_budget=True)


def test_budget_truncation_is_flagged():
    y = [Fraction(5, 17), Fraction(251, 907)]
    rs = search_records(y, 10**4, budget=10**6)
    assert any("truncated" in f for f in rs.flags)
    assert rs.complete_height < 10**4


def test_gamma_single_record_slope_bounded():
    rec = ApproxRecord((1,), 0, Fraction(1, 22026), 1, 1, 1)  # residual ~ e^-10
    rs = RecordSet(n=1, height_cap=10, subset_records={(0,): [rec]},
                   sup_records=[rec], reached={(0,): 10}, complete_height=10)
    est = gamma_k_estimate(rs, 1)
    assert 0.0 <= est.gamma < 1.0
    assert all(s >= -1e-9 or t < 2 for t, s in est.series)


def test_gamma_class_one_with_prescribed_growth():
    b, _ = construct_with_sigma(2.0, 12)
    rs = search_records([Fraction(5, 17), b], 10**4)
    est = gamma_k_estimate(rs, 1)
    assert abs(est.gamma - 1 / 3) <= 0.07
    assert est.direction is not None
    assert sum(est.direction) == pytest.approx(1.0)


def test_gamma_empty_class_flag():
    rec = ApproxRecord((1, 0), 0, Fraction(1, 3), 1, 1, 1)
    rs = RecordSet(n=2, height_cap=10, subset_records={(0,): [rec]},
                   sup_records=[rec], reached={(0,): 10}, complete_height=10)
    est = gamma_k_estimate(rs, 2)
    assert est.empty_class
    assert est.gamma == 0.0
