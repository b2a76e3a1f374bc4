"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
live).  The heavy experiment reports are computed once per session.
"""

import math
import random
import statistics
import time
from fractions import Fraction

import numpy as np
import pytest

from dioph_lab.cfrac import construct_with_sigma, expand, golden_number, quadratic_surd
from dioph_lab.exponents import (
    decay_threshold,
    exponent_from_threshold,
    omega_estimate,
    omega_mult_estimate,
    search_records,
)
from dioph_lab.hyperplane import (
    ExperimentConfig,
    Hyperplane,
    run_experiment,
    theoretical_exponent,
)
from dioph_lab.lattice import LatticeBasis, shortest_vector, violation_search


def criterion(name: str, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared experiment runs


@pytest.fixture(scope="session")
def fixture_a():
    plane = Hyperplane(2, 1, (), golden_number(40))
    cfg = ExperimentConfig(
        height_cap=10**5,
        sigma_cap=10**4,
        samples=20,
        denominator_bits=256,
        seed=101,
        budget=6 * 10**8,
    )
    t0 = time.monotonic()
    report = run_experiment(plane, cfg)
    elapsed = time.monotonic() - t0
    return plane, report, elapsed


@pytest.fixture(scope="session")
def fixture_b():
    b, _ = construct_with_sigma(2.0, 12)
    plane = Hyperplane(2, 1, (), b)
    cfg = ExperimentConfig(
        height_cap=10**5,
        sigma_cap=10**4,
        samples=20,
        denominator_bits=256,
        seed=202,
        budget=6 * 10**8,
        flow_bridge_points=6,
        flow_steps=40,
    )
    report = run_experiment(plane, cfg)
    return plane, report


@pytest.fixture(scope="session")
def fixture_c():
    b, _ = construct_with_sigma(2.0, 10)
    plane = Hyperplane(3, 2, (golden_number(40),), b)
    cfg = ExperimentConfig(
        height_cap=10**4,
        sigma_cap=10**4,
        samples=12,
        denominator_bits=256,
        seed=13,
        budget=2 * 10**8,
    )
    report = run_experiment(plane, cfg)
    return plane, report


# ---------------------------------------------------------------------------
# fixture A


def test_fixture_a_golden_plane(fixture_a):
    plane, report, elapsed = fixture_a
    # oracle first: the coefficient's expansion is all ones
    quotients = expand(plane.b, 35).quotients
    criterion(
        "fixture-A sigma oracle",
        all(a == 1 for a in quotients),
        f"first 35 quotients of b all 1 ({len(quotients)} checked)",
    )
    theo = report.theoretical.value
    criterion(
        "fixture-A theoretical",
        abs(theo - 2.0) <= 0.02,
        f"max(2, 2*sigma) = {theo:.4f}",
    )
    med = report.median_omega_mult()
    criterion(
        "fixture-A median",
        1.8 <= med <= 2.2,
        f"median multiplicative estimate {med:.4f} in [1.8, 2.2], 20 samples",
    )
    iqr = report.iqr_omega_mult()
    criterion(
        "fixture-A spread",
        iqr is not None and iqr <= 0.5,
        f"interquartile range of per-point estimates {iqr:.4f} <= 0.5",
    )
    criterion(
        "fixture-A runtime",
        elapsed <= 300.0,
        f"{elapsed:.1f}s for 20 samples at cap 1e5 (limit 300s)",
    )


# ---------------------------------------------------------------------------
# fixture B


def test_fixture_b_prescribed_sigma(fixture_b):
    plane, report = fixture_b
    theo = report.theoretical.value
    criterion(
        "fixture-B theoretical",
        abs(theo - 4.0) <= 0.1,
        f"max(2, 2*sigma) = {theo:.4f} (sigma route: {report.theoretical.route})",
    )
    med = report.median_omega_mult()
    criterion(
        "fixture-B median",
        3.6 <= med <= 4.4,
        f"median multiplicative estimate {med:.4f} in [3.6, 4.4]",
    )
    restricted = [
        omega_mult_estimate(p.records, only_subsets=[(1,)])
        for p in report.points
        if p.records is not None
    ]
    med_restricted = statistics.median(restricted)
    criterion(
        "fixture-B restricted-class",
        med_restricted >= 3.8,
        f"support-class-{{n}} search alone attains {med_restricted:.4f} >= 3.8",
    )


# ---------------------------------------------------------------------------
# fixture C


def test_fixture_c_general_s(fixture_c):
    plane, report = fixture_c
    pred = report.theoretical
    criterion(
        "fixture-C theoretical",
        pred.value == pytest.approx(max(3.0, 1.5 * pred.sigma)),
        f"max(3, (3/2)*sigma) = {pred.value:.4f} with sigma={pred.sigma:.4f} "
        f"(brute force, cap 1e4)",
    )
    gaps = [
        abs(p.omega_mult - pred.value)
        for p in report.points
        if p.omega_mult is not None and not math.isinf(p.omega_mult)
    ]
    med_gap = statistics.median(gaps)
    criterion(
        "fixture-C median",
        med_gap <= 0.5,
        f"median |estimate - theoretical| = {med_gap:.4f} <= 0.5 "
        f"(checks the n/s factor)",
    )


# ---------------------------------------------------------------------------
# bridge suite


def test_bridge_gamma_vs_mult(fixture_a, fixture_b):
    _, report_a, _ = fixture_a
    _, report_b = fixture_b
    points = report_a.points + report_b.points
    usable = [
        p
        for p in points
        if p.omega_gamma is not None
        and p.omega_mult is not None
        and not math.isinf(p.omega_mult)
        and not math.isinf(p.omega_gamma)
    ]
    hits = [p for p in usable if abs(p.omega_gamma - p.omega_mult) <= 0.3]
    share = len(hits) / len(usable)
    criterion(
        "bridge gamma-vs-mult",
        share >= 0.8,
        f"{len(hits)}/{len(usable)} points with |omega_from_gamma - "
        f"omega_mult| <= 0.3 ({100 * share:.0f}%)",
    )


def test_bridge_flow_trajectory(fixture_b):
    _, report = fixture_b
    designated = [p for p in report.points if p.flow_bridge is not None]
    agreements = [
        p for p in designated if abs(p.flow_bridge - max(p.gammas)) <= 0.1
    ]
    criterion(
        "bridge flow-trajectory",
        len(agreements) >= 5,
        f"{len(agreements)}/{len(designated)} designated points with "
        f"|tail slope - best gamma| <= 0.1",
    )


# ---------------------------------------------------------------------------
# inequality suite


def _random_unit_fraction(rng: random.Random, bits: int = 256) -> Fraction:
    den = (1 << (bits - 1)) | rng.getrandbits(bits - 1) | 1
    while True:
        num = rng.randrange(den + 1)
        if math.gcd(num, den) == 1:
            return Fraction(num, den)


def test_inequality_suite():
    rng = random.Random(31337)
    violations = 0
    checked = 0
    for _ in range(100):
        y = [_random_unit_fraction(rng) for _ in range(3)]
        rs = search_records(y, 10**4, budget=10**8)
        om = omega_estimate(rs)
        omx = omega_mult_estimate(rs)
        checked += 1
        if not (om - 0.05 <= omx <= 3 * om + 0.05):
            violations += 1
    criterion(
        "inequality suite",
        violations == 0 and checked == 100,
        f"{violations} violations of om - 0.05 <= om_mult <= 3 om + 0.05 "
        f"over {checked} random points in [0,1]^3, cap 1e4",
    )


# ---------------------------------------------------------------------------
# oracle suites


def test_oracle_convergent_denominators():
    targets = [
        ("sqrt2", quadratic_surd(2, 40)),
        ("sqrt3", quadratic_surd(3, 40)),
        ("sqrt5", quadratic_surd(5, 40)),
        ("sqrt7", quadratic_surd(7, 40)),
        ("golden", golden_number(40)),
    ]
    cap = 10**5
    mismatches = []
    for name, x in targets:
        rs = search_records([x], cap)
        found = sorted({r.sup_h for r in rs.sup_records})
        expected = sorted({q for q in expand(x, 40).denominators() if q <= cap})
        if found != expected:
            mismatches.append(name)
    criterion(
        "oracle convergents",
        not mismatches,
        f"record denominators = convergent denominators up to 1e5 for "
        f"{len(targets)} quadratic irrationals (mismatches: {mismatches or 'none'})",
    )


def _box_min_int(rows: np.ndarray, bound: int) -> int:
    rng_axis = np.arange(-bound, bound + 1, dtype=np.int64)
    c0, c1, c2 = np.meshgrid(rng_axis, rng_axis, rng_axis, indexing="ij")
    vecs = (
        c0[..., None] * rows[0][None, None, None, :]
        + c1[..., None] * rows[1][None, None, None, :]
        + c2[..., None] * rows[2][None, None, None, :]
    )
    norms = np.abs(vecs).max(axis=-1)
    norms[bound, bound, bound] = np.iinfo(np.int64).max  # exclude origin
    return int(norms.min())


def test_oracle_shortest_vector():
    rng = random.Random(97)
    trials = 0
    mismatches = 0
    while trials < 200:
        dens = [rng.randint(1, 8) for _ in range(3)]
        cols = [
            tuple(Fraction(rng.randint(-9, 9), dens[j]) for _ in range(3))
            for j in range(3)
        ]
        try:
            basis = LatticeBasis(tuple(cols))
        except ValueError:
            continue
        trials += 1
        coeffs, _ = shortest_vector(basis)
        exact = [
            sum(c * col[i] for c, col in zip(coeffs, basis.columns))
            for i in range(3)
        ]
        mine = max(abs(e) for e in exact)
        # oracle: clear denominators and minimize over the integer box
        scale = math.lcm(*dens)
        int_cols = np.array(
            [[int(col[i] * scale) for i in range(3)] for col in basis.columns],
            dtype=np.int64,
        )
        oracle = Fraction(_box_min_int(int_cols, 20), scale)
        if mine != oracle:
            mismatches += 1
    criterion(
        "oracle shortest-vector",
        mismatches == 0,
        f"exact match with exhaustive box minimization on {trials} random "
        f"3x3 bases ({mismatches} mismatches)",
    )


def test_oracle_threshold_roundtrip():
    rng = random.Random(5)
    worst = 0.0
    for _ in range(100):
        n = rng.randint(1, 5)
        k = rng.randint(1, n)
        v = n + rng.random() * 10
        back = exponent_from_threshold(decay_threshold(v, k, n), k, n)
        worst = max(worst, abs(back - v))
    criterion(
        "oracle threshold-roundtrip",
        worst <= 1e-12 * 15,
        f"worst roundtrip error {worst:.2e} over 100 random inputs "
        f"(12-digit tolerance)",
    )


# ---------------------------------------------------------------------------
# violation search


def test_violation_search_criterion(fixture_a, fixture_b):
    plane_b, _ = fixture_b
    hits = violation_search(plane_b, 0.2, w_budget=10**4)
    convergents = set(expand(plane_b.b, 12).denominators())
    witness_ok = any(abs(v.w[-1]) in convergents for v in hits)
    criterion(
        "violation search fixture-B",
        len(hits) >= 1 and witness_ok,
        f"{len(hits)} witnesses at d_1=0.2 < c_1(4)={decay_threshold(4, 1, 2):.4f}; "
        f"witness heights from convergents of b: {witness_ok}",
    )
    plane_a, _, _ = fixture_a
    clean = violation_search(plane_a, 0.1, w_budget=10**4)
    criterion(
        "violation search fixture-A",
        len(clean) == 0,
        f"no witnesses at d_1=0.1 within budget 1e4 ({len(clean)} found)",
    )
