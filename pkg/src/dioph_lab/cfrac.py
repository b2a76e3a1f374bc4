"""Continued-fraction machinery: exact expansion, convergents, growth-rate
estimation of the simultaneous exponent, and construction of numbers whose
convergent denominators grow at a prescribed rate.

A number with partial quotients a_0; a_1, a_2, ... has convergents
p_k/q_k with p_k = a_k p_{k-1} + p_{k-2} and q_k = a_k q_{k-1} + q_{k-2}.
The residual |q_k x - p_k| is within a bounded factor of 1/q_{k+1}, so the
growth exponent of log q_k along the expansion estimates the simultaneous
exponent of x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import InsufficientDataError, InvalidTargetError
from .estimation import fit_exponent
from .numeric import ExactReal, as_fraction, dist_to_int, min_guard_height


@dataclass(frozen=True)
class CFrac:
    """A partial-quotient sequence with its convergents.

    ``terminated`` is True when the quotients are the complete expansion
    of a rational number (the expansion stopped by itself).
    """

    quotients: Tuple[int, ...]
    convergents: Tuple[Tuple[int, int], ...]
    terminated: bool = False

    def __post_init__(self) -> None:
        for a in self.quotients[1:]:
            if a < 1:
                raise ValueError("partial quotients after the first must be >= 1")

    @property
    def value(self) -> Fraction:
        p, q = self.convergents[-1]
        return Fraction(p, q)

    def denominators(self) -> Tuple[int, ...]:
        return tuple(q for _, q in self.convergents)


def _convergents(quotients: Sequence[int]) -> List[Tuple[int, int]]:
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    out: List[Tuple[int, int]] = []
    for a in quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


def from_quotients(quotients: Sequence[int], terminated: bool = False) -> CFrac:
    if not quotients:
        raise ValueError("need at least one quotient")
    return CFrac(tuple(quotients), tuple(_convergents(quotients)), terminated)


def expand(x, depth: int) -> CFrac:
    """First ``depth`` partial quotients of x, exactly (early stop for
    rationals with a shorter expansion)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    frac = as_fraction(x)
    quotients: List[int] = []
    terminated = False
    for _ in range(depth):
        a = frac.numerator // frac.denominator
        quotients.append(a)
        rem = frac - a
        if rem == 0:
            terminated = True
            break
        frac = 1 / rem
    return from_quotients(quotients, terminated)


@dataclass(frozen=True)
class SigmaEstimate:
    """Growth-exponent estimate with the per-index series for plots."""

    estimate: float  # may be math.inf when the input is exactly rational
    series: Tuple[Tuple[int, float], ...]  # (k, log q_{k+1} / log q_k)
    exact_rational: bool = False


def sigma_from_cfrac(cf: CFrac) -> SigmaEstimate:
    """Estimate the simultaneous exponent of the number behind ``cf``
    from the growth of its convergent denominators."""
    if cf.terminated:
        return SigmaEstimate(math.inf, (), exact_rational=True)
    if len(cf.convergents) < 3:
        raise InsufficientDataError("need at least 3 convergents")
    qs = cf.denominators()
    series = []
    points = []
    for k in range(len(qs) - 1):
        if qs[k] >= 2:
            lk, lk1 = math.log(qs[k]), math.log(qs[k + 1])
            series.append((k, lk1 / lk))
            points.append((lk, lk1))
    est = fit_exponent(points)
    if est is None:
        raise InsufficientDataError("denominators grew too slowly to fit")
    return SigmaEstimate(max(1.0, est), tuple(series))


def construct_with_sigma(target: float, depth: int) -> Tuple[ExactReal, CFrac]:
    """Build a number whose convergent denominators satisfy
    q_{k+1} ~ q_k^target, i.e. whose simultaneous exponent is ``target``.

    Returns the depth-truncated rational (guarded at the last denominator)
    together with the intended quotient sequence.
    """
    if target < 1:
        raise InvalidTargetError("target exponent must be >= 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    quotients = [1]
    p_prev, p = 1, 1  # convergents of [1]
    q_prev, q = 0, 1
    for _ in range(depth - 1):
        a = _next_quotient(q, target)
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        quotients.append(a)
    cf = from_quotients(quotients)
    number = ExactReal(cf.value, guard_height=cf.convergents[-1][1],
                       quotients=cf.quotients)
    return number, cf


def _next_quotient(q: int, target: float) -> int:
    # q^(target-1), exactly for integer targets, else via exp/log
    if q <= 1:
        return 1
    t = target - 1
    if abs(t - round(t)) < 1e-12:
        return max(1, q ** int(round(t)))
    return max(1, round(math.exp(t * math.log(q))))


def golden_number(depth: int) -> ExactReal:
    """Truncation of the all-ones continued fraction (slowest-growing
    denominators; simultaneous exponent 1)."""
    cf = from_quotients([1] * depth)
    return ExactReal(cf.value, guard_height=cf.convergents[-1][1],
                     quotients=cf.quotients)


def quadratic_surd(k: int, depth: int) -> ExactReal:
    """Truncation of the square root of a positive integer k.

    Perfect squares yield the exact (unguarded) integer value.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    a0 = math.isqrt(k)
    if a0 * a0 == k:
        return ExactReal(Fraction(a0))
    quotients = [a0]
    m, d, a = 0, 1, a0
    while len(quotients) < depth:
        m = d * a - m
        d = (k - m * m) // d
        a = (a0 + m) // d
        quotients.append(a)
    cf = from_quotients(quotients)
    return ExactReal(cf.value, guard_height=cf.convergents[-1][1],
                     quotients=cf.quotients)


@dataclass(frozen=True)
class SigmaVectorEstimate:
    """Brute-force simultaneous-approximation estimate for a vector."""

    estimate: float  # math.inf when an exact dependence was hit
    records: Tuple[Tuple[int, Fraction], ...] = ()  # (q, max residual)
    dependence_at: Optional[int] = None

    @property
    def exact_dependence(self) -> bool:
        return self.dependence_at is not None


def sigma_vector_estimate(ys: Sequence, height_cap: int) -> SigmaVectorEstimate:
    """Brute-force search over 1 <= q <= height_cap for the simultaneous
    exponent of a vector of rationals: track the q that set new records
    for max_i dist_to_int(q*y_i) and fit the decay exponent."""
    if height_cap < 2:
        raise ValueError("height_cap must be >= 2")
    guard = min_guard_height(ys)
    if guard is not None and height_cap > guard:
        raise ValueError(f"height_cap {height_cap} exceeds guard height {guard}")
    fracs = [as_fraction(y) for y in ys]
    mods = [(f.numerator % f.denominator, f.denominator) for f in fracs]
    acc = [0] * len(mods)
    # current record's residual as a pair (num, den); start just above 1/2
    best_n, best_d = 1, 1
    records: List[Tuple[int, Fraction]] = []
    dependence_at: Optional[int] = None
    for q in range(1, height_cap + 1):
        worst_n, worst_d = 0, 1
        improved = True
        for i, (u, den) in enumerate(mods):
            n = (acc[i] + u) % den
            acc[i] = n
            r = n if 2 * n <= den else den - n
            if r * best_d >= best_n * den:
                improved = False  # this coordinate already ties/breaks the record
            if r * worst_d > worst_n * den:
                worst_n, worst_d = r, den
        if improved:
            best_n, best_d = worst_n, worst_d
            residual = Fraction(worst_n, worst_d)
            records.append((q, residual))
            if worst_n == 0 and dependence_at is None:
                dependence_at = q
    if dependence_at is not None:
        return SigmaVectorEstimate(math.inf, tuple(records), dependence_at)
    points = [(math.log(q), -math.log(r)) for q, r in records if q >= 2 and r > 0]
    est = fit_exponent(points)
    if est is None:
        raise InsufficientDataError("no usable approximation records found")
    # Dirichlet guarantees the exponent is at least 1/m for m coordinates
    return SigmaVectorEstimate(max(est, 1.0 / len(fracs)), tuple(records))


def record_denominators(y, height_cap: int) -> Tuple[int, ...]:
    """Denominators q that strictly improve dist_to_int(q*y) up to the cap
    (the best-approximation sequence of y)."""
    est = sigma_vector_estimate([y], height_cap)
    return tuple(q for q, _ in est.records)
