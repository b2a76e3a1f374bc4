"""Exact arithmetic foundation: rationals with validity guards, integer
vectors, heights, and nearest-integer distances.

Everything here is pure and exact.  Integer vectors are plain tuples of
Python ints; the helpers in this module define the two heights used
throughout (sup norm and the product of the nonzero entries) and the
distance from a rational to the nearest integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

IntVector = Tuple[int, ...]


@dataclass(frozen=True)
class ExactReal:
    """A rational value standing for a (possibly irrational) target number.

    ``guard_height`` is the largest search height up to which residual
    computations against ``value`` are trusted to match the intended
    target; ``None`` means unbounded (the value is the genuine target).
    ``quotients``, when present, is the intended partial-quotient sequence
    of the target (useful when ``value`` is a deep truncation whose own
    expansion would terminate).
    """

    value: Fraction
    guard_height: Optional[int] = None
    quotients: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if self.guard_height is not None and self.guard_height < 1:
            raise ValueError("guard_height must be >= 1")

    @property
    def is_guarded(self) -> bool:
        return self.guard_height is not None

    def __float__(self) -> float:
        return float(self.value)


def as_fraction(x) -> Fraction:
    """Coerce an ExactReal, Fraction, int or string 'p/q' to a Fraction."""
    if isinstance(x, ExactReal):
        return x.value
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def min_guard_height(values: Iterable) -> Optional[int]:
    """Smallest guard height over a collection (None if all unbounded)."""
    guards = [v.guard_height for v in values
              if isinstance(v, ExactReal) and v.guard_height is not None]
    return min(guards) if guards else None


def support(q: Sequence[int]) -> Tuple[int, ...]:
    """Indices of the nonzero entries of q."""
    return tuple(i for i, qi in enumerate(q) if qi != 0)


def prod_mult(q: Sequence[int]) -> int:
    """Product of |q_i| over the nonzero entries; 1 for the zero vector."""
    out = 1
    for qi in q:
        if qi:
            out *= abs(qi)
    return out


def sup_norm(q: Sequence[int]) -> int:
    """max_i |q_i|; 0 for an empty or all-zero vector."""
    return max((abs(qi) for qi in q), default=0)


def nearest_int(x: Fraction) -> Tuple[int, Fraction]:
    """The integer p minimizing |x + p| and the minimal distance.

    Half-integer ties resolve to the p of smaller magnitude; the distance
    is then exactly 1/2.
    """
    x = as_fraction(x)
    f = x - (x.numerator // x.denominator)  # fractional part in [0, 1)
    floor_p = -(x.numerator // x.denominator)
    if 2 * f.numerator < f.denominator:
        return floor_p, f
    if 2 * f.numerator > f.denominator:
        return floor_p - 1, 1 - f
    # tie: both neighbors are at distance exactly 1/2
    p = floor_p if abs(floor_p) <= abs(floor_p - 1) else floor_p - 1
    return p, Fraction(1, 2)


def dist_to_int(x: Fraction) -> Fraction:
    """min over integers p of |x + p|, exactly; always in [0, 1/2]."""
    return nearest_int(x)[1]
