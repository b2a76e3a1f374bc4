"""Exponent fitting shared by the record-search and continued-fraction
estimators.

Every estimator in the workbench reduces to the same shape of data: a
sequence of points (log height, -log residual) along which the residual
is supposed to scale like height^(-v).  Four readings are combined:

* a least-squares line with intercept over the whole staircase -- the
  intercept absorbs the height-independent constant that otherwise
  biases small-sample ratios upward;
* a Theil-Sen slope (median of pairwise slopes), robust against a
  single hot record;
* the median of the raw ratios y/x over the tail window (points in the
  upper half of the log-height range), a limsup proxy robust to the
  fits degenerating when records are sparse;
* the raw ratio at the highest point, the most asymptotic single
  reading.

Each reading is biased upward in the regime where another is reliable,
so the reported estimate is their minimum, clamped to be nonnegative.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

Point = Tuple[float, float]

# heights below 2 carry no slope information (log height too close to 0)
_MIN_LOG_HEIGHT = math.log(2.0) * 0.999


def usable_points(points: Sequence[Point]) -> List[Point]:
    return [(x, y) for x, y in points if x >= _MIN_LOG_HEIGHT]


def least_squares_slope(points: Sequence[Point]) -> Optional[float]:
    """Slope of the least-squares line with intercept; None if degenerate."""
    if len(points) < 2:
        return None
    n = len(points)
    mx = sum(x for x, _ in points) / n
    my = sum(y for _, y in points) / n
    sxx = sum((x - mx) ** 2 for x, _ in points)
    if sxx <= 1e-12:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in points)
    return sxy / sxx


def tail_window(points: Sequence[Point]) -> List[Point]:
    """Points in the top half of the log-height range."""
    if not points:
        return []
    xmax = max(x for x, _ in points)
    cut = xmax / 2.0
    return [(x, y) for x, y in points if x >= cut]


def tail_ratio_median(points: Sequence[Point]) -> Optional[float]:
    tail = tail_window(points)
    if not tail:
        return None
    ratios = sorted(y / x for x, y in tail)
    m = len(ratios)
    if m % 2:
        return ratios[m // 2]
    return 0.5 * (ratios[m // 2 - 1] + ratios[m // 2])


def last_ratio(points: Sequence[Point]) -> Optional[float]:
    """Ratio y/x at the highest point (the most asymptotic single reading)."""
    if not points:
        return None
    x, y = max(points)
    return y / x


def theil_sen_slope(points: Sequence[Point]) -> Optional[float]:
    """Median of pairwise slopes; robust against single hot records."""
    slopes = []
    for i in range(len(points)):
        xi, yi = points[i]
        for j in range(i + 1, len(points)):
            xj, yj = points[j]
            if abs(xj - xi) > 1e-9:
                slopes.append((yj - yi) / (xj - xi))
    if not slopes:
        return None
    slopes.sort()
    m = len(slopes)
    if m % 2:
        return slopes[m // 2]
    return 0.5 * (slopes[m // 2 - 1] + slopes[m // 2])


def fit_exponent(points: Sequence[Point]) -> Optional[float]:
    """Combined estimate of v from (log height, -log residual) points."""
    pts = usable_points(points)
    if not pts:
        return None
    candidates = [
        c
        for c in (
            least_squares_slope(pts),
            theil_sen_slope(pts),
            tail_ratio_median(pts),
            last_ratio(pts),
        )
        if c is not None
    ]
    if not candidates:
        return None
    return max(0.0, min(candidates))
