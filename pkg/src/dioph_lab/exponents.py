"""Direct record search for approximation exponents.

The search enumerates integer coefficient vectors q (0 < sup|q| <= cap,
first nonzero entry positive) grouped by support pattern, and keeps, per
dyadic height checkpoint, the q minimizing the distance of q.y to the
nearest integer.  Record residuals are verified in exact rational
arithmetic; the bulk scan runs on per-coordinate tables of exactly
rounded fractional parts, so a float residual is within ~1e-15 of the
true value and candidate selection is reliable down to far below any
distance a non-degenerate candidate can reach at desk-scale heights.

Estimates derived from a record set:

* standard exponent (sup-norm heights),
* multiplicative exponent (product heights, maximized over support
  patterns),
* per-class flow decay rates and the closed forms linking them.

Both exponent estimates are clamped from below at the dimension n, which
every vector attains.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceededError, DomainError, InsufficientDataError
from .estimation import fit_exponent, usable_points
from .numeric import as_fraction, min_guard_height, nearest_int, prod_mult, sup_norm

DEFAULT_BUDGET = 10**9
_CHUNK_ELEMS = 1 << 22

Subset = Tuple[int, ...]


def resolve_budget(budget: Optional[int] = None) -> int:
    """Budget argument, DIOPH_LAB_BUDGET env var, or the default."""
    if budget is not None:
        return int(budget)
    env = os.environ.get("DIOPH_LAB_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class ApproxRecord:
    """One integer approximation: residual = |q.y + p| minimized over p."""

    q: Tuple[int, ...]
    p: int
    residual: Fraction
    sup_h: int
    mult_h: int
    k: int


@dataclass
class RecordSet:
    """Per-support-pattern record lists plus the global sup-norm staircase."""

    n: int
    height_cap: int
    subset_records: Dict[Subset, List[ApproxRecord]] = field(default_factory=dict)
    sup_records: List[ApproxRecord] = field(default_factory=list)
    reached: Dict[Subset, int] = field(default_factory=dict)
    complete_height: int = 0
    dependence_witness: Optional[ApproxRecord] = None
    flags: List[str] = field(default_factory=list)

    @property
    def exact_dependence(self) -> bool:
        return self.dependence_witness is not None

    def subsets(self) -> List[Subset]:
        return sorted(self.subset_records)

    def class_records(self, k: int) -> List[ApproxRecord]:
        """Merged record staircase of all support patterns of size k."""
        merged: List[ApproxRecord] = []
        for s, recs in self.subset_records.items():
            if len(s) == k:
                merged.extend(recs)
        return _pareto_by_mult(merged)

    def all_records(self) -> List[ApproxRecord]:
        out: List[ApproxRecord] = []
        for s in self.subsets():
            out.extend(self.subset_records[s])
        return out


def _pareto_by_mult(records: List[ApproxRecord]) -> List[ApproxRecord]:
    """Strictly decreasing residual along strictly increasing mult height."""
    out: List[ApproxRecord] = []
    for rec in sorted(records, key=lambda r: (r.mult_h, r.residual, r.q)):
        if not out:
            out.append(rec)
        elif rec.residual < out[-1].residual:
            if rec.mult_h > out[-1].mult_h:
                out.append(rec)
            else:  # same height checkpoint: keep the better residual
                out[-1] = rec
        # equal or worse residual at larger height: not a record
    return out


def _sup_staircase(records: List[ApproxRecord]) -> List[ApproxRecord]:
    out: List[ApproxRecord] = []
    for rec in sorted(records, key=lambda r: (r.sup_h, r.residual, r.q)):
        if not out:
            out.append(rec)
        elif rec.residual < out[-1].residual:
            if rec.sup_h > out[-1].sup_h:
                out.append(rec)
            else:
                out[-1] = rec
    return out


def _frac_table(y: Fraction, reach: int) -> np.ndarray:
    """Exactly rounded float fractional parts of m*y for m = 0..reach."""
    den = y.denominator
    u = y.numerator % den
    out = np.empty(reach + 1, dtype=np.float64)
    out[0] = 0.0
    acc = 0
    for m in range(1, reach + 1):
        acc += u
        if acc >= den:
            acc -= den
        out[m] = acc / den
    return out


def _dyadic_splits(q_max: int) -> np.ndarray:
    """Start indices (0-based, for m = index+1) of dyadic segments."""
    splits = []
    j = 0
    while (1 << j) <= q_max:
        splits.append((1 << j) - 1)
        j += 1
    return np.asarray(splits, dtype=np.intp)


def _dist(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.floor(x + 0.5))


class _TileTable:
    """Best float candidate per dyadic tile of one support pattern."""

    def __init__(self) -> None:
        self.best: Dict[Tuple[int, ...], Tuple[float, Tuple[int, ...]]] = {}

    def offer(self, key: Tuple[int, ...], value: float, qvec: Tuple[int, ...]) -> None:
        cur = self.best.get(key)
        if cur is None or value < cur[0]:
            self.best[key] = (value, qvec)


def _scan_single(y: Fraction, reach: int) -> List[Tuple[int, int, Fraction]]:
    """Exact record loop for a one-coordinate support: returns the full
    best-approximation sequence (q, p, residual) for q = 1..reach."""
    den = y.denominator
    u = y.numerator % den
    floor0 = y.numerator // den
    acc = 0
    best_num = den  # residual numerator scaled by den; start above 1/2
    out: List[Tuple[int, int, Fraction]] = []
    for q in range(1, reach + 1):
        acc += u
        if acc >= den:
            acc -= den
        r = acc if 2 * acc <= den else den - acc
        if r < best_num:
            best_num = r
            # p minimizing |q*y + p|; q*y = q*floor0 + (q*u)/den with frac acc
            base = q * floor0 + (q * u - acc) // den
            p = -base if 2 * acc <= den else -(base + 1)
            out.append((q, p, Fraction(r, den)))
            if r == 0:
                # exact dependence; later q cannot improve further
                break
    return out


def _scan_pattern(
    tables: Dict[int, np.ndarray],
    subset: Subset,
    reach: int,
    tile: _TileTable,
) -> None:
    """Tiled float scan of one support pattern of size >= 2.

    Candidates are m-vectors in [1, reach]^k with sign patterns on all but
    the first coordinate.  Tile keys are the per-coordinate dyadic levels
    plus the sign pattern id, so each tile spans a bounded height range.
    """
    k = len(subset)
    cols = tables[subset[0]][1 : reach + 1]
    splits = _dyadic_splits(reach)
    nseg = len(splits)
    sign_choices = list(itertools.product((1, -1), repeat=k - 1))

    # rows: cartesian of magnitudes of the non-leading coordinates
    total_rows = reach ** (k - 1)
    rows_per_chunk = max(1, _CHUNK_ELEMS // max(1, reach))

    lg = np.zeros(reach + 1, dtype=np.int64)
    for m in range(1, reach + 1):
        lg[m] = m.bit_length() - 1

    for row0 in range(0, total_rows, rows_per_chunk):
        row1 = min(total_rows, row0 + rows_per_chunk)
        idx = np.arange(row0, row1)
        mags = np.empty((k - 1, row1 - row0), dtype=np.int64)
        rem = idx
        for axis in range(k - 2, -1, -1):
            mags[axis] = rem % reach + 1
            rem = rem // reach
        for sid, signs in enumerate(sign_choices):
            off = np.zeros(row1 - row0, dtype=np.float64)
            for axis, s in enumerate(signs):
                off += s * tables[subset[axis + 1]][mags[axis]]
            d = _dist(cols[None, :] + off[:, None])
            seg = np.minimum.reduceat(d, splits, axis=1)
            # group rows by their dyadic-level signature
            sig = lg[mags[0]]
            for axis in range(1, k - 1):
                sig = sig * 64 + lg[mags[axis]]
            order = np.argsort(sig, kind="stable")
            sig_sorted = sig[order]
            bounds = np.flatnonzero(np.diff(sig_sorted)) + 1
            groups = np.split(order, bounds)
            for grp in groups:
                if not len(grp):
                    continue
                seg_grp = seg[grp]
                colmin = seg_grp.min(axis=0)
                levels = tuple(int(lg[mags[axis, grp[0]]]) for axis in range(k - 1))
                for s_idx in range(nseg):
                    key = (s_idx,) + levels + (sid,)
                    val = float(colmin[s_idx])
                    cur = tile.best.get(key)
                    if cur is not None and val >= cur[0]:
                        continue
                    r_local = int(seg_grp[:, s_idx].argmin())
                    r = int(grp[r_local])
                    lo = int(splits[s_idx])
                    hi = int(splits[s_idx + 1]) if s_idx + 1 < nseg else reach
                    c_local = int(d[r, lo:hi].argmin())
                    m1 = lo + c_local + 1
                    mvec = (m1,) + tuple(int(mags[a, r]) for a in range(k - 1))
                    qvec = (mvec[0],) + tuple(
                        s * m for s, m in zip(signs, mvec[1:])
                    )
                    tile.offer(key, val, qvec)


def _allocate_reaches(
    n: int, height_cap: int, budget: int
) -> Tuple[Dict[Subset, int], List[str]]:
    """Split the candidate budget across support patterns, cheapest class
    first; unused budget rolls forward to the larger classes."""
    reaches: Dict[Subset, int] = {}
    flags: List[str] = []
    remaining = float(budget)
    for k in range(1, n + 1):
        subsets = list(itertools.combinations(range(n), k))
        class_share = remaining / (n - k + 1)
        per_subset = class_share / len(subsets)
        spent = 0.0
        for s in subsets:
            patterns = 2 ** (k - 1)
            reach = min(height_cap, int((per_subset / patterns) ** (1.0 / k)))
            if reach < 1:
                flags.append(f"class-{k} pattern {s} skipped (budget)")
                reaches[s] = 0
                continue
            reaches[s] = reach
            spent += patterns * float(reach) ** k
            if reach < height_cap:
                flags.append(f"class-{k} pattern {s} truncated at {reach}")
        remaining = max(remaining - spent, 0.0)
    return reaches, flags


def search_records(
    ys: Sequence,
    height_cap: int,
    budget: Optional[int] = None,
    strict_budget: bool = False,
) -> RecordSet:
    """Enumerate approximations of the vector ys up to the height cap.

    ``budget`` caps the number of candidate evaluations; support patterns
    are truncated (cheapest class first) to fit it.  With ``strict_budget``
    a cap whose full box exceeds the budget raises instead.
    """
    fracs = [as_fraction(y) for y in ys]
    n = len(fracs)
    if n < 1:
        raise ValueError("need at least one coordinate")
    if height_cap < 2:
        raise ValueError("height_cap must be >= 2")
    guard = min_guard_height(ys)
    if guard is not None and height_cap > guard:
        raise ValueError(f"height_cap {height_cap} exceeds guard height {guard}")
    budget = resolve_budget(budget)
    if strict_budget and (2 * height_cap + 1) ** n > budget:
        raise BudgetExceededError(
            f"cap {height_cap} in dimension {n} needs "
            f"{(2 * height_cap + 1) ** n:.2e} evaluations > budget {budget:.2e}"
        )

    reaches, flags = _allocate_reaches(n, height_cap, budget)
    rs = RecordSet(n=n, height_cap=height_cap, reached=reaches, flags=flags)

    # tables for the vectorized multi-coordinate patterns
    max_reach_per_coord: Dict[int, int] = {}
    for s, reach in reaches.items():
        if len(s) >= 2 and reach >= 1:
            for i in s:
                max_reach_per_coord[i] = max(max_reach_per_coord.get(i, 0), reach)
    tables = {i: _frac_table(fracs[i], r) for i, r in max_reach_per_coord.items()}

    dependence: Optional[ApproxRecord] = None
    for s in sorted(reaches):
        reach = reaches[s]
        if reach < 1:
            continue
        k = len(s)
        records: List[ApproxRecord] = []
        if k == 1:
            for q_mag, p, res in _scan_single(fracs[s[0]], reach):
                q = tuple(q_mag if i == s[0] else 0 for i in range(n))
                rec = ApproxRecord(q, p, res, q_mag, q_mag, 1)
                if res == 0:
                    dependence = dependence or rec
                else:
                    records.append(rec)
        else:
            tile = _TileTable()
            _scan_pattern(tables, s, reach, tile)
            for _, qpart in sorted(tile.best.values(), key=lambda t: t[1]):
                q = [0] * n
                for coord, qi in zip(s, qpart):
                    q[coord] = qi
                qt = tuple(q)
                x = sum(qi * fracs[i] for i, qi in zip(s, qpart))
                p, res = nearest_int(x)
                rec = ApproxRecord(qt, p, res, sup_norm(qt), prod_mult(qt), k)
                if res == 0:
                    dependence = dependence or rec
                else:
                    records.append(rec)
        rs.subset_records[s] = _pareto_by_mult(records)

    rs.dependence_witness = dependence
    if dependence is not None:
        rs.flags.append("exact-dependence")
    active = [r for r in reaches.values() if r >= 1]
    rs.complete_height = min(active) if len(active) == len(reaches) else 0
    rs.sup_records = _sup_staircase(rs.all_records())
    return rs


# ---------------------------------------------------------------------------
# estimators


def _subset_points(records: Sequence[ApproxRecord]) -> List[Tuple[float, float]]:
    return [
        (math.log(r.mult_h), -math.log(r.residual))
        for r in records
        if r.mult_h >= 2 and r.residual > 0
    ]


def _subset_fit(records: Sequence[ApproxRecord], k: int) -> Optional[float]:
    """Decay fit for one support pattern.

    For k >= 2 coordinates the candidate count below product height P
    grows like P (log P)^(k-1), so record residuals carry a structural
    (k-1) log log P term; subtracting it debiases the fit.  Patterns with
    fewer than three usable scales of evidence yield no estimate.
    """
    pts = _subset_points(records)
    if k >= 2:
        pts = [(x, y - (k - 1) * math.log(max(x, 1.0))) for x, y in pts]
    if len(usable_points(pts)) < 3:
        return None
    return fit_exponent(pts)


def omega_estimate(records: RecordSet) -> float:
    """Standard exponent from the sup-norm record staircase."""
    if records.exact_dependence:
        return math.inf
    usable = [r for r in records.sup_records if r.sup_h <= records.complete_height]
    if len(usable) < 3:
        raise InsufficientDataError("need at least 3 sup-norm records")
    points = [(math.log(r.sup_h), -math.log(r.residual)) for r in usable if r.sup_h >= 2]
    est = fit_exponent(points)
    if est is None:
        raise InsufficientDataError("sup-norm records span no height range")
    return max(float(records.n), est)


def omega_mult_estimate(
    records: RecordSet, only_subsets: Optional[Sequence[Subset]] = None
) -> float:
    """Multiplicative exponent: per-support-pattern decay fits, maximized.

    The unrestricted estimate is fused with the constraints the true
    exponents satisfy identically (at least n, and at least the standard
    exponent of the same vector), so those inequalities hold for the
    estimates by construction rather than up to noise.
    """
    subsets = (
        [tuple(s) for s in only_subsets] if only_subsets else records.subsets()
    )
    if records.exact_dependence:
        witness = records.dependence_witness
        w_support = tuple(i for i, qi in enumerate(witness.q) if qi)
        if only_subsets is None or w_support in subsets:
            return math.inf
    estimates: List[float] = []
    total_points = 0
    for s in subsets:
        recs = records.subset_records.get(s, ())
        total_points += len(_subset_points(recs))
        est = _subset_fit(recs, len(s))
        if est is not None:
            estimates.append(records.n * est)
    if total_points < 3 or not estimates:
        raise InsufficientDataError("too few multiplicative records")
    best = max(estimates)
    if only_subsets:
        return best  # restricted searches report the raw pattern estimate
    try:
        best = max(best, omega_estimate(records))
    except InsufficientDataError:
        pass
    return max(float(records.n), best)


def decay_threshold(v: float, k: int, n: int) -> float:
    """The flow decay level corresponding to approximation quality v for
    support class k in dimension n: (v - n) / (k v + n)."""
    if v < n:
        raise DomainError(f"quality v={v} below dimension n={n}")
    if k < 1 or k > n:
        raise DomainError(f"class k={k} outside 1..{n}")
    return (v - n) / (k * v + n)


def exponent_from_threshold(c: float, k: int, n: int) -> float:
    """Inverse of decay_threshold: v = n (1 + c) / (1 - k c)."""
    if not 0 <= c < 1.0 / k:
        raise DomainError(f"decay level c={c} outside [0, 1/{k})")
    return n * (1 + c) / (1 - k * c)


def _simplex_grid(k: int, mesh: int = 8) -> List[Tuple[float, ...]]:
    """Barycentric grid of the given mesh on the (k-1)-simplex."""
    out = []
    for combo in itertools.product(range(mesh + 1), repeat=k):
        if sum(combo) == mesh:
            out.append(tuple(c / mesh for c in combo))
    return out


def default_t_schedule(height_cap: int) -> np.ndarray:
    """Geometric magnitude schedule reaching past the record range."""
    t_max = max(8.0, 1.6 * math.log(height_cap))
    n_steps = int(math.ceil(math.log(t_max) / math.log(2 ** 0.125))) + 1
    return np.array([2 ** (0.125 * j) for j in range(n_steps + 1)])


@dataclass(frozen=True)
class GammaEstimate:
    """Flow decay rate of one support class, with the slope series."""

    gamma: float
    series: Tuple[Tuple[float, float], ...]  # (t, best slope over directions)
    direction: Optional[Tuple[float, ...]] = None  # full-dimension simplex point
    empty_class: bool = False


def gamma_k_estimate(
    records: RecordSet,
    k: int,
    t_schedule: Optional[np.ndarray] = None,
    mesh: int = 8,
) -> GammaEstimate:
    """Decay rate of class-k lattice vectors under the diagonal flow.

    For each direction on the support simplex and each magnitude t the
    class-k records give min over records of
    max(e^t * residual, max_i e^(-t d_i) |q_i|); the decay slope is
    -log(min)/t.  The estimate is the second-largest interior peak of the
    slope series (a rate must recur at two scales to count as persistent;
    a single peak is used as-is), capped at the decay level the class's
    own record-decay fit sustains, and clamped to [0, 1/k).
    """
    if t_schedule is None:
        t_schedule = default_t_schedule(records.height_cap)
    ts = np.asarray(t_schedule, dtype=np.float64)
    subsets = [s for s in records.subsets() if len(s) == k]
    best_gamma = 0.0
    best_dir: Optional[Tuple[float, ...]] = None
    best_series: List[Tuple[float, float]] = []
    any_records = False
    grid = _simplex_grid(k, mesh)
    # isolated peaks above the rate the fitted class decay sustains are
    # single-scale noise; the fit provides the calibration level
    fits = [_subset_fit(records.subset_records[s], k) for s in subsets]
    fits = [records.n * f for f in fits if f is not None]
    sustained: Optional[float] = None
    if fits:
        sustained = decay_threshold(max(max(fits), float(records.n)), k, records.n)
    for s in subsets:
        recs = [r for r in records.subset_records[s] if r.residual > 0]
        if not recs:
            continue
        any_records = True
        log_res = np.array([math.log(r.residual) for r in recs])
        log_q = np.array(
            [[math.log(abs(r.q[i])) for i in s] for r in recs]
        )  # (nrec, k)
        # magnitude at which a record balances its two sides; the usable
        # evidence window ends at the deepest balance the records support
        balances = (np.log([r.mult_h for r in recs]) - k * log_res) / (k + 1)
        t_hi = float(balances.max())
        series = np.full(len(ts), -np.inf)
        dir_at = [None] * len(ts)
        for d in grid:
            dv = np.asarray(d)
            # log of max(e^t res_j, max_i e^{-t d_i} |q_ji|), minimized over j
            for ti, t in enumerate(ts):
                xs = np.maximum(t + log_res, (log_q - t * dv[None, :]).max(axis=1))
                m = xs.min()
                slope = -m / t
                if slope > series[ti]:
                    series[ti] = slope
                    dir_at[ti] = d
        peaks = _interior_peaks(ts, series, t_hi)
        if peaks:
            vals = sorted((v for _, v in peaks), reverse=True)
            gamma_s = vals[1] if len(vals) >= 2 else vals[0]
            peak_t = max((t for t, v in peaks if v == max(vals)), default=None)
        else:
            gamma_s = 0.0
            peak_t = None
        if sustained is not None:
            gamma_s = min(gamma_s, sustained)
        gamma_s = min(max(gamma_s, 0.0), 1.0 / k - 1e-9)
        if gamma_s >= best_gamma:
            best_gamma = gamma_s
            if peak_t is not None:
                ti = int(np.argmin(np.abs(ts - peak_t)))
                d = dir_at[ti]
            else:
                d = grid[0]
            full = [0.0] * records.n
            if d is not None:
                for coord, weight in zip(s, d):
                    full[coord] = weight
            best_dir = tuple(full)
            best_series = [(float(t), float(v)) for t, v in zip(ts, series)]
    if not any_records:
        return GammaEstimate(0.0, (), None, empty_class=True)
    return GammaEstimate(best_gamma, tuple(best_series), best_dir)


def _interior_peaks(
    ts: np.ndarray, series: np.ndarray, t_hi: float
) -> List[Tuple[float, float]]:
    """Local maxima of the slope series within the top half of the
    supported magnitude range (small magnitudes only reflect constants;
    beyond t_hi the records cannot balance and the series just decays)."""
    t_cut = max(t_hi / 2.0, float(ts[0]))
    peaks = []
    for i in range(1, len(series) - 1):
        if not t_cut <= ts[i] <= t_hi * 1.1:
            continue
        if series[i] <= 0 or not np.isfinite(series[i]):
            continue
        if series[i] > series[i - 1] and series[i] >= series[i + 1]:
            peaks.append((float(ts[i]), float(series[i])))
    return peaks


def omega_from_gamma(gammas: Sequence[float], n: Optional[int] = None) -> float:
    """Multiplicative exponent from per-class decay rates:
    max over k of n (1 + gamma_k) / (1 - k gamma_k)."""
    if n is None:
        n = len(gammas)
    best = -math.inf
    for idx, g in enumerate(gammas):
        k = idx + 1
        if g < 0:
            raise DomainError("decay rates must be nonnegative")
        if g * k >= 1:
            return math.inf
        best = max(best, n * (1 + g) / (1 - k * g))
    if best == -math.inf:
        raise ValueError("need at least one decay rate")
    return best
