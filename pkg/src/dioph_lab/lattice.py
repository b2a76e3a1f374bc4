"""Diagonal-flow route on the space of unimodular lattices.

The vector y embeds as the upper-triangular basis with first row
(1, y_1, ..., y_n); the flow scales row 0 by e^t and row i by e^(-t_i)
with t = sum t_i.  Shortest-vector decay along a flow ray estimates the
same decay rates the record search measures, from the other side.

Shortest vectors are computed by LLL reduction at high working precision
followed by exhaustive enumeration inside a radius certified from the
reduced Gram-Schmidt data, so the returned vector is the true minimum of
the scaled lattice (up to the floating representation of the scaling,
which is carried at ``precision_bits``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf

from .errors import DomainError, UnsupportedDimensionError
from .numeric import as_fraction, nearest_int

MAX_DIMENSION = 6
_LLL_DELTA = 0.99


@dataclass(frozen=True)
class FlowParams:
    """Nonnegative flow magnitudes per contracting coordinate."""

    t_vec: Tuple[float, ...]

    def __post_init__(self) -> None:
        if any(t < 0 for t in self.t_vec):
            raise ValueError("flow magnitudes must be nonnegative")

    @property
    def t(self) -> float:
        return sum(self.t_vec)

    @staticmethod
    def along(direction: Sequence[float], magnitude: float) -> "FlowParams":
        return FlowParams(tuple(magnitude * d for d in direction))


@dataclass(frozen=True)
class LatticeBasis:
    """Columns with exact rational entries; must be nonsingular."""

    columns: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        d = len(self.columns)
        if any(len(c) != d for c in self.columns):
            raise ValueError("basis must be square")
        if self.det() == 0:
            raise ValueError("basis columns are linearly dependent")

    @property
    def dimension(self) -> int:
        return len(self.columns)

    def det(self) -> Fraction:
        m = [list(col) for col in zip(*self.columns)]  # rows
        d = len(m)
        det = Fraction(1)
        for i in range(d):
            pivot = next((r for r in range(i, d) if m[r][i] != 0), None)
            if pivot is None:
                return Fraction(0)
            if pivot != i:
                m[i], m[pivot] = m[pivot], m[i]
                det = -det
            det *= m[i][i]
            inv = 1 / m[i][i]
            for r in range(i + 1, d):
                factor = m[r][i] * inv
                if factor:
                    m[r] = [a - factor * b for a, b in zip(m[r], m[i])]
        return det


@dataclass(frozen=True)
class ScaledBasis:
    """Row-scaled basis in high-precision floats (column-major)."""

    columns: Tuple[Tuple[mpf, ...], ...]
    precision_bits: int

    @property
    def dimension(self) -> int:
        return len(self.columns)


def u_matrix(ys: Sequence) -> LatticeBasis:
    """Unimodular embedding of y: first row (1, y_1, ..., y_n), identity
    below."""
    fracs = [as_fraction(y) for y in ys]
    n = len(fracs)
    cols: List[Tuple[Fraction, ...]] = []
    first = tuple([Fraction(1)] + [Fraction(0)] * n)
    cols.append(first)
    for j, y in enumerate(fracs):
        col = [y] + [Fraction(0)] * n
        col[j + 1] = Fraction(1)
        cols.append(tuple(col))
    return LatticeBasis(tuple(cols))


def working_precision(precision_bits: int, flow: FlowParams) -> int:
    """Raise the precision when e^t would eat into the requested mantissa."""
    needed = int(2 * flow.t / math.log(2)) + 64
    return max(precision_bits, needed)


def apply_flow(
    basis: LatticeBasis, flow: FlowParams, precision_bits: int = 256
) -> ScaledBasis:
    """Scale row 0 by e^t and row i by e^(-t_i), in float arithmetic of
    the requested precision."""
    if precision_bits < 64:
        raise ValueError("precision_bits must be >= 64")
    d = basis.dimension
    if len(flow.t_vec) != d - 1:
        raise ValueError("flow dimension mismatch")
    prec = working_precision(precision_bits, flow)
    with mp.workprec(prec):
        t_total = sum((mpf(ti) for ti in flow.t_vec), mpf(0))
        weights = [mp.e ** t_total] + [mp.e ** mpf(-ti) for ti in flow.t_vec]
        cols = tuple(
            tuple(weights[i] * mpf(col[i].numerator) / mpf(col[i].denominator)
                  for i in range(d))
            for col in basis.columns
        )
    return ScaledBasis(cols, prec)


def _to_scaled(basis) -> ScaledBasis:
    if isinstance(basis, ScaledBasis):
        return basis
    if isinstance(basis, LatticeBasis):
        d = basis.dimension
        return apply_flow(basis, FlowParams((0.0,) * (d - 1)))
    raise TypeError("expected LatticeBasis or ScaledBasis")


def _gram_schmidt(vecs: List[List[mpf]]) -> Tuple[List[List[mpf]], List[List[mpf]], List[mpf]]:
    d = len(vecs)
    ortho = [list(v) for v in vecs]
    mu = [[mpf(0)] * d for _ in range(d)]
    norms: List[mpf] = []
    for i in range(d):
        for j in range(i):
            mu[i][j] = _dot(vecs[i], ortho[j]) / norms[j]
            ortho[i] = [a - mu[i][j] * b for a, b in zip(ortho[i], ortho[j])]
        norms.append(_dot(ortho[i], ortho[i]))
    return ortho, mu, norms


def _dot(a: Sequence[mpf], b: Sequence[mpf]) -> mpf:
    return sum(x * y for x, y in zip(a, b))


def _lll(vectors: List[List[mpf]], delta: float = _LLL_DELTA) -> Tuple[List[List[mpf]], List[List[int]]]:
    """LLL-reduce the given basis vectors; returns (reduced, transform)
    with reduced[i] = sum_j transform[i][j] * original[j]."""
    d = len(vectors)
    vecs = [list(v) for v in vectors]
    u = [[int(i == j) for j in range(d)] for i in range(d)]

    def size_reduce_row(i, mu):
        changed = False
        for j in range(i - 1, -1, -1):
            r = int(mp.floor(mu[i][j] + mpf("0.5")))
            if r:
                vecs[i] = [a - r * b for a, b in zip(vecs[i], vecs[j])]
                u[i] = [a - r * b for a, b in zip(u[i], u[j])]
                changed = True
        return changed

    _, mu, norms = _gram_schmidt(vecs)
    k = 1
    steps = 0
    while k < d:
        steps += 1
        if steps > 10000:
            raise RuntimeError("LLL failed to terminate")
        if size_reduce_row(k, mu):
            _, mu, norms = _gram_schmidt(vecs)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            vecs[k], vecs[k - 1] = vecs[k - 1], vecs[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            _, mu, norms = _gram_schmidt(vecs)
            k = max(k - 1, 1)
    return vecs, u


def _enumerate_short(
    reduced: List[List[float]], radius_sq: float
) -> List[Tuple[int, ...]]:
    """All coefficient vectors (up to global sign) whose lattice vector
    has squared Euclidean norm within the radius, from the reduced basis.

    Standard Fincke-Pohst: with Gram-Schmidt data B_i and mu, the squared
    norm of sum c_i b_i is sum_i B_i (c_i + sum_{j>i} mu[j][i] c_j)^2,
    which bounds each coefficient given the ones above it.
    """
    d = len(reduced)
    gs = np.array(reduced, dtype=np.float64)
    ortho = gs.copy()
    mu = np.zeros((d, d))
    norms = np.zeros(d)
    for i in range(d):
        for j in range(i):
            mu[i, j] = ortho[j] @ gs[i] / norms[j]
            ortho[i] = ortho[i] - mu[i, j] * ortho[j]
        norms[i] = ortho[i] @ ortho[i]

    out: List[Tuple[int, ...]] = []
    coeffs = [0] * d

    def recurse(level: int, remaining: float, shift: np.ndarray, free: bool) -> None:
        if level < 0:
            if not free:
                out.append(tuple(coeffs))
            return
        b_norm = norms[level]
        if b_norm <= 0:
            return
        center = -shift[level]
        half_width = math.sqrt(max(remaining, 0.0) / b_norm)
        lo = math.ceil(center - half_width - 1e-9)
        hi = math.floor(center + half_width + 1e-9)
        if free and lo < 0:
            lo = 0  # global sign symmetry: first nonzero coefficient positive
        for c in range(lo, hi + 1):
            used = (c + shift[level]) ** 2 * b_norm
            if used > remaining * (1 + 1e-9) + 1e-300:
                continue
            coeffs[level] = c
            recurse(level - 1, remaining - used, shift + c * mu[level], free and c == 0)
        coeffs[level] = 0

    recurse(d - 1, radius_sq, np.zeros(d), True)
    return out


def shortest_vector(basis) -> Tuple[Tuple[int, ...], float]:
    """Shortest nonzero lattice vector in the sup norm.

    Accepts an exact LatticeBasis (scaled at zero flow) or a ScaledBasis.
    Returns the coefficient vector with respect to the input columns and
    the norm as a float.
    """
    scaled = _to_scaled(basis)
    d = scaled.dimension
    if d > MAX_DIMENSION:
        raise UnsupportedDimensionError(f"dimension {d} above guard {MAX_DIMENSION}")
    with mp.workprec(scaled.precision_bits):
        vectors = [list(col) for col in scaled.columns]
        reduced, transform = _lll(vectors)
        # certified sup-norm bound: the best reduced vector
        sup_bound = min(max(abs(x) for x in vec) for vec in reduced)
        radius_sq = float(d * sup_bound**2) * (1 + 1e-9)
        reduced_f = [[float(x) for x in vec] for vec in reduced]
        candidates = _enumerate_short(reduced_f, radius_sq)
        best: Optional[Tuple[mpf, Tuple[int, ...]]] = None
        for cand in candidates:
            vec = [mpf(0)] * d
            for ci, row in zip(cand, reduced):
                if ci:
                    vec = [a + ci * b for a, b in zip(vec, row)]
            norm = max(abs(x) for x in vec)
            if norm == 0:
                continue
            orig = _combine(cand, transform)
            key = (norm, orig)
            if best is None or key < best:
                best = key
        if best is None:  # enumeration produced nothing beyond the origin
            vec = reduced[0]
            best = (max(abs(x) for x in vec), tuple(transform[0]))
        norm, coeffs = best
        return _canonical_sign(coeffs), float(norm)


def _combine(cand: Sequence[int], transform: List[List[int]]) -> Tuple[int, ...]:
    d = len(transform)
    out = [0] * d
    for ci, row in zip(cand, transform):
        if ci:
            for j in range(d):
                out[j] += ci * row[j]
    return tuple(out)


def _canonical_sign(coeffs: Tuple[int, ...]) -> Tuple[int, ...]:
    for c in coeffs:
        if c > 0:
            return coeffs
        if c < 0:
            return tuple(-x for x in coeffs)
    return coeffs


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    norm: float
    slope: float  # -log(norm)/t


def flow_trajectory(
    ys: Sequence,
    direction: Sequence[float],
    t_max: float,
    steps: int,
    precision_bits: int = 256,
) -> List[TrajectoryPoint]:
    """Shortest-norm decay along the flow ray t * direction."""
    if steps < 2:
        raise ValueError("need at least 2 steps")
    total = sum(direction)
    if abs(total - 1.0) > 1e-9 or any(d < 0 for d in direction):
        raise ValueError("direction must lie on the unit simplex")
    basis = u_matrix(ys)
    out: List[TrajectoryPoint] = []
    for i in range(1, steps + 1):
        t = t_max * i / steps
        flow = FlowParams.along(direction, t)
        _, norm = shortest_vector(apply_flow(basis, flow, precision_bits))
        out.append(TrajectoryPoint(t, norm, -math.log(norm) / t))
    return out


def trajectory_tail_slope(points: Sequence[TrajectoryPoint]) -> float:
    """Limsup proxy: best slope over the top half of the magnitude range."""
    if not points:
        raise ValueError("empty trajectory")
    t_cut = points[-1].t / 2.0
    return max(p.slope for p in points if p.t >= t_cut)


# ---------------------------------------------------------------------------
# hyperplane-specific pieces


def penalty_vector(w: Sequence[int], hyperplane) -> Tuple[Fraction, ...]:
    """The coefficient column controlling how well w aligns with the
    hyperplane: (p_0 + b p_n, p_1 + a_1 p_n, ..., p_{s-1} + a_{s-1} p_n)."""
    n, s = hyperplane.n, hyperplane.s
    if len(w) != n + 1:
        raise ValueError("w must have n+1 entries")
    p_n = w[-1]
    b = as_fraction(hyperplane.b)
    entries = [w[0] + b * p_n]
    for i in range(1, s):
        a_i = as_fraction(hyperplane.coeffs[i - 1])
        entries.append(w[i] + a_i * p_n)
    return tuple(entries)


def rank_one_rc_norm(w: Sequence[int], hyperplane) -> Fraction:
    """Sup norm of the full pass-through column: the penalty entries plus
    the coordinates p_s..p_{n-1}, which the flow cannot shrink."""
    n, s = hyperplane.n, hyperplane.s
    entries = list(penalty_vector(w, hyperplane))
    entries.extend(Fraction(w[i]) for i in range(s, n))
    return max(abs(e) for e in entries)


@dataclass(frozen=True)
class Violation:
    """A witness (w, t) where the flow lower-bound condition fails."""

    w: Tuple[int, ...]
    t_vec: Tuple[float, ...]
    lhs: float  # max(e^{-t_i}|p_i|, e^t ||RC||)
    rhs: float  # e^{-d_s t}


def violation_search(
    hyperplane,
    d_s: float,
    t_schedule: Optional[Sequence[float]] = None,
    w_budget: int = 10**5,
    mesh: int = 8,
    max_results: int = 1000,
) -> List[Violation]:
    """Search for witnesses against the flow lower-bound condition at
    level d_s.

    Candidate vectors w have p_1..p_{s-1} and p_n nonzero and
    p_s..p_{n-1} = 0 (any other pattern keeps a unit coordinate in the
    pass-through column).  Only nearest-integer offsets for p_0 and p_i
    can keep the penalty entries below 1, so the search is complete over
    the magnitude of p_n up to the budget.  An empty result is evidence
    the condition holds at this level, up to the budget.
    """
    n, s = hyperplane.n, hyperplane.s
    if not 0 < d_s < 1.0 / s:
        raise DomainError(f"level d_s={d_s} outside (0, 1/{s})")
    if t_schedule is None:
        t_hi = 1.6 * math.log(max(w_budget, 8)) + 4.0
        t_schedule = [5.0 + 0.5 * j for j in range(int((t_hi - 5.0) / 0.5) + 1)]
    coeff_fracs = [as_fraction(a) for a in hyperplane.coeffs]
    b = as_fraction(hyperplane.b)
    # support simplex directions over coordinates {1..s-1, n}
    if s == 1:
        directions = [(1.0,)]
    else:
        directions = _support_directions(s, mesh)

    out: List[Violation] = []
    for p_n in range(1, w_budget + 1):
        w = [0] * (n + 1)
        w[-1] = p_n
        p0, _ = nearest_int(b * p_n)
        w[0] = p0
        dead = False
        for i, a_i in enumerate(coeff_fracs, start=1):
            pi, _ = nearest_int(a_i * p_n)
            if pi == 0:
                dead = True  # support requires p_i nonzero; entry >= 1/2
                break
            w[i] = pi
        if dead:
            continue
        rc = max(abs(e) for e in penalty_vector(w, hyperplane))
        if rc == 0:
            continue  # exact dependence: the condition is vacuous here
        log_rc = math.log(rc)
        support_mags = [abs(w[i]) for i in range(1, s)] + [p_n]
        log_z = [math.log(m) for m in support_mags]
        for t in t_schedule:
            for d in directions:
                # z side uses t_i = t*d_i on the support coordinates
                lhs_log = max(
                    max(lz - t * di for lz, di in zip(log_z, d)),
                    t + log_rc,
                )
                rhs_log = -d_s * t
                if lhs_log < rhs_log:
                    t_vec = [0.0] * n
                    for coord, di in zip(list(range(1, s)) + [n], d):
                        t_vec[coord - 1] = t * di
                    out.append(
                        Violation(tuple(w), tuple(t_vec),
                                  math.exp(lhs_log), math.exp(rhs_log))
                    )
                    if len(out) >= max_results:
                        return out
    return out


def _support_directions(s: int, mesh: int) -> List[Tuple[float, ...]]:
    out = []
    for combo in itertools.product(range(mesh + 1), repeat=s):
        if sum(combo) == mesh:
            out.append(tuple(c / mesh for c in combo))
    return out
