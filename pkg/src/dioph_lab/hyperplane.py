"""Hyperplane experiments: build parameterized hyperplanes, predict their
multiplicative exponent from the coefficient column, sample points (box
or moment curve), run every estimator, and compare routes.

A hyperplane here is the graph of the last coordinate over the first
n-1: (x_1, ..., x_{n-1}, a_1 x_1 + ... + a_{s-1} x_{s-1} + b).  Its
multiplicative exponent is max(n, (n/s) * sigma) where sigma is the
simultaneous exponent of the column (a_1, ..., a_{s-1}, b).
"""

from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .cfrac import from_quotients, sigma_from_cfrac, sigma_vector_estimate
from .errors import InsufficientDataError, UnsupportedDimensionError
from .exponents import (
    GammaEstimate,
    RecordSet,
    gamma_k_estimate,
    omega_estimate,
    omega_from_gamma,
    omega_mult_estimate,
    search_records,
)
from .lattice import TrajectoryPoint, flow_trajectory, trajectory_tail_slope
from .numeric import ExactReal, as_fraction, min_guard_height


@dataclass(frozen=True)
class Hyperplane:
    """Graph hyperplane with s active parameters (all a_i nonzero)."""

    n: int
    s: int
    coeffs: Tuple[ExactReal, ...]  # a_1 .. a_{s-1}
    b: ExactReal

    def __post_init__(self) -> None:
        if not 1 <= self.s <= self.n:
            raise ValueError("need 1 <= s <= n")
        if len(self.coeffs) != self.s - 1:
            raise ValueError(f"expected {self.s - 1} slope coefficients")
        if any(as_fraction(a) == 0 for a in self.coeffs):
            raise ValueError("slope coefficients must be nonzero")

    def column(self) -> Tuple[ExactReal, ...]:
        """The coefficient column (a_1, ..., a_{s-1}, b)."""
        return self.coeffs + (self.b if isinstance(self.b, ExactReal)
                              else ExactReal(as_fraction(self.b)),)

    def guard_height(self) -> Optional[int]:
        return min_guard_height(self.column())


def point_on(h: Hyperplane, xs: Sequence) -> Tuple[Fraction, ...]:
    """Exact coordinates of the hyperplane point over parameters xs."""
    if len(xs) != h.n - 1:
        raise ValueError(f"expected {h.n - 1} parameters")
    fr = [as_fraction(x) for x in xs]
    last = as_fraction(h.b)
    for a_i, x_i in zip(h.coeffs, fr):
        last += as_fraction(a_i) * x_i
    return tuple(fr) + (last,)


@dataclass(frozen=True)
class ExponentPrediction:
    """Predicted multiplicative exponent of the hyperplane."""

    value: float  # max(n, (n/s) * sigma); inf on exact dependence
    sigma: float
    route: str  # "cfrac" or "brute-force"
    exact_dependence: bool = False


def theoretical_exponent(h: Hyperplane, sigma_cap: int) -> ExponentPrediction:
    """Predict the exponent from the coefficient column.

    For a plane with a single parameter the column is just b, whose
    simultaneous exponent comes from its quotient sequence when known;
    otherwise a brute-force simultaneous search up to sigma_cap is used.
    """
    column = h.column()
    if h.s == 1 and isinstance(h.b, ExactReal) and h.b.quotients:
        est = sigma_from_cfrac(from_quotients(h.b.quotients))
        sigma, route, dep = est.estimate, "cfrac", est.exact_rational
    else:
        guard = min_guard_height(column)
        if guard is not None and sigma_cap > guard:
            raise ValueError(f"sigma_cap {sigma_cap} exceeds guard height {guard}")
        est = sigma_vector_estimate([as_fraction(c) for c in column], sigma_cap)
        sigma, route, dep = est.estimate, "brute-force", est.exact_dependence
    if math.isinf(sigma):
        return ExponentPrediction(math.inf, sigma, route, True)
    return ExponentPrediction(max(float(h.n), h.n / h.s * sigma), sigma, route, dep)


def _random_fraction(rng: random.Random, bits: int) -> Fraction:
    """Uniform rational in [0, 1] whose denominator has exactly ``bits``
    bits and survives reduction."""
    den = (1 << (bits - 1)) | rng.getrandbits(bits - 1) | 1
    while True:
        num = rng.randrange(den + 1)
        if math.gcd(num, den) == 1:
            return Fraction(num, den)


@dataclass(frozen=True)
class SamplePoint:
    kind: str  # "box" or "curve"
    params: Tuple[Fraction, ...]
    y: Tuple[Fraction, ...]


def sample_box(
    h: Hyperplane, count: int, denominator_bits: int = 256, seed: int = 0
) -> List[SamplePoint]:
    """Deterministic pseudo-random parameter points mapped onto the
    hyperplane."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        xs = tuple(_random_fraction(rng, denominator_bits) for _ in range(h.n - 1))
        out.append(SamplePoint("box", xs, point_on(h, xs)))
    return out


def sample_curve(h: Hyperplane, count: int, seed: int = 0) -> List[SamplePoint]:
    """Points on the moment curve tau -> (tau, tau^2, ..., tau^(n-1))
    inside the hyperplane (nondegenerate: not contained in any proper
    affine subspace of the parameter space)."""
    if h.n < 3:
        raise UnsupportedDimensionError(
            "a nondegenerate curve needs at least a 2-dimensional parameter "
            "space, i.e. n >= 3"
        )
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    taus = set()
    while len(taus) < count:
        den = (1 << 31) | rng.getrandbits(31) | 1
        num = rng.randrange(1, den)
        taus.add(Fraction(num, den))
    out = []
    for tau in sorted(taus):
        xs = tuple(tau**j for j in range(1, h.n))
        out.append(SamplePoint("curve", xs, point_on(h, xs)))
    return out


def sandwich_check(
    omega: Optional[float], omega_mult: Optional[float], n: int, tol: float = 0.1
) -> Tuple[bool, str]:
    """Check omega <= omega_mult <= n * omega within tolerance."""
    if omega is None or omega_mult is None:
        return True, "sandwich-skipped-missing"
    if math.isinf(omega) or math.isinf(omega_mult):
        if math.isinf(omega) and math.isinf(omega_mult):
            return True, "sandwich-skipped-inf"
        return False, "sandwich-violation-inf-mismatch"
    if omega - tol <= omega_mult <= n * omega + tol:
        return True, ""
    return False, "sandwich-violation"


@dataclass
class ExperimentConfig:
    height_cap: int
    sigma_cap: int
    samples: int = 20
    denominator_bits: int = 256
    seed: int = 0
    budget: Optional[int] = None
    curve_samples: int = 0
    flow_bridge_points: int = 0
    flow_precision_bits: int = 256
    flow_steps: int = 32
    workers: int = 1


@dataclass
class PointResult:
    index: int
    kind: str
    params: Tuple[Fraction, ...]
    y: Tuple[Fraction, ...]
    omega: Optional[float]
    omega_mult: Optional[float]
    gammas: Tuple[float, ...]
    omega_gamma: Optional[float]
    flow_bridge: Optional[float]
    trajectory: Tuple[TrajectoryPoint, ...]
    flow_direction: Optional[Tuple[float, ...]]
    flags: Tuple[str, ...]
    records: Optional[RecordSet]


@dataclass
class ExperimentReport:
    hyperplane: Hyperplane
    config: ExperimentConfig
    theoretical: ExponentPrediction
    points: List[PointResult]

    def gaps(self) -> List[float]:
        theo = self.theoretical.value
        return [
            p.omega_mult - theo
            for p in self.points
            if p.omega_mult is not None
            and not math.isinf(p.omega_mult)
            and not math.isinf(theo)
        ]

    def median_omega_mult(self) -> Optional[float]:
        vals = [
            p.omega_mult
            for p in self.points
            if p.omega_mult is not None and not math.isinf(p.omega_mult)
        ]
        return statistics.median(vals) if vals else None

    def median_gap(self) -> Optional[float]:
        gaps = self.gaps()
        return statistics.median(gaps) if gaps else None

    def iqr_omega_mult(self) -> Optional[float]:
        vals = sorted(
            p.omega_mult
            for p in self.points
            if p.omega_mult is not None and not math.isinf(p.omega_mult)
        )
        if len(vals) < 4:
            return None
        q = statistics.quantiles(vals, n=4)
        return q[2] - q[0]


def _evaluate_point(args) -> PointResult:
    (index, point, n, cfg_tuple) = args
    (height_cap, budget, do_flow, flow_precision_bits, flow_steps) = cfg_tuple
    flags: List[str] = []
    rs = search_records(point.y, height_cap, budget=budget)
    flags.extend(rs.flags)
    omega = omega_mult = omega_gamma = None
    try:
        omega = omega_estimate(rs)
    except InsufficientDataError as exc:
        flags.append(f"omega-insufficient: {exc}")
    try:
        omega_mult = omega_mult_estimate(rs)
    except InsufficientDataError as exc:
        flags.append(f"omega-mult-insufficient: {exc}")
    gamma_results = [gamma_k_estimate(rs, k) for k in range(1, n + 1)]
    gammas = tuple(g.gamma for g in gamma_results)
    try:
        omega_gamma = omega_from_gamma(gammas, n)
    except ValueError:
        flags.append("omega-gamma-unavailable")
    ok, flag = sandwich_check(omega, omega_mult, n)
    if flag:
        flags.append(flag)

    flow_bridge = None
    trajectory: Tuple[TrajectoryPoint, ...] = ()
    direction: Optional[Tuple[float, ...]] = None
    if do_flow and not rs.exact_dependence:
        best = max(gamma_results, key=lambda g: g.gamma)
        direction = best.direction or tuple([1.0 / n] * n)
        t_max = 1.6 * math.log(height_cap)
        traj = flow_trajectory(
            point.y, direction, t_max, flow_steps, flow_precision_bits
        )
        trajectory = tuple(traj)
        flow_bridge = trajectory_tail_slope(traj)
    return PointResult(
        index=index,
        kind=point.kind,
        params=point.params,
        y=point.y,
        omega=omega,
        omega_mult=omega_mult,
        gammas=gammas,
        omega_gamma=omega_gamma,
        flow_bridge=flow_bridge,
        trajectory=trajectory,
        flow_direction=direction,
        flags=tuple(flags),
        records=rs,
    )


def run_experiment(h: Hyperplane, config: ExperimentConfig) -> ExperimentReport:
    """Sample the hyperplane, run every estimator per point, and compare
    against the predicted exponent."""
    guard = h.guard_height()
    if guard is not None and config.height_cap > guard:
        raise ValueError(
            f"height_cap {config.height_cap} exceeds coefficient guard {guard}"
        )
    theo = theoretical_exponent(h, config.sigma_cap)
    points = sample_box(h, config.samples, config.denominator_bits, config.seed)
    if config.curve_samples:
        points.extend(sample_curve(h, config.curve_samples, config.seed + 1))
    tasks = []
    for i, pt in enumerate(points):
        do_flow = i < config.flow_bridge_points
        tasks.append(
            (
                i,
                pt,
                h.n,
                (
                    config.height_cap,
                    config.budget,
                    do_flow,
                    config.flow_precision_bits,
                    config.flow_steps,
                ),
            )
        )
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_evaluate_point, tasks))
    else:
        results = [_evaluate_point(t) for t in tasks]
    return ExperimentReport(h, config, theo, results)
