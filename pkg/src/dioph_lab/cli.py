"""Command-line entry point.

Subcommands:

* ``cfrac``      -- expand or construct a number, print quotients,
                    convergents and the growth-exponent series.
* ``estimate``   -- record search for a point, both exponent estimates.
* ``flow``       -- flow trajectory, or the violation search.
* ``experiment`` -- full hyperplane pipeline from a config file.

All CSV files start with a schema stamp comment; columns never reorder
within a schema version.  Floats are printed with 12 significant digits,
rationals exactly as p/q, infinities as the literal string "inf".

Exit codes: 0 success, 2 usage/config error, 3 resource guard,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .cfrac import (
    construct_with_sigma,
    expand,
    from_quotients,
    golden_number,
    quadratic_surd,
    sigma_from_cfrac,
)
from .errors import (
    BudgetExceededError,
    DiophLabError,
    InsufficientDataError,
    UnsupportedDimensionError,
)
from .exponents import (
    RecordSet,
    omega_estimate,
    omega_mult_estimate,
    resolve_budget,
    search_records,
)
from .hyperplane import (
    ExperimentConfig,
    ExperimentReport,
    Hyperplane,
    run_experiment,
)
from .lattice import flow_trajectory, violation_search
from .numeric import ExactReal, as_fraction

SCHEMA_STAMP = "# schema=dioph-lab/1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_INTERNAL = 4


class ConfigError(DiophLabError):
    """Invalid CLI/config input; carries every detected violation."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------------------
# formatting


def fmt_float(x: Optional[float]) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf"
    return f"{x:.12g}"


def fmt_frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def fmt_fracs(xs: Sequence[Fraction]) -> str:
    return ";".join(fmt_frac(x) for x in xs)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(SCHEMA_STAMP + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# coefficient specs


def parse_coefficient(spec: str) -> ExactReal:
    """Parse a coefficient spec: ``golden[:depth]``, ``sqrt:k[:depth]``,
    ``sigma:target:depth``, or an exact rational ``p/q`` / integer."""
    text = spec.strip()
    parts = text.split(":")
    name = parts[0].lower()
    try:
        if name == "golden":
            depth = int(parts[1]) if len(parts) > 1 else 40
            return golden_number(depth)
        if name == "sqrt":
            if len(parts) < 2:
                raise ConfigError([f"sqrt spec needs an argument: {spec!r}"])
            depth = int(parts[2]) if len(parts) > 2 else 40
            return quadratic_surd(int(parts[1]), depth)
        if name == "sigma":
            if len(parts) < 3:
                raise ConfigError([f"sigma spec needs target and depth: {spec!r}"])
            number, _ = construct_with_sigma(float(parts[1]), int(parts[2]))
            return number
        return ExactReal(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError([f"bad coefficient spec {spec!r}: {exc}"]) from exc


def parse_point(spec: str) -> List[ExactReal]:
    return [parse_coefficient(part) for part in spec.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# cfrac subcommand


def cmd_cfrac(args: argparse.Namespace) -> int:
    if args.construct_sigma is not None:
        number, cf = construct_with_sigma(args.construct_sigma, args.depth)
        source = f"sigma target {args.construct_sigma}"
    else:
        if args.golden:
            number = golden_number(max(args.depth + 1, 40))
        elif args.sqrt is not None:
            number = quadratic_surd(args.sqrt, max(args.depth + 1, 40))
        elif args.rational is not None:
            number = ExactReal(Fraction(args.rational))
        else:
            raise ConfigError(["choose one of --golden/--sqrt/--rational/--construct-sigma"])
        cf = expand(number, args.depth)
        source = "expansion"
    print(f"quotients ({source}): {list(cf.quotients)}")
    try:
        est = sigma_from_cfrac(cf)
    except InsufficientDataError:
        est = None
    print("convergents:")
    series = dict()
    if est is not None:
        series = {k: v for k, v in est.series}
    rows = []
    for k, (p, q) in enumerate(cf.convergents):
        vk = series.get(k)
        print(f"  k={k:<3d} p/q = {p}/{q}" + (f"  v_k = {fmt_float(vk)}" if vk is not None else ""))
        rows.append([str(k), str(p), str(q), fmt_float(vk) if vk is not None else ""])
    if est is not None:
        print(f"sigma estimate: {fmt_float(est.estimate)}"
              + (" (exact rational)" if est.exact_rational else ""))
    if args.csv:
        _write_csv(Path(args.csv), ["k", "p_k", "q_k", "v_k"], rows)
        print(f"series written to {args.csv}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate subcommand


def records_rows(rs: RecordSet) -> List[List[str]]:
    rows = []
    for subset in rs.subsets():
        for rec in rs.subset_records[subset]:
            rows.append(
                [
                    str(rec.k),
                    ";".join(str(qi) for qi in rec.q),
                    str(rec.p),
                    fmt_frac(rec.residual),
                    str(rec.sup_h),
                    str(rec.mult_h),
                ]
            )
    return rows


RECORDS_HEADER = ["class_k", "q_entries", "p", "residual", "sup_h", "mult_h"]


def cmd_estimate(args: argparse.Namespace) -> int:
    point = parse_point(args.point)
    if not point:
        raise ConfigError(["--point must name at least one coordinate"])
    rs = search_records(
        point,
        args.cap,
        budget=args.budget,
        strict_budget=not args.degrade,
    )
    flags = list(rs.flags)
    try:
        omega = omega_estimate(rs)
    except InsufficientDataError as exc:
        omega = None
        flags.append(f"omega-insufficient: {exc}")
    try:
        omega_mult = omega_mult_estimate(rs)
    except InsufficientDataError as exc:
        omega_mult = None
        flags.append(f"omega-mult-insufficient: {exc}")
    if args.csv:
        _write_csv(Path(args.csv), RECORDS_HEADER, records_rows(rs))
    print(
        f"omega={fmt_float(omega)}, omega_mult={fmt_float(omega_mult)}, "
        f"flags={'|'.join(flags) if flags else 'none'}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# flow subcommand


TRAJECTORY_HEADER = ["direction_id", "t", "shortest_norm", "slope"]
VIOLATIONS_HEADER = ["w_entries", "t_entries", "lhs", "rhs"]


def _parse_direction(text: str) -> Tuple[float, ...]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError([f"bad direction {text!r}"]) from exc
    return parts


def cmd_flow(args: argparse.Namespace) -> int:
    if args.violations:
        problems = []
        if args.n is None:
            problems.append("--n is required in violation mode")
        if args.b is None:
            problems.append("--b is required in violation mode")
        if args.ds is None:
            problems.append("--ds is required in violation mode")
        if problems:
            raise ConfigError(problems)
        coeffs = tuple(parse_coefficient(a) for a in (args.a or []))
        plane = Hyperplane(args.n, len(coeffs) + 1, coeffs, parse_coefficient(args.b))
        hits = violation_search(plane, args.ds, w_budget=args.w_budget)
        rows = [
            [
                ";".join(str(x) for x in v.w),
                ";".join(fmt_float(t) for t in v.t_vec),
                fmt_float(v.lhs),
                fmt_float(v.rhs),
            ]
            for v in hits
        ]
        if args.csv:
            _write_csv(Path(args.csv), VIOLATIONS_HEADER, rows)
        print(f"violations={len(hits)} at level d_s={fmt_float(args.ds)} "
              f"(w budget {args.w_budget})")
        for row in rows[:20]:
            print("  w=" + row[0] + " t=" + row[1] + f" lhs={row[2]} rhs={row[3]}")
        return EXIT_OK

    if args.y is None or args.direction is None:
        raise ConfigError(["trajectory mode needs --y and --direction"])
    ys = [as_fraction(c) for c in parse_point(args.y)]
    direction = _parse_direction(args.direction)
    if len(direction) != len(ys):
        raise ConfigError(["--direction length must match --y"])
    points = flow_trajectory(
        ys, direction, args.tmax, args.steps, args.precision_bits
    )
    rows = [
        ["0", fmt_float(p.t), fmt_float(p.norm), fmt_float(p.slope)]
        for p in points
    ]
    if args.csv:
        _write_csv(Path(args.csv), TRAJECTORY_HEADER, rows)
    for row in rows:
        print(f"  t={row[1]} norm={row[2]} slope={row[3]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment subcommand


_REQUIRED_KEYS = [
    ("hyperplane", "n"),
    ("hyperplane", "s"),
    ("hyperplane", "b"),
    ("search", "height_cap"),
    ("search", "sigma_cap"),
    ("samples", "count"),
    ("samples", "seed"),
    ("output", "dir"),
]


def load_config(path: Path) -> Tuple[Hyperplane, ExperimentConfig, Path]:
    problems: List[str] = []
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError([f"config parse error: {exc}"]) from exc
    for section, key in _REQUIRED_KEYS:
        if not parser.has_option(section, key):
            problems.append(f"missing config key [{section}] {key}")
    if problems:
        raise ConfigError(problems)

    def geti(section, key, default=None):
        try:
            return parser.getint(section, key, fallback=default)
        except ValueError:
            problems.append(f"[{section}] {key} must be an integer")
            return default

    n = geti("hyperplane", "n")
    s = geti("hyperplane", "s")
    height_cap = geti("search", "height_cap")
    sigma_cap = geti("search", "sigma_cap")
    budget = geti("search", "budget", None)
    count = geti("samples", "count")
    bits = geti("samples", "denominator_bits", 256)
    seed = geti("samples", "seed")
    curve_count = geti("samples", "curve_count", 0)
    bridge_points = geti("flow", "bridge_points", 0)
    precision_bits = geti("flow", "precision_bits", 256)
    flow_steps = geti("flow", "steps", 32)
    workers = geti("run", "workers", 1)
    if problems:
        raise ConfigError(problems)

    coeffs: List[ExactReal] = []
    b: Optional[ExactReal] = None
    if n is None or s is None:
        raise ConfigError(problems or ["missing dimensions"])
    if not 1 <= s <= n:
        problems.append(f"need 1 <= s <= n, got s={s}, n={n}")
    for i in range(1, (s or 1)):
        key = f"a{i}"
        if not parser.has_option("hyperplane", key):
            problems.append(f"missing config key [hyperplane] {key} (s={s})")
            continue
        try:
            coeffs.append(parse_coefficient(parser.get("hyperplane", key)))
        except ConfigError as exc:
            problems.extend(exc.problems)
    try:
        b = parse_coefficient(parser.get("hyperplane", "b"))
    except ConfigError as exc:
        problems.extend(exc.problems)
    if height_cap is not None and height_cap < 2:
        problems.append("height_cap must be >= 2")
    if count is not None and count < 1:
        problems.append("samples count must be >= 1")
    if curve_count and n is not None and n < 3:
        problems.append("curve samples require n >= 3")
    plane = None
    if b is not None and not problems:
        try:
            plane = Hyperplane(n, s, tuple(coeffs), b)
        except ValueError as exc:
            problems.append(str(exc))
    if plane is not None:
        guard = plane.guard_height()
        if guard is not None:
            if height_cap is not None and height_cap > guard:
                problems.append(
                    f"height_cap {height_cap} exceeds coefficient guard {guard}"
                )
            if sigma_cap is not None and sigma_cap > guard:
                problems.append(
                    f"sigma_cap {sigma_cap} exceeds coefficient guard {guard}"
                )
    if problems:
        raise ConfigError(problems)
    cfg = ExperimentConfig(
        height_cap=height_cap,
        sigma_cap=sigma_cap,
        samples=count,
        denominator_bits=bits,
        seed=seed,
        budget=budget,
        curve_samples=curve_count,
        flow_bridge_points=bridge_points,
        flow_precision_bits=precision_bits,
        flow_steps=flow_steps,
        workers=workers,
    )
    return plane, cfg, Path(parser.get("output", "dir"))


def report_header(n: int) -> List[str]:
    return (
        ["sample_id", "x_coords", "omega_est", "omega_mult_est"]
        + [f"gamma_{k}" for k in range(1, n + 1)]
        + ["omega_from_gamma", "flow_bridge_est", "theoretical", "gap", "flags"]
    )


def report_rows(report: ExperimentReport) -> List[List[str]]:
    theo = report.theoretical.value
    rows = []
    for p in report.points:
        gap = None
        if (
            p.omega_mult is not None
            and not math.isinf(p.omega_mult)
            and not math.isinf(theo)
        ):
            gap = p.omega_mult - theo
        rows.append(
            [
                str(p.index),
                fmt_fracs(p.params),
                fmt_float(p.omega),
                fmt_float(p.omega_mult),
            ]
            + [fmt_float(g) for g in p.gammas]
            + [
                fmt_float(p.omega_gamma),
                fmt_float(p.flow_bridge),
                fmt_float(theo),
                fmt_float(gap),
                "|".join(p.flags) if p.flags else "",
            ]
        )
    return rows


def summary_table(report: ExperimentReport) -> str:
    h, cfg = report.hyperplane, report.config
    sandwich = sum(1 for p in report.points if any("sandwich-violation" in f for f in p.flags))
    dependence = sum(
        1 for p in report.points if p.records is not None and p.records.exact_dependence
    )
    lines = [
        "| quantity | value |",
        "| --- | --- |",
        f"| n | {h.n} |",
        f"| s | {h.s} |",
        f"| samples | {len(report.points)} |",
        f"| height_cap | {cfg.height_cap} |",
        f"| sigma_cap | {cfg.sigma_cap} |",
        f"| seed | {cfg.seed} |",
        f"| sigma_estimate | {fmt_float(report.theoretical.sigma)} |",
        f"| sigma_route | {report.theoretical.route} |",
        f"| theoretical | {fmt_float(report.theoretical.value)} |",
        f"| median_omega_mult | {fmt_float(report.median_omega_mult())} |",
        f"| median_gap | {fmt_float(report.median_gap())} |",
        f"| iqr_omega_mult | {fmt_float(report.iqr_omega_mult())} |",
        f"| sandwich_violations | {sandwich} |",
        f"| exact_dependence_points | {dependence} |",
    ]
    directions = []
    for p in report.points:
        if p.flow_direction is not None:
            directions.append((p.index, p.flow_direction))
    for idx, direction in directions:
        lines.append(
            f"| direction_{idx} | {';'.join(fmt_float(d) for d in direction)} |"
        )
    return "\n".join(lines) + "\n"


def cmd_experiment(args: argparse.Namespace) -> int:
    plane, cfg, out_dir = load_config(Path(args.config))
    if args.dry_run:
        print("plan:")
        print(f"  hyperplane: n={plane.n} s={plane.s}")
        print(f"  box samples: {cfg.samples} (denominator bits {cfg.denominator_bits})")
        print(f"  curve samples: {cfg.curve_samples}")
        print(f"  height cap: {cfg.height_cap}, sigma cap: {cfg.sigma_cap}")
        print(f"  budget: {resolve_budget(cfg.budget)} candidate evaluations/point")
        print(f"  flow bridge points: {cfg.flow_bridge_points}")
        print(f"  output dir: {out_dir}")
        return EXIT_OK
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise ConfigError(
            [f"output dir {out_dir} is not empty (use --force to overwrite)"]
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_experiment(plane, cfg)
    _write_csv(out_dir / "report.csv", report_header(plane.n), report_rows(report))
    records_dir = out_dir / "records"
    for p in report.points:
        if p.records is not None:
            _write_csv(
                records_dir / f"sample_{p.index:03d}.csv",
                RECORDS_HEADER,
                records_rows(p.records),
            )
    traj_rows = []
    for p in report.points:
        for tp in p.trajectory:
            traj_rows.append(
                [str(p.index), fmt_float(tp.t), fmt_float(tp.norm), fmt_float(tp.slope)]
            )
    if traj_rows:
        _write_csv(out_dir / "trajectory.csv", TRAJECTORY_HEADER, traj_rows)
    (out_dir / "summary.txt").write_text(summary_table(report))
    print(f"report written to {out_dir}")
    print(
        f"theoretical={fmt_float(report.theoretical.value)} "
        f"median_omega_mult={fmt_float(report.median_omega_mult())} "
        f"median_gap={fmt_float(report.median_gap())}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dioph-lab",
        description="Diophantine exponent workbench",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_cfrac = sub.add_parser("cfrac", help="continued-fraction tools")
    p_cfrac.add_argument("--golden", action="store_true")
    p_cfrac.add_argument("--sqrt", type=int, metavar="K")
    p_cfrac.add_argument("--rational", metavar="P/Q")
    p_cfrac.add_argument("--construct-sigma", type=float, metavar="TARGET")
    p_cfrac.add_argument("--depth", type=int, default=20)
    p_cfrac.add_argument("--csv", metavar="PATH")
    p_cfrac.set_defaults(func=cmd_cfrac)

    p_est = sub.add_parser("estimate", help="record-search exponent estimates")
    p_est.add_argument("--point", required=True,
                       help="comma-separated coordinate specs")
    p_est.add_argument("--cap", type=int, required=True)
    p_est.add_argument("--budget", type=int, default=None)
    p_est.add_argument("--degrade", action="store_true",
                       help="shrink per-class reach instead of refusing "
                            "when the cap exceeds the budget")
    p_est.add_argument("--csv", metavar="PATH")
    p_est.set_defaults(func=cmd_estimate)

    p_flow = sub.add_parser("flow", help="flow trajectories / violation search")
    p_flow.add_argument("--y", help="comma-separated coordinate specs")
    p_flow.add_argument("--direction", help="comma-separated simplex weights")
    p_flow.add_argument("--tmax", type=float, default=20.0)
    p_flow.add_argument("--steps", type=int, default=32)
    p_flow.add_argument("--precision-bits", type=int, default=256)
    p_flow.add_argument("--violations", action="store_true")
    p_flow.add_argument("--n", type=int)
    p_flow.add_argument("--a", action="append", metavar="SPEC")
    p_flow.add_argument("--b", metavar="SPEC")
    p_flow.add_argument("--ds", type=float)
    p_flow.add_argument("--w-budget", type=int, default=10**5)
    p_flow.add_argument("--csv", metavar="PATH")
    p_flow.set_defaults(func=cmd_flow)

    p_exp = sub.add_parser("experiment", help="full hyperplane experiment")
    p_exp.add_argument("config", help="INI config file")
    p_exp.add_argument("--force", action="store_true")
    p_exp.add_argument("--dry-run", action="store_true")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceededError, UnsupportedDimensionError) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiophLabError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
