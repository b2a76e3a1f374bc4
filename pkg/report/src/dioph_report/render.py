"""Render a dioph-lab run directory.

Reads the CSV outputs of `dioph-lab experiment` (never modifies them)
and produces:

* one convergence plot per sample point (running exponent reading
  against log multiplicative height, one line per support class),
* one aggregate histogram of the per-sample gaps to the predicted value,
* one trajectory slope plot per flow direction,
* ``summary.md`` embedding the run's summary table verbatim.

Only CSVs carrying the known schema stamp are accepted.  Rendering is
deterministic: identical inputs give byte-identical images.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KNOWN_SCHEMAS = {"# schema=dioph-lab/1"}

_FIG_KW = dict(figsize=(6.0, 4.0), dpi=110)


class SchemaError(Exception):
    """A CSV carries an unknown or missing schema stamp."""

    def __init__(self, files: Sequence[Path]):
        self.files = list(files)
        super().__init__(
            "unknown schema stamp in: " + ", ".join(str(f) for f in self.files)
        )


@dataclass
class ReportBundle:
    """Paths of one run directory and the output target."""

    run_dir: Path
    out_dir: Path

    @property
    def report_csv(self) -> Path:
        return self.run_dir / "report.csv"

    @property
    def records_dir(self) -> Path:
        return self.run_dir / "records"

    @property
    def trajectory_csv(self) -> Path:
        return self.run_dir / "trajectory.csv"

    @property
    def summary_txt(self) -> Path:
        return self.run_dir / "summary.txt"


@dataclass
class RenderResult:
    images: List[Path] = field(default_factory=list)
    summary_md: Optional[Path] = None
    notes: List[str] = field(default_factory=list)


def read_stamped_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
        if first not in KNOWN_SCHEMAS:
            raise SchemaError([path])
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = [row for row in reader if row]
    return header, rows


def _log_big(n: int) -> float:
    """Natural log of a positive integer of any size."""
    if n.bit_length() <= 900:
        return math.log(n)
    shift = n.bit_length() - 64
    return math.log(n >> shift) + shift * math.log(2)


def _neglog_residual(text: str) -> Optional[float]:
    if "/" not in text:
        return None
    num, den = text.split("/")
    num_i, den_i = int(num), int(den)
    if num_i <= 0:
        return None
    return _log_big(den_i) - _log_big(num_i)


def render_convergence(
    sample_csv: Path, n: int, out_path: Path
) -> Tuple[Optional[Path], Optional[str]]:
    """Per-sample plot: running exponent reading vs log height, one line
    per support class.  Returns (path, note)."""
    _, rows = read_stamped_csv(sample_csv)
    series: Dict[int, List[Tuple[float, float]]] = {}
    for row in rows:
        class_k = int(row[0])
        mult_h = int(row[5])
        neglog = _neglog_residual(row[3])
        if mult_h < 2 or neglog is None:
            continue
        x = math.log10(mult_h)
        ratio = n * neglog / math.log(mult_h)
        series.setdefault(class_k, []).append((x, ratio))
    if not series:
        return None, f"no records in {sample_csv.name}"
    fig, ax = plt.subplots(**_FIG_KW)
    for class_k in sorted(series):
        pts = sorted(series[class_k])
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            marker="o",
            markersize=3,
            linewidth=1.0,
            label=f"class {class_k}",
        )
    ax.set_xlabel("log10 multiplicative height")
    ax.set_ylabel("running exponent reading")
    ax.set_title(sample_csv.stem)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path, None


def render_gap_histogram(
    report_csv: Path, out_path: Path
) -> Tuple[Optional[Path], Optional[str]]:
    header, rows = read_stamped_csv(report_csv)
    try:
        gap_idx = header.index("gap")
    except ValueError:
        return None, "report.csv has no gap column"
    gaps = []
    for row in rows:
        text = row[gap_idx]
        if text and text != "inf":
            gaps.append(float(text))
    if not gaps:
        return None, "no finite gaps to plot"
    fig, ax = plt.subplots(**_FIG_KW)
    ax.hist(gaps, bins=min(20, max(5, len(gaps) // 2)), edgecolor="black")
    ax.axvline(0.0, linestyle="--", linewidth=1.0)
    ax.set_xlabel("estimate - predicted value")
    ax.set_ylabel("samples")
    ax.set_title("gap histogram")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path, None


def render_trajectories(
    trajectory_csv: Path, out_dir: Path
) -> Tuple[List[Path], List[str]]:
    header, rows = read_stamped_csv(trajectory_csv)
    series: Dict[str, List[Tuple[float, float]]] = {}
    for row in rows:
        series.setdefault(row[0], []).append((float(row[1]), float(row[3])))
    images = []
    for direction_id in sorted(series, key=lambda s: int(s)):
        pts = sorted(series[direction_id])
        fig, ax = plt.subplots(**_FIG_KW)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                markersize=3, linewidth=1.0)
        ax.set_xlabel("flow magnitude t")
        ax.set_ylabel("decay slope  -log(norm)/t")
        ax.set_title(f"trajectory, direction {direction_id}")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"trajectory_direction_{int(direction_id):03d}.png"
        fig.savefig(path)
        plt.close(fig)
        images.append(path)
    return images, []


def render(bundle: ReportBundle) -> RenderResult:
    """Render everything; raises SchemaError on unknown stamps."""
    result = RenderResult()
    problems: List[Path] = []
    if not bundle.report_csv.exists():
        raise FileNotFoundError(f"missing {bundle.report_csv}")
    bundle.out_dir.mkdir(parents=True, exist_ok=True)

    # validate stamps up front so a bad run dir fails atomically
    candidates = [bundle.report_csv]
    if bundle.trajectory_csv.exists():
        candidates.append(bundle.trajectory_csv)
    sample_csvs = (
        sorted(bundle.records_dir.glob("sample_*.csv"))
        if bundle.records_dir.is_dir()
        else []
    )
    candidates.extend(sample_csvs)
    for path in candidates:
        try:
            read_stamped_csv(path)
        except SchemaError:
            problems.append(path)
    if problems:
        raise SchemaError(problems)

    header, _ = read_stamped_csv(bundle.report_csv)
    n = sum(1 for name in header if name.startswith("gamma_"))

    for sample_csv in sample_csvs:
        out_path = bundle.out_dir / f"convergence_{sample_csv.stem}.png"
        path, note = render_convergence(sample_csv, max(n, 1), out_path)
        if path:
            result.images.append(path)
        if note:
            result.notes.append(note)

    path, note = render_gap_histogram(
        bundle.report_csv, bundle.out_dir / "gap_histogram.png"
    )
    if path:
        result.images.append(path)
    if note:
        result.notes.append(note)

    if bundle.trajectory_csv.exists():
        images, notes = render_trajectories(bundle.trajectory_csv, bundle.out_dir)
        result.images.extend(images)
        result.notes.extend(notes)

    summary_lines = ["# Run summary", ""]
    if bundle.summary_txt.exists():
        summary_lines.append(bundle.summary_txt.read_text().rstrip("\n"))
    else:
        result.notes.append("summary.txt missing")
    summary_lines += ["", "## Rendered images", ""]
    summary_lines += [f"- {p.name}" for p in result.images]
    if result.notes:
        summary_lines += ["", "## Notes", ""]
        summary_lines += [f"- {note}" for note in result.notes]
    summary_md = bundle.out_dir / "summary.md"
    summary_md.write_text("\n".join(summary_lines) + "\n")
    result.summary_md = summary_md
    return result


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="render a dioph-lab run directory"
    )
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    out_dir = args.out if args.out is not None else args.run_dir / "render"
    bundle = ReportBundle(args.run_dir, out_dir)
    try:
        result = render(bundle)
    except SchemaError as exc:
        for path in exc.files:
            print(f"schema mismatch: {path}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"rendered {len(result.images)} images into {out_dir}")
    for note in result.notes:
        print(f"note: {note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
