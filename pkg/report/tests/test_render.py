import hashlib
import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

from dioph_report.render import ReportBundle, SchemaError, main, render

STAMP = "# schema=dioph-lab/1"

REPORT_HEADER = (
    "sample_id,x_coords,omega_est,omega_mult_est,gamma_1,gamma_2,"
    "omega_from_gamma,flow_bridge_est,theoretical,gap,flags"
)


def make_synthetic_run(tmp_path: Path) -> Path:
    run = tmp_path / "run"
    (run / "records").mkdir(parents=True)
    (run / "report.csv").write_text(
        "\n".join(
            [
                STAMP,
                REPORT_HEADER,
                "0,1/2;1/3,2.01,2.05,0.02,0.01,2.1,0.03,2,0.05,",
                "1,2/7;3/8,2.2,2.1,0.01,0.0,2.2,,2,0.1,",
                "2,1/9;5/9,inf,inf,0.0,0.0,,,2,inf,exact-dependence",
            ]
        )
        + "\n"
    )
    (run / "records" / "sample_000.csv").write_text(
        "\n".join(
            [
                STAMP,
                "class_k,q_entries,p,residual,sup_h,mult_h",
                "1,2;0,-1,1/12,2,2",
                "1,5;0,-2,1/60,5,5",
                "1,12;0,-5,1/300,12,12",
                "2,3;4,-2,1/800,4,12",
                "2,8;9,-7,1/9000,9,72",
            ]
        )
        + "\n"
    )
    (run / "records" / "sample_001.csv").write_text(
        STAMP + "\nclass_k,q_entries,p,residual,sup_h,mult_h\n"
    )
    (run / "trajectory.csv").write_text(
        "\n".join(
            [
                STAMP,
                "direction_id,t,shortest_norm,slope",
                "0,1,0.9,0.105",
                "0,2,0.7,0.178",
                "0,3,0.6,0.17",
            ]
        )
        + "\n"
    )
    (run / "summary.txt").write_text(
        "| quantity | value |\n| --- | --- |\n| n | 2 |\n| samples | 3 |\n"
    )
    return run


def tree_digest(root: Path) -> dict:
    return {
        p.relative_to(root): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_render_synthetic(tmp_path):
    run = make_synthetic_run(tmp_path)
    before = tree_digest(run)
    result = render(ReportBundle(run, tmp_path / "out"))
    names = {p.name for p in result.images}
    assert names == {
        "convergence_sample_000.png",
        "gap_histogram.png",
        "trajectory_direction_000.png",
    }
    summary = result.summary_md.read_text()
    assert run.joinpath("summary.txt").read_text().rstrip("\n") in summary
    assert "no records in sample_001.csv" in summary
    # inputs untouched
    assert tree_digest(run) == before


def test_render_idempotent(tmp_path):
    run = make_synthetic_run(tmp_path)
    out = tmp_path / "out"
    render(ReportBundle(run, out))
    first = tree_digest(out)
    render(ReportBundle(run, out))
    assert tree_digest(out) == first


def test_schema_refusal(tmp_path, capsys):
    run = make_synthetic_run(tmp_path)
    bad = run / "records" / "sample_000.csv"
    bad.write_text("# schema=unknown/9\nclass_k\n")
    with pytest.raises(SchemaError) as err:
        render(ReportBundle(run, tmp_path / "out"))
    assert bad in err.value.files
    code = main([str(run), "--out", str(tmp_path / "out2")])
    assert code == 1
    assert "sample_000.csv" in capsys.readouterr().err


def test_cli_entry_on_synthetic(tmp_path, capsys):
    run = make_synthetic_run(tmp_path)
    code = main([str(run)])
    assert code == 0
    assert (run / "render" / "summary.md").exists()


FIXTURE_A_CONFIG = """
[hyperplane]
n = 2
s = 1
b = golden:40

[search]
height_cap = 100000
sigma_cap = 10000
budget = 600000000

[samples]
count = 20
denominator_bits = 256
seed = 101

[flow]
bridge_points = 5
steps = 40

[output]
dir = {out_dir}
"""


@pytest.fixture(scope="session")
def fixture_a_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("fixtureA")
    cfg = base / "fixtureA.ini"
    run_dir = base / "run"
    cfg.write_text(textwrap.dedent(FIXTURE_A_CONFIG).format(out_dir=run_dir))
    proc = subprocess.run(
        [sys.executable, "-m", "dioph_lab", "experiment", str(cfg)],
        capture_output=True,
        text=True,
        timeout=1800,
    )
    assert proc.returncode == 0, proc.stderr
    return run_dir


def test_fixture_a_render_criterion(fixture_a_run):
    out = fixture_a_run / "render"
    result = render(ReportBundle(fixture_a_run, out))
    images = [p for p in result.images if p.suffix == ".png"]
    ok_count = len(images) >= 22
    summary = result.summary_md.read_text()
    table = fixture_a_run.joinpath("summary.txt").read_text().rstrip("\n")
    ok_table = table in summary
    first = tree_digest(out)
    render(ReportBundle(fixture_a_run, out))
    ok_idempotent = tree_digest(out) == first
    print(
        f"{'PASS' if ok_count and ok_table and ok_idempotent else 'FAIL'} "
        f"secondary render fixture-A: {len(images)} images (>= 22), "
        f"markdown table identical to summary.txt: {ok_table}, "
        f"re-render byte-idempotent: {ok_idempotent}"
    )
    assert ok_count and ok_table and ok_idempotent
