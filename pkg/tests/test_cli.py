import csv
import json
import subprocess
import sys
from pathlib import Path

from defectmine.cli import main


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def fixture_pipeline_args(fixture, out):
    return [
        "all",
        "--repo", fixture.repo,
        "--issues", fixture.issues_path,
        "--releases", fixture.releases_path,
        "--decisions", fixture.decisions_path,
        "--misspellings", fixture.misspellings_path,
        "--refactorings", fixture.refactorings_path,
        "--project", fixture.project_key,
        "--out", out,
    ]


def test_all_pipeline_runs_green(fixture, tmp_path, capsys):
    out = tmp_path / "pipe"
    assert run_cli(*fixture_pipeline_args(fixture, out)) == 0
    for name in (
        "graph.jsonl", "issues.jsonl", "candidates.jsonl",
        "labels-szz.tsv", "labels-jl.tsv", "labels-jlm.tsv", "labels-jlmiv.tsv",
        "inducing-jlmiv_r.tsv", "assignments.tsv",
    ):
        assert (out / name).exists(), name
    assert (out / "datasets" / "DEMO" / "ind" / "1.0.0-files.csv").exists()
    assert (out / "reports" / "results.json").exists()


def test_all_outputs_byte_identical(fixture, tmp_path):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert run_cli(*fixture_pipeline_args(fixture, out1)) == 0
    assert run_cli(*fixture_pipeline_args(fixture, out2)) == 0
    files1 = sorted(
        p.relative_to(out1) for p in out1.rglob("*") if p.is_file()
        and p.name != "run-meta.json"
    )
    files2 = sorted(
        p.relative_to(out2) for p in out2.rglob("*") if p.is_file()
        and p.name != "run-meta.json"
    )
    assert files1 == files2
    for rel in files1:
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel


def test_labels_blocks_on_pending_queues(fixture, tmp_path, capsys):
    out = tmp_path / "pending"
    assert run_cli("ingest-vcs", "--repo", fixture.repo, "--out", out) == 0
    assert run_cli(
        "ingest-issues", "--project", "DEMO", "--from", fixture.issues_path,
        "--out", out / "issues.jsonl",
    ) == 0
    assert run_cli("detect-links", "--out", out, "--project", "DEMO") == 0
    # no decision log: JLM/JLMIV must pause with a queue summary
    rc = run_cli("labels", "--strategy", "jlmiv", "--out", out, "--project", "DEMO")
    assert rc == 3
    printed = capsys.readouterr().out
    assert "pending link commits: 2" in printed
    # all ten tracker-BUG issues with live links await their two labels
    assert "pending issue types:  10" in printed
    # szz alone does not need validation
    assert run_cli("labels", "--strategy", "szz", "--out", out, "--project", "DEMO") == 0


def test_unknown_strategy_is_usage_error(fixture, tmp_path, capsys):
    out = tmp_path / "x"
    assert run_cli("ingest-vcs", "--repo", fixture.repo, "--out", out) == 0
    assert run_cli(
        "ingest-issues", "--project", "DEMO", "--from", fixture.issues_path,
        "--out", out / "issues.jsonl",
    ) == 0
    assert run_cli("detect-links", "--out", out) == 0
    rc = run_cli("labels", "--strategy", "bogus", "--out", out)
    assert rc == 2
    assert "unknown strategy" in capsys.readouterr().err


def test_missing_prerequisite_names_producer(tmp_path, capsys):
    rc = run_cli("labels", "--strategy", "szz", "--out", tmp_path / "fresh")
    assert rc == 2
    err = capsys.readouterr().err
    assert "missing; run `ingest-" in err
    rc = run_cli("detect-links", "--out", tmp_path / "fresh2")
    assert rc == 2
    assert "run `ingest-vcs` first" in capsys.readouterr().err


def test_config_file_overrides_flags(fixture, tmp_path):
    out = tmp_path / "cfg"
    config = tmp_path / "conf.json"
    config.write_text(json.dumps({"repo": str(fixture.repo)}), encoding="utf-8")
    # the flag points at a bogus repo; the config file wins
    rc = run_cli("--config", config, "ingest-vcs", "--repo", tmp_path / "nope", "--out", out)
    assert rc == 0
    assert (out / "graph.jsonl").exists()


def test_console_entry_point(fixture, tmp_path):
    out = tmp_path / "module-run"
    proc = subprocess.run(
        [sys.executable, "-m", "defectmine", "ingest-vcs",
         "--repo", str(fixture.repo), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "ingested 30 commits" in proc.stdout


def _write_synth_dataset(root: Path, project: str, offset: float):
    for variant in ("va", "vb"):
        vdir = root / project / variant
        vdir.mkdir(parents=True)
        files = [f"src/F{i}.java" for i in range(8)]
        with (vdir / "r1-files.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["file", "bugs", "churn_signal", "sm_complexity", "lloc"])
            for i, f in enumerate(files):
                defective = i < 4
                signal = 9.0 + offset if defective else 1.0
                w.writerow([f, 1 if defective else 0, signal, signal * 2, 100])
        with (vdir / "r1-matrix.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["file"] + [f"B-{i}__unknown__20210101" for i in range(4)])
            for i, f in enumerate(files):
                w.writerow([f] + [1 if i < 4 and c == i else 0 for c in range(4)])


def test_experiment_cli_on_synthetic_datasets(tmp_path):
    data = tmp_path / "data"
    _write_synth_dataset(data, "p1", 1.0)
    _write_synth_dataset(data, "p2", 2.0)
    out = tmp_path / "exp"
    rc = run_cli(
        "experiment", "--data", data, "--labels", "va,vb", "--features", "all,churn,sm",
        "--min-files", 1, "--min-defective", 1, "--out", out,
    )
    assert rc == 0
    lines = (out / "outcomes.tsv").read_text().splitlines()
    assert lines[0].startswith("model\trelease")
    assert len(lines) == 1 + 2 * 2 * 3  # releases x variants x feature sets
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["never_saves_share"]) == {
        "va-ALL", "va-CHURN", "va-SM", "vb-ALL", "vb-CHURN", "vb-SM",
    }
    assert (out / "reports" / "results.json").exists()


def test_experiment_filter_error(tmp_path, capsys):
    data = tmp_path / "data"
    _write_synth_dataset(data, "p1", 1.0)
    _write_synth_dataset(data, "p2", 2.0)
    rc = run_cli(
        "experiment", "--data", data, "--labels", "va", "--out", tmp_path / "exp",
    )
    assert rc == 2
    assert "filter" in capsys.readouterr().err
