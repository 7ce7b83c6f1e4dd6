"""Build the fixture workspace and pipeline directory for UI tests.

Usage: python3 prepare_pipeline.py <workdir>
Prints the pipeline directory path on stdout.
"""

import sys
from pathlib import Path

from defectmine.cli import main as cli_main
from defectmine.fixtures import build_fixture


def prepare(workdir: Path) -> Path:
    fixture = build_fixture(workdir / "fixture")
    pipeline = workdir / "pipeline"
    rc = cli_main(
        ["ingest-vcs", "--repo", str(fixture.repo), "--out", str(pipeline)]
    )
    assert rc == 0
    rc = cli_main(
        [
            "ingest-issues", "--project", "DEMO",
            "--from", str(fixture.issues_path),
            "--out", str(pipeline / "issues.jsonl"),
        ]
    )
    assert rc == 0
    rc = cli_main(["detect-links", "--out", str(pipeline), "--project", "DEMO"])
    assert rc == 0
    return pipeline


if __name__ == "__main__":
    print(prepare(Path(sys.argv[1])))
