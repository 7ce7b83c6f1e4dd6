import os
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from defectmine.fixtures import FixtureManifest, build_fixture
from defectmine.issues import read_export
from defectmine.links import auto_validate, detect_jl_links, detect_szz_links
from defectmine.validation import ValidationStore
from defectmine.vcs import ingest_repository


@pytest.fixture(scope="session")
def fixture(tmp_path_factory) -> FixtureManifest:
    return build_fixture(tmp_path_factory.mktemp("fixture"))


@pytest.fixture(scope="session")
def graph(fixture):
    return ingest_repository(fixture.repo)


@pytest.fixture(scope="session")
def issues(fixture):
    return read_export(fixture.issues_path, fixture.project_key)


@pytest.fixture(scope="session")
def store(fixture):
    return ValidationStore.load(fixture.decisions_path)


@pytest.fixture(scope="session")
def candidates(fixture, graph, issues, store):
    """All candidates with auto-validation and expert decisions applied."""
    cands = detect_szz_links(graph, issues) + detect_jl_links(graph, issues, {})
    return store.apply_to_candidates(auto_validate(cands))


class GitSandbox:
    """Drives the real git porcelain for small hand-built repositories."""

    def __init__(self, path: Path):
        self.path = path
        path.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            ["git", "init", "-q", "-b", "main", str(path)], check=True, capture_output=True
        )
        self.git("config", "user.email", "dev@example.com")
        self.git("config", "user.name", "dev")
        self._tick = 0

    def git(self, *args, date: str | None = None):
        env = dict(os.environ)
        if date:
            env["GIT_AUTHOR_DATE"] = date
            env["GIT_COMMITTER_DATE"] = date
        return subprocess.run(
            ["git", "-C", str(self.path), *args],
            check=True,
            capture_output=True,
            text=True,
            env=env,
        )

    def write(self, rel: str, content: str):
        target = self.path / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
        self.git("add", rel)

    def remove(self, rel: str):
        self.git("rm", "-q", rel)

    def commit(self, message: str, date: str | None = None) -> str:
        self._tick += 1
        date = date or f"2021-01-{1 + self._tick % 27:02d}T10:00:00+00:00"
        self.git("commit", "-q", "--allow-empty", "-m", message, date=date)
        return self.git("rev-parse", "HEAD").stdout.strip()


@pytest.fixture()
def git_sandbox(tmp_path):
    return GitSandbox(tmp_path / "repo")
