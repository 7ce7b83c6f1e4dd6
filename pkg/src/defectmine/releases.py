"""Assignment of bugs to releases and release dataset emission.

Three strategies: a fixed six-month window after the release (182 days,
half-open), the tracker's affected-versions field, and reachability of the
bug's non-suspect inducing changes in the commit graph. File labels map the
fixed (or inducing) files to their names at the release commit through the
rename lineage; files without an identity at the release are reported, never
silently dropped.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Optional

from defectmine.fixlabel import FixLabel, issues_fixed_by
from defectmine.inducing import (
    INDUCING,
    SUBSTANTIVE,
    FilterConfig,
    InducingChange,
    classify_action,
    is_production_path,
)
from defectmine.issues import Issue, VersionRelease
from defectmine.vcs.blame import map_path_to_ancestor
from defectmine.vcs.model import ChangeGraph

log = logging.getLogger("defectmine.releases")

SIX_MONTHS = timedelta(days=182)

STRATEGY_6M = "SixM"
STRATEGY_AV = "AV"
STRATEGY_IND = "IND"


@dataclass(frozen=True)
class Release:
    name: str
    release_commit: str
    released_at: datetime

    def as_version(self) -> VersionRelease:
        return VersionRelease(
            name=self.name, released_at=self.released_at, release_commit=self.release_commit
        )


def read_release_table(path: str | Path, graph: ChangeGraph) -> list[Release]:
    """Whitespace-separated ``name commit`` lines; tag names also resolve."""
    releases = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'name commit', got {line!r}")
        name, ref = parts
        commit_id = graph.release_tags.get(ref, ref)
        commit = graph.commit(commit_id)
        releases.append(Release(name=name, release_commit=commit.id, released_at=commit.committer_date))
    releases.sort(key=lambda r: (r.released_at, r.name))
    return releases


def releases_from_tags(graph: ChangeGraph) -> list[Release]:
    releases = [
        Release(name=name, release_commit=cid, released_at=graph.commit(cid).committer_date)
        for name, cid in graph.release_tags.items()
    ]
    releases.sort(key=lambda r: (r.released_at, r.name))
    return releases


@dataclass
class ReleaseAssignment:
    release: Release
    strategy: str
    bugs: set[str] = field(default_factory=set)
    defective_files: dict[str, set[str]] = field(default_factory=dict)
    unmapped: dict[str, set[str]] = field(default_factory=dict)  # issue -> lost paths
    unresolved_versions: dict[str, list[str]] = field(default_factory=dict)
    all_suspect_bugs: set[str] = field(default_factory=set)

    def add_file(self, path: str, issue: str) -> None:
        self.defective_files.setdefault(path, set()).add(issue)


def _map_fix_files_to_release(
    graph: ChangeGraph,
    assignment: ReleaseAssignment,
    issue_key: str,
    fix_commits: Iterable[str],
    config: FilterConfig,
) -> None:
    release_commit = assignment.release.release_commit
    for fix_commit in sorted(fix_commits):
        commit = graph.commit(fix_commit)
        if commit.is_merge or not commit.parents:
            continue
        parent = commit.parents[0]
        for action in graph.first_parent_actions(fix_commit):
            if action.path_old is None:
                continue  # additions cannot exist at an earlier release
            if classify_action(action, config).verdict != SUBSTANTIVE:
                continue
            mapped = map_path_to_ancestor(graph, parent, action.path_old, release_commit)
            if mapped is None:
                assignment.unmapped.setdefault(issue_key, set()).add(action.path_old)
            else:
                assignment.add_file(mapped, issue_key)


def assign_6m(
    graph: ChangeGraph,
    release: Release,
    fix_labels: Iterable[FixLabel],
    issues: Iterable[Issue],
    config: FilterConfig,
    variant: str = "fixed",
) -> ReleaseAssignment:
    """Bugs whose reference date falls within 182 days after the release.

    ``variant='reported'`` uses the issue report date, ``'fixed'`` the date
    of the last fixing commit.
    """
    if variant not in ("reported", "fixed"):
        raise ValueError(f"unknown six-month variant {variant!r}")
    assignment = ReleaseAssignment(release=release, strategy=STRATEGY_6M)
    issue_map = {i.key: i for i in issues}
    fixes = issues_fixed_by(fix_labels)
    window_end = release.released_at + SIX_MONTHS
    for issue_key, fix_commits in sorted(fixes.items()):
        issue = issue_map.get(issue_key)
        if issue is None:
            continue
        if variant == "reported":
            reference = issue.reported_at
        else:
            reference = max(graph.commit(c).committer_date for c in fix_commits)
        if release.released_at < reference <= window_end:
            assignment.bugs.add(issue_key)
            _map_fix_files_to_release(graph, assignment, issue_key, fix_commits, config)
    return assignment


def assign_av(
    graph: ChangeGraph,
    release: Release,
    fix_labels: Iterable[FixLabel],
    issues: Iterable[Issue],
    known_releases: Iterable[Release],
    config: FilterConfig,
) -> ReleaseAssignment:
    """Bugs whose affected-versions field names this release."""
    assignment = ReleaseAssignment(release=release, strategy=STRATEGY_AV)
    known_names = {r.name for r in known_releases}
    issue_map = {i.key: i for i in issues}
    fixes = issues_fixed_by(fix_labels)
    for issue_key, fix_commits in sorted(fixes.items()):
        issue = issue_map.get(issue_key)
        if issue is None:
            continue
        unknown = [v for v in issue.affected_versions if v not in known_names]
        if unknown:
            assignment.unresolved_versions[issue_key] = unknown
        if release.name in issue.affected_versions:
            assignment.bugs.add(issue_key)
            _map_fix_files_to_release(graph, assignment, issue_key, fix_commits, config)
    return assignment


def assign_ind(
    graph: ChangeGraph,
    release: Release,
    inducing_changes: Iterable[InducingChange],
    fix_labels: Iterable[FixLabel],
) -> ReleaseAssignment:
    """A bug affects a release when every non-suspect inducing change is an
    ancestor of the release (at least one exists) and at least one fixing
    commit lies outside the release's history."""
    assignment = ReleaseAssignment(release=release, strategy=STRATEGY_IND)
    release_commit = release.release_commit
    fixes = issues_fixed_by(fix_labels)
    by_issue: dict[str, list[InducingChange]] = {}
    for change in inducing_changes:
        by_issue.setdefault(change.issue, []).append(change)
    for issue_key, changes in sorted(by_issue.items()):
        non_suspect = [c for c in changes if c.classification == INDUCING]
        if not non_suspect:
            assignment.all_suspect_bugs.add(issue_key)
            continue
        if not all(
            graph.is_ancestor_or_self(c.inducing_commit, release_commit) for c in non_suspect
        ):
            continue
        fix_commits = fixes.get(issue_key, set())
        if not any(
            not graph.is_ancestor_or_self(f, release_commit) for f in fix_commits
        ):
            continue
        assignment.bugs.add(issue_key)
        for change in non_suspect:
            fixing_commit = graph.commit(change.fixing_commit)
            if not fixing_commit.parents:
                continue
            mapped = map_path_to_ancestor(
                graph, fixing_commit.parents[0], change.fixing_path, release_commit
            )
            if mapped is None:
                assignment.unmapped.setdefault(issue_key, set()).add(change.fixing_path)
            else:
                assignment.add_file(mapped, issue_key)
    return assignment


# -- dataset emission ---------------------------------------------------------


@dataclass
class IssueFileMatrix:
    files: list[str]
    columns: list[str]  # "<issuekey>__<severity>__<lastfixdate>"
    cells: list[list[int]]


def production_files(graph: ChangeGraph, release: Release, config: FilterConfig) -> list[str]:
    return sorted(
        p for p in graph.tree_files(release.release_commit) if is_production_path(p, config)
    )


def build_matrix(
    graph: ChangeGraph,
    release: Release,
    assignment: ReleaseAssignment,
    issues: Iterable[Issue],
    fix_labels: Iterable[FixLabel],
    config: FilterConfig,
) -> IssueFileMatrix:
    files = production_files(graph, release, config)
    issue_map = {i.key: i for i in issues}
    fixes = issues_fixed_by(fix_labels)
    columns = []
    keys = sorted(assignment.bugs)
    for key in keys:
        issue = issue_map.get(key)
        severity = (issue.severity if issue and issue.severity else "unknown")
        fix_commits = fixes.get(key, set())
        if fix_commits:
            last_fix = max(graph.commit(c).committer_date for c in fix_commits)
            fixdate = last_fix.strftime("%Y%m%d")
        else:
            fixdate = "unknown"
        columns.append(f"{key}__{severity}__{fixdate}")
    file_issues = assignment.defective_files
    cells = [
        [1 if path in file_issues and key in file_issues[path] else 0 for key in keys]
        for path in files
    ]
    return IssueFileMatrix(files=files, columns=columns, cells=cells)


def emit_dataset(
    graph: ChangeGraph,
    release: Release,
    assignment: ReleaseAssignment,
    issues: Iterable[Issue],
    fix_labels: Iterable[FixLabel],
    config: FilterConfig,
    out_dir: str | Path,
    features: Optional[dict[str, dict[str, float]]] = None,
) -> tuple[Path, Path]:
    """Write ``<release>-files.csv`` (one row per production file: label
    count plus features) and ``<release>-matrix.csv`` (the issue-file
    matrix). Deterministic output for identical inputs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix = build_matrix(graph, release, assignment, issues, fix_labels, config)
    features = features or {}
    feature_names = sorted({name for per_file in features.values() for name in per_file})

    files_path = out / f"{release.name}-files.csv"
    with files_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "bugs"] + feature_names)
        for idx, path in enumerate(matrix.files):
            row = [path, sum(matrix.cells[idx])]
            per_file = features.get(path, {})
            row += [per_file.get(name, "") for name in feature_names]
            writer.writerow(row)

    matrix_path = out / f"{release.name}-matrix.csv"
    with matrix_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file"] + matrix.columns)
        for idx, path in enumerate(matrix.files):
            writer.writerow([path] + matrix.cells[idx])

    if assignment.unmapped or assignment.unresolved_versions or assignment.all_suspect_bugs:
        audit_path = out / f"{release.name}-audit.txt"
        with audit_path.open("w", encoding="utf-8") as fh:
            for issue_key in sorted(assignment.unmapped):
                for path in sorted(assignment.unmapped[issue_key]):
                    fh.write(f"unmapped\t{issue_key}\t{path}\n")
            for issue_key in sorted(assignment.unresolved_versions):
                for name in assignment.unresolved_versions[issue_key]:
                    fh.write(f"unresolved-version\t{issue_key}\t{name}\n")
            for issue_key in sorted(assignment.all_suspect_bugs):
                fh.write(f"all-suspect\t{issue_key}\t-\n")
    return files_path, matrix_path
