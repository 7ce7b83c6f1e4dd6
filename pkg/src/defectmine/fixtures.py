"""Scripted fixture repositories with planted, hand-derivable ground truth.

``build_fixture`` constructs a two-branch, 30-commit git repository (via
``git fast-import``), an issue export, a seeded decision log, a release
table, and a refactoring report. Every planted label set (fixing commits
per strategy, inducing changes, release assignments) is derived during
construction, never by running the pipeline, so tests can assert exact set
equality. The generator also tracks which commit wrote every line of every
file version, giving an independent forward-constructed oracle for blame.

``build_random_repo`` produces small randomized repositories plus issue
exports for property tests.
"""

from __future__ import annotations

import difflib
import random
import subprocess
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from defectmine.issues import Issue, issue_from_record, write_export


class FixtureError(Exception):
    pass


# -- fast-import plumbing -----------------------------------------------------


class RepoBuilder:
    """Accumulates a fast-import stream while tracking line provenance.

    Provenance lives per branch as {path: [(line, writer_mark), ...]}. Edit
    attribution matches diff semantics: unchanged lines keep their writer,
    replaced or inserted lines get the committing mark. The fixtures only
    replace unique lines in place or append, so the difflib alignment used
    here is unambiguous and equals git's.
    """

    def __init__(self, author: str = "dev <dev@example.com>"):
        self.default_author = author
        self.chunks: list[bytes] = []
        self.next_mark = 1
        self.state: dict[str, dict[str, list[tuple[str, int]]]] = {}
        self.mark_of: dict[str, int] = {}
        self.sha_of: dict[str, str] = {}
        self.dates: dict[str, datetime] = {}

    def _blob(self, text: str) -> int:
        mark = self.next_mark
        self.next_mark += 1
        data = text.encode("utf-8")
        self.chunks.append(b"blob\nmark :%d\ndata %d\n%s\n" % (mark, len(data), data))
        return mark

    def content(self, branch: str, path: str) -> str:
        annotated = self.state[branch][path]
        return "\n".join(t for t, _w in annotated) + ("\n" if annotated else "")

    def commit(
        self,
        label: str,
        branch: str,
        message: str,
        when: datetime,
        changes: Optional[dict[str, Optional[str]]] = None,
        parent_labels: Optional[list[str]] = None,
        author: Optional[str] = None,
        base_branch: Optional[str] = None,
        merge_files_from: Optional[str] = None,
        renames: Optional[dict[str, str]] = None,
    ) -> None:
        """Record one commit.

        ``changes`` maps path -> new full content (None deletes the path).
        ``renames`` maps new path -> old path and preserves line writers when
        the content stays identical. ``base_branch`` seeds a new branch;
        ``merge_files_from`` copies a second parent's files that the first
        parent lacks (the fixture never edits one file on both sides).
        """
        mark = self.next_mark
        self.next_mark += 1
        author = author or self.default_author
        ts = int(when.timestamp())
        head = [f"commit refs/heads/{branch}".encode(), b"mark :%d" % mark]
        head.append(f"author {author} {ts} +0000".encode())
        head.append(f"committer {author} {ts} +0000".encode())
        msg = message.encode("utf-8")
        head.append(b"data %d" % len(msg))
        head.append(msg)
        for idx, plabel in enumerate(parent_labels or []):
            keyword = b"from" if idx == 0 else b"merge"
            head.append(b"%s :%d" % (keyword, self.mark_of[plabel]))

        if base_branch is not None and branch not in self.state:
            self.state[branch] = {p: list(ls) for p, ls in self.state[base_branch].items()}
        branch_state = self.state.setdefault(branch, {})
        ops: list[bytes] = []

        if merge_files_from is not None:
            for path, annotated in sorted(self.state[merge_files_from].items()):
                if path not in branch_state:
                    branch_state[path] = list(annotated)
                    blob = self._blob(self._render(annotated))
                    ops.append(f"M 100644 :{blob} {path}".encode())

        changes = dict(changes or {})
        for new_path, old_path in (renames or {}).items():
            annotated = branch_state.pop(old_path)
            branch_state[new_path] = annotated
            ops.append(f"D {old_path}".encode())
            content = changes.pop(new_path, self._render(annotated))
            branch_state[new_path] = _annotate(annotated, _split(content), mark)
            blob = self._blob(content)
            ops.append(f"M 100644 :{blob} {new_path}".encode())

        for path, content in sorted(changes.items()):
            if content is None:
                ops.append(f"D {path}".encode())
                branch_state.pop(path, None)
                continue
            old = branch_state.get(path)
            branch_state[path] = _annotate(old, _split(content), mark)
            blob = self._blob(content)
            ops.append(f"M 100644 :{blob} {path}".encode())

        self.chunks.append(b"\n".join(head + ops) + b"\n")
        self.mark_of[label] = mark
        self.dates[label] = when

    @staticmethod
    def _render(annotated: list[tuple[str, int]]) -> str:
        return "\n".join(t for t, _w in annotated) + ("\n" if annotated else "")

    def tag(self, name: str, label: str) -> None:
        self.chunks.append(
            b"reset refs/tags/%s\nfrom :%d\n" % (name.encode(), self.mark_of[label])
        )

    def write(self, repo_dir: Path) -> dict[str, str]:
        """Run fast-import into a bare repository; fills label -> sha."""
        repo_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            ["git", "init", "-q", "--bare", str(repo_dir)], check=True, capture_output=True
        )
        marks_path = repo_dir / "fixture-marks.txt"
        stream = b"".join(self.chunks)
        proc = subprocess.run(
            ["git", "-C", str(repo_dir), "fast-import", "--quiet",
             f"--export-marks={marks_path}"],
            input=stream,
            capture_output=True,
        )
        if proc.returncode != 0:
            raise FixtureError(f"fast-import failed: {proc.stderr.decode()[:800]}")
        mark_to_sha: dict[int, str] = {}
        for line in marks_path.read_text().splitlines():
            mark, sha = line.split()
            mark_to_sha[int(mark[1:])] = sha
        self.sha_of = {
            label: mark_to_sha[mark]
            for label, mark in self.mark_of.items()
            if mark in mark_to_sha
        }
        return self.sha_of

    def provenance(self, branch: str) -> dict[str, list[int]]:
        return {
            path: [writer for _t, writer in annotated]
            for path, annotated in self.state[branch].items()
        }


def _split(content: str) -> list[str]:
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _annotate(
    old: Optional[list[tuple[str, int]]], new_lines: list[str], writer: int
) -> list[tuple[str, int]]:
    if old is None:
        return [(l, writer) for l in new_lines]
    old_texts = [t for t, _w in old]
    sm = difflib.SequenceMatcher(a=old_texts, b=new_lines, autojunk=False)
    result: list[tuple[str, int]] = [("", -1)] * len(new_lines)
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal":
            for offset in range(j2 - j1):
                result[j1 + offset] = old[i1 + offset]
        else:
            for j in range(j1, j2):
                result[j] = (new_lines[j], writer)
    return result


# -- the planted fixture --------------------------------------------------------


@dataclass
class FixtureManifest:
    root: Path
    repo: Path
    issues_path: Path
    decisions_path: Path
    releases_path: Path
    refactorings_path: Path
    misspellings_path: Path
    project_key: str
    sha: dict[str, str]
    commit_count: int
    issues: list[Issue]
    # strategy -> {commit sha -> frozenset of issue keys}
    expected_fixing: dict[str, dict[str, frozenset[str]]] = field(default_factory=dict)
    # strategy -> set of (fix sha, pre-image path, inducing sha, issue, classification)
    expected_inducing: dict[str, set[tuple[str, str, str, str, str]]] = field(default_factory=dict)
    # strategy -> release -> (bugs, {release-time file -> issue keys})
    expected_release: dict[str, dict[str, tuple[frozenset[str], dict[str, frozenset[str]]]]] = (
        field(default_factory=dict)
    )
    av_unresolved: dict[str, list[str]] = field(default_factory=dict)
    # snapshot label (R1/R2/HEAD) -> {path -> per-line writer sha}
    provenance: dict[str, dict[str, list[str]]] = field(default_factory=dict)


def _dt(text: str) -> datetime:
    return datetime.fromisoformat(text).replace(tzinfo=timezone.utc)


def _java(stem: str, n_fields: int) -> str:
    first = stem[0].upper() + stem[1:]
    lines = [f"package app; // {stem}", f"public class {first} {{"]
    lines += [f"    int {stem}Field{chr(ord('a') + i)} = {i};" for i in range(n_fields)]
    return "\n".join(lines + ["}"]) + "\n"


def _replace(content: str, lineno: int, new_text: str) -> str:
    lines = content.split("\n")
    lines[lineno - 1] = new_text
    return "\n".join(lines)


APP = "src/main/java/app"
TESTDIR = "src/test/java/app"

ALPHA = f"{APP}/Alpha.java"
ALPHA_CALC = f"{APP}/AlphaCalc.java"
BETA = f"{APP}/Beta.java"
GAMMA = f"{APP}/Gamma.java"
REPORT = f"{APP}/Report.java"
ENGINE = f"{APP}/Engine.java"
LAYOUT = f"{APP}/Layout.java"
NOTES = f"{APP}/Notes.java"
SHAPES = f"{APP}/Shapes.java"
REPORT_TEST = f"{TESTDIR}/ReportTest.java"
HELPER = f"{APP}/Helper.java"
EXTRA = f"{APP}/Extra.java"
README = "docs/readme.md"


def build_fixture(root: str | Path) -> FixtureManifest:
    """Build the planted fixture workspace; see the module docstring."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    repo = root / "repo.git"
    b = RepoBuilder()
    c = b.content  # shorthand for current branch content

    b.commit("C01", "main", "initial project skeleton", _dt("2020-01-01T10:00:00"),
             {README: "# demo project\nintro line one\nintro line two\n"}, [])
    b.commit("C02", "main", "add alpha calculator", _dt("2020-01-03T10:00:00"),
             {ALPHA: _java("alpha", 17)}, ["C01"])
    b.commit("C03", "main", "add beta parser", _dt("2020-01-05T10:00:00"),
             {BETA: _java("beta", 17)}, ["C02"])
    b.commit("C04", "main", "add gamma queue", _dt("2020-01-07T10:00:00"),
             {GAMMA: _java("gamma", 21)}, ["C03"])
    b.commit("C05", "main", "add report writer", _dt("2020-01-09T10:00:00"),
             {REPORT: _java("report", 21)}, ["C04"])
    b.commit("C06", "main", "add engine shell", _dt("2020-01-11T10:00:00"),
             {ENGINE: _java("engine", 17)}, ["C05"])
    b.commit("C07", "main", "add layout helpers", _dt("2020-01-13T10:00:00"),
             {LAYOUT: _java("layout", 13)}, ["C06"])
    b.commit("C08", "main", "add notes formatter", _dt("2020-01-15T10:00:00"),
             {NOTES: _replace(_java("notes", 13), 5,
                              "    int notesFieldc = 2; // explains the format")},
             ["C07"])
    b.commit("C09", "main", "add shapes util", _dt("2020-01-17T10:00:00"),
             {SHAPES: _java("shapes", 15)}, ["C08"])
    b.commit("C10", "main", "add report test", _dt("2020-01-19T10:00:00"),
             {REPORT_TEST: _java("reportTest", 9)}, ["C09"])
    b.commit("C11", "main", "expand readme", _dt("2020-01-21T10:00:00"),
             {README: c("main", README) + "usage section line\n"}, ["C10"])

    # feature branch, merged before the first release
    b.commit("S1", "feature", "start extra feature", _dt("2020-01-23T10:00:00"),
             {EXTRA: _java("extra", 11)}, ["C11"], base_branch="main")
    b.commit("S2", "feature", "extend extra feature", _dt("2020-01-25T10:00:00"),
             {EXTRA: _replace(c("feature", EXTRA), 4,
                              "    int extraFieldb = 1; // tuned")},
             ["S1"])

    b.commit("C12", "main", "adjust readme wording", _dt("2020-01-27T10:00:00"),
             {README: c("main", README).replace("intro line two", "intro line two refined")},
             ["C11"])
    b.commit("C13", "main", "merge extra feature", _dt("2020-02-01T10:00:00"),
             {}, ["C12", "S2"], merge_files_from="feature")

    b.commit("C14", "main", "prepare first release", _dt("2020-03-01T10:00:00"),
             {README: c("main", README) + "release notes first\nversion: one.zero\n"},
             ["C13"])
    prov_r1 = b.provenance("main")

    # introduces the engine defect fixed much later (bug 105)
    b.commit("C15", "main", "rework engine dispatch", _dt("2020-04-01T10:00:00"),
             {ENGINE: _replace(_replace(c("main", ENGINE), 8,
                               "    int engineFieldf = 50; // stall window"), 9,
                               "    int engineFieldg = 51; // stall retry")},
             ["C14"])
    # pure rename: content identical, writers preserved
    b.commit("C16", "main", "rename alpha to alpha calc", _dt("2020-04-15T10:00:00"),
             {}, ["C15"], renames={ALPHA_CALC: ALPHA})

    # F1 fixes bug 101 in the renamed file and partially fixes 103 in gamma
    b.commit("F1", "main", "DEMO-101 fix null deref in alpha calc",
             _dt("2020-05-01T10:00:00"),
             {ALPHA_CALC: _replace(_replace(c("main", ALPHA_CALC), 10,
                                   "    int alphaFieldh = 70; // guarded"), 11,
                                   "    int alphaFieldi = 71; // guarded too"),
              GAMMA: _replace(_replace(c("main", GAMMA), 20,
                              "    int gammaFieldr = 170; // drained early"), 21,
                              "    int gammaFields = 171; // drained late")},
             ["C16"])
    # F2 fixes bug 102; the layout change is an indentation-only reformat
    b.commit("F2", "main", "DEMO-102 fix beta parser overflow",
             _dt("2020-05-10T10:00:00"),
             {BETA: _replace(_replace(c("main", BETA), 10,
                             "    long betaFieldh = 7L; // widened"), 11,
                             "    long betaFieldi = 8L; // widened too"),
              LAYOUT: _replace(_replace(c("main", LAYOUT), 5,
                               "        int layoutFieldc = 2;"), 6,
                               "        int layoutFieldd = 3;")},
             ["F1"])
    # F3 fixes bug 103: lines 10-11 date from C04, lines 20-21 from F1
    # (the partial fix); the notes change only rewrites a comment
    b.commit("F3", "main", "DEMO-103 fix gamma queue starvation",
             _dt("2020-06-01T10:00:00"),
             {GAMMA: _replace(_replace(_replace(_replace(c("main", GAMMA),
                              10, "    int gammaFieldh = 700; // fair wakeup"),
                              11, "    int gammaFieldi = 701; // fair order"),
                              20, "    int gammaFieldr = 900; // rebalanced"),
                              21, "    int gammaFields = 901; // rebalanced too"),
              NOTES: _replace(c("main", NOTES), 5,
                              "    int notesFieldc = 2; /* format description */")},
             ["F2"])
    b.commit("MM", "main", "rework queue internals, related to DEMO-106",
             _dt("2020-06-05T10:00:00"),
             {README: _replace(c("main", README), 1, "# demo project toolkit")},
             ["F3"])
    b.commit("VB", "main", "bump version 1.2", _dt("2020-06-10T10:00:00"),
             {README: c("main", README).replace("version: one.zero", "version: one.two")},
             ["MM"])
    # the hard suspect: touches report lines after bug 104 was reported,
    # fixes nothing, induces nothing before any boundary
    b.commit("H", "main", "improve report logging", _dt("2020-07-01T10:00:00"),
             {REPORT: _replace(_replace(c("main", REPORT), 20,
                               "    int reportFieldr = 90; // tee output"), 21,
                               "    int reportFields = 91; // tee errors")},
             ["VB"])
    b.commit("F6", "main", "DEMO-107 speed up matrix build", _dt("2020-07-10T10:00:00"),
             {EXTRA: _replace(c("main", EXTRA), 6,
                              "    int extraFieldd = 30; // cached")},
             ["H"])
    b.commit("F7", "main", "DEMO-108 clarify usage examples", _dt("2020-07-15T10:00:00"),
             {README: _replace(c("main", README), 4, "usage section line, clarified")},
             ["F6"])

    b.commit("C26", "main", "prepare second release", _dt("2020-09-01T10:00:00"),
             {README: c("main", README) + "release notes second\n"}, ["F7"])
    prov_r2 = b.provenance("main")

    # F4 fixes bug 104: lines 10-11 date from C05, lines 20-21 from H (the
    # hard suspect); the test change is non-production
    b.commit("F4", "main", "DEMO-104 fix report rounding", _dt("2020-10-01T10:00:00"),
             {REPORT: _replace(_replace(_replace(_replace(c("main", REPORT),
                               10, "    int reportFieldh = 70; // half-even"),
                               11, "    int reportFieldi = 71; // half-even too"),
                               20, "    int reportFieldr = 95; // tee flushed"),
                               21, "    int reportFields = 96; // tee closed"),
              REPORT_TEST: _replace(c("main", REPORT_TEST), 5,
                                    "    int reportTestFieldc = 20; // asserts rounding")},
             ["C26"])
    # F5 fixes bug 105: engine lines from C15; the helper file is a pure
    # addition; the shapes change is fully covered by the refactoring report
    b.commit("F5", "main", "DEMO-105 fix engine stall", _dt("2020-10-10T10:00:00"),
             {ENGINE: _replace(_replace(c("main", ENGINE), 8,
                               "    int engineFieldf = 60; // bounded stall"), 9,
                               "    int engineFieldg = 61; // bounded retry"),
              HELPER: _java("helper", 7),
              SHAPES: _replace(_replace(c("main", SHAPES), 5,
                               "    int shapesFieldc = 200; // extracted"), 6,
                               "    int shapesFieldd = 201; // extracted too")},
             ["F4"])
    b.commit("C29", "main", "update readme for next cycle", _dt("2020-10-20T10:00:00"),
             {README: c("main", README) + "next cycle planning\n"}, ["F5"])
    prov_head = b.provenance("main")

    b.tag("1.0.0", "C14")
    b.tag("2.0.0", "C26")
    sha = b.write(repo)
    sha["HEAD"] = sha["C29"]
    sha["R1"] = sha["C14"]
    sha["R2"] = sha["C26"]

    mark_to_sha = {b.mark_of[label]: s for label, s in sha.items() if label in b.mark_of}

    def prov_to_sha(p: dict[str, list[int]]) -> dict[str, list[str]]:
        return {path: [mark_to_sha[w] for w in writers] for path, writers in p.items()}

    issues = _fixture_issues()
    issues_path = root / "issues.jsonl"
    write_export(issues, issues_path)

    decisions_path = root / "decisions.jsonl"
    _write_fixture_decisions(decisions_path, sha)

    releases_path = root / "releases.txt"
    releases_path.write_text(
        f"1.0.0 {sha['C14']}\n2.0.0 {sha['C26']}\n", encoding="utf-8"
    )

    refactorings_path = root / "refactorings.tsv"
    refactorings_path.write_text(
        f"{sha['F5']}\t{SHAPES}\t5\t6\tExtractMethod\n", encoding="utf-8"
    )

    misspellings_path = root / "misspellings.txt"
    misspellings_path.write_text("# no known misspellings for DEMO\n", encoding="utf-8")

    manifest = FixtureManifest(
        root=root,
        repo=repo,
        issues_path=issues_path,
        decisions_path=decisions_path,
        releases_path=releases_path,
        refactorings_path=refactorings_path,
        misspellings_path=misspellings_path,
        project_key="DEMO",
        sha=sha,
        commit_count=30,
        issues=issues,
        provenance={
            "R1": prov_to_sha(prov_r1),
            "R2": prov_to_sha(prov_r2),
            "HEAD": prov_to_sha(prov_head),
        },
    )
    _fill_expectations(manifest)
    return manifest


def _fixture_issues() -> list[Issue]:
    def rec(key, created, type_, events, assignee=None, title="", description="",
            av=(), attachments=(), severity=None):
        return issue_from_record(
            {
                "key": key,
                "created": created,
                "type": type_,
                "assignee": assignee,
                "title": title,
                "description": description,
                "affected_versions": list(av),
                "events": events,
                "comments": [],
                "attachments": list(attachments),
                "severity": severity,
            }
        )

    fixed = lambda at: [{"at": at, "status": "Resolved", "resolution": "Fixed"},
                        {"at": at, "status": "Closed", "resolution": None}]
    return [
        rec("DEMO-1", "2020-01-15T00:00:00+00:00", "Bug", fixed("2020-02-01T00:00:00+00:00"),
            title="crash on startup", description="the launcher aborts immediately"),
        rec("DEMO-2", "2020-01-20T00:00:00+00:00", "Bug", fixed("2020-02-10T00:00:00+00:00"),
            assignee="dev", title="wrong sum in totals",
            description="aggregated totals drift by one"),
        rec("DEMO-101", "2020-03-10T00:00:00+00:00", "Bug", fixed("2020-05-01T12:00:00+00:00"),
            assignee="dev", title="null pointer on empty alpha input",
            description="alpha calculator dereferences empty state", av=["1.0.0"],
            severity="Major"),
        rec("DEMO-102", "2020-03-12T00:00:00+00:00", "Bug", fixed("2020-05-10T12:00:00+00:00"),
            assignee="dev", title="beta counter overflows",
            description="narrow integer wraps for large documents"),
        rec("DEMO-103", "2020-03-15T00:00:00+00:00", "Bug", fixed("2020-06-01T12:00:00+00:00"),
            assignee="dev", title="gamma queue starves consumers",
            description="waiters never wake under load", av=["3.0.0"]),
        rec("DEMO-104", "2020-03-20T00:00:00+00:00", "Bug", fixed("2020-10-01T12:00:00+00:00"),
            assignee="dev", title="report rounding is biased",
            description="values round away from even", av=["2.0.0"],
            attachments=["stacktrace.txt"]),
        rec("DEMO-105", "2020-04-10T00:00:00+00:00", "Bug", fixed("2020-10-10T12:00:00+00:00"),
            assignee="dev", title="engine stalls on reconnect",
            description="dispatch loop spins without progress", av=["2.0.0"],
            severity="Minor"),
        rec("DEMO-106", "2020-04-12T00:00:00+00:00", "Bug", fixed("2020-06-20T00:00:00+00:00"),
            assignee="alice", title="queue drops items",
            description="items vanish when the queue is rebuilt"),
        rec("DEMO-107", "2020-05-01T00:00:00+00:00", "Bug", fixed("2020-07-10T12:00:00+00:00"),
            assignee="alice", title="matrix build is slow",
            description="requesting a speedup of the build step"),
        rec("DEMO-108", "2020-05-02T00:00:00+00:00", "Bug", fixed("2020-07-15T12:00:00+00:00"),
            assignee="alice", title="usage docs are confusing",
            description="the usage section needs clearer wording"),
        rec("DEMO-200", "2020-05-03T00:00:00+00:00", "Improvement",
            fixed("2020-06-01T00:00:00+00:00"), assignee="alice",
            title="add dark theme", description="cosmetic request"),
        rec("DEMO-201", "2020-06-01T00:00:00+00:00", "Bug", [],
            title="flaky shutdown", description="still under triage"),
    ]


def _write_fixture_decisions(path: Path, sha: dict[str, str]) -> None:
    import json

    records = [
        {"kind": "link", "commit": sha["MM"], "issue": "DEMO-106", "rater": "expert1",
         "verdict": "mentioned_only", "decided_at": "2020-11-01T10:00:00+00:00"},
        {"kind": "link", "commit": sha["VB"], "issue": "DEMO-1", "rater": "expert1",
         "verdict": "wrong", "decided_at": "2020-11-01T10:01:00+00:00"},
        {"kind": "link", "commit": sha["VB"], "issue": "DEMO-2", "rater": "expert1",
         "verdict": "wrong", "decided_at": "2020-11-01T10:02:00+00:00"},
    ]
    for key in ("DEMO-101", "DEMO-102", "DEMO-103", "DEMO-104", "DEMO-105"):
        for rater in ("expert1", "expert2"):
            records.append(
                {"kind": "issue_type", "issue": key, "rater": rater, "label": "BUG",
                 "round": "independent", "decided_at": "2020-11-02T10:00:00+00:00"}
            )
    for rater in ("expert1", "expert2"):
        records.append(
            {"kind": "issue_type", "issue": "DEMO-107", "rater": rater,
             "label": "IMPROVEMENT", "round": "independent",
             "decided_at": "2020-11-02T11:00:00+00:00"}
        )
    records += [
        {"kind": "issue_type", "issue": "DEMO-108", "rater": "expert1", "label": "BUG",
         "round": "independent", "decided_at": "2020-11-02T12:00:00+00:00"},
        {"kind": "issue_type", "issue": "DEMO-108", "rater": "expert2", "label": "DOC",
         "round": "independent", "decided_at": "2020-11-02T12:05:00+00:00"},
        {"kind": "issue_type", "issue": "DEMO-108", "rater": "expert3", "label": "DOC",
         "round": "committee", "decided_at": "2020-11-02T12:10:00+00:00"},
    ]
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _fill_expectations(m: FixtureManifest) -> None:
    s = m.sha
    fs = frozenset

    def fix_map(pairs):
        return {s[label]: fs(keys) for label, keys in pairs}

    true_fixes = [
        ("F1", {"DEMO-101"}), ("F2", {"DEMO-102"}), ("F3", {"DEMO-103"}),
        ("F4", {"DEMO-104"}), ("F5", {"DEMO-105"}),
    ]
    m.expected_fixing["SZZ"] = fix_map(true_fixes + [("VB", {"DEMO-2"})])
    m.expected_fixing["JL"] = fix_map(
        true_fixes + [("F6", {"DEMO-107"}), ("F7", {"DEMO-108"}), ("MM", {"DEMO-106"})]
    )
    m.expected_fixing["JLM"] = fix_map(
        true_fixes + [("F6", {"DEMO-107"}), ("F7", {"DEMO-108"})]
    )
    m.expected_fixing["JLMIV"] = fix_map(true_fixes)

    inducing_r = {
        (s["F1"], ALPHA_CALC, s["C02"], "DEMO-101", "inducing_before_boundary"),
        (s["F1"], GAMMA, s["C04"], "DEMO-101", "inducing_before_boundary"),
        (s["F2"], BETA, s["C03"], "DEMO-102", "inducing_before_boundary"),
        (s["F3"], GAMMA, s["C04"], "DEMO-103", "inducing_before_boundary"),
        (s["F3"], GAMMA, s["F1"], "DEMO-103", "partial_fix_suspect"),
        (s["F4"], REPORT, s["C05"], "DEMO-104", "inducing_before_boundary"),
        (s["F5"], ENGINE, s["C15"], "DEMO-105", "inducing_before_boundary"),
    }
    m.expected_inducing["JLMIV_R"] = set(inducing_r)
    m.expected_inducing["JLMIV"] = inducing_r | {
        (s["F2"], LAYOUT, s["C07"], "DEMO-102", "inducing_before_boundary"),
        (s["F3"], NOTES, s["C08"], "DEMO-103", "inducing_before_boundary"),
        (s["F4"], REPORT_TEST, s["C10"], "DEMO-104", "inducing_before_boundary"),
        (s["F5"], SHAPES, s["C09"], "DEMO-105", "inducing_before_boundary"),
    }
    # the number-heuristic baseline shares the five true fixes and adds the
    # version-bump commit, whose readme lines all blame to a post-report commit
    m.expected_inducing["SZZ"] = set(m.expected_inducing["JLMIV"])
    # hard suspects are kept only for audit
    m.expected_inducing["JLMIV_R_hard"] = {
        (s["F4"], REPORT, s["H"], "DEMO-104", "hard_suspect"),
    }
    m.expected_inducing["JLMIV_hard"] = set(m.expected_inducing["JLMIV_R_hard"])
    m.expected_inducing["SZZ_hard"] = m.expected_inducing["JLMIV_hard"] | {
        (s["VB"], README, s["C14"], "DEMO-2", "hard_suspect"),
    }

    m.expected_release["IND"] = {
        "1.0.0": (
            fs({"DEMO-101", "DEMO-102", "DEMO-103", "DEMO-104"}),
            {
                ALPHA: fs({"DEMO-101"}),
                GAMMA: fs({"DEMO-101", "DEMO-103"}),
                BETA: fs({"DEMO-102"}),
                REPORT: fs({"DEMO-104"}),
            },
        ),
        "2.0.0": (
            fs({"DEMO-104", "DEMO-105"}),
            {REPORT: fs({"DEMO-104"}), ENGINE: fs({"DEMO-105"})},
        ),
    }
    m.expected_release["SixM"] = {
        "1.0.0": (
            fs({"DEMO-101", "DEMO-102", "DEMO-103"}),
            {
                ALPHA: fs({"DEMO-101"}),
                GAMMA: fs({"DEMO-101", "DEMO-103"}),
                BETA: fs({"DEMO-102"}),
            },
        ),
        "2.0.0": (
            fs({"DEMO-104", "DEMO-105"}),
            {REPORT: fs({"DEMO-104"}), ENGINE: fs({"DEMO-105"})},
        ),
    }
    m.expected_release["AV"] = {
        "1.0.0": (fs({"DEMO-101"}), {ALPHA: fs({"DEMO-101"}), GAMMA: fs({"DEMO-101"})}),
        "2.0.0": (
            fs({"DEMO-104", "DEMO-105"}),
            {REPORT: fs({"DEMO-104"}), ENGINE: fs({"DEMO-105"})},
        ),
    }
    m.av_unresolved = {"DEMO-103": ["3.0.0"]}


# -- randomized repositories for property tests ---------------------------------


def build_random_repo(root: str | Path, seed: int) -> tuple[Path, Path, str]:
    """A small random repository plus issue export; returns
    (repo, issues_path, project_key). Structure varies with the seed:
    optional feature branch, in-place edits, key/number/mention messages."""
    rng = random.Random(seed)
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    b = RepoBuilder()
    project = rng.choice(["ALPHA", "CORE", "MINE", "QUEUE"])
    paths = [f"src/main/java/app/File{i}.java" for i in range(rng.randint(3, 5))]
    test_path = "src/test/java/app/SomeTest.java"

    n_issues = rng.randint(4, 8)
    base = _dt("2021-01-01T00:00:00")
    issue_records = []
    for i in range(1, n_issues + 1):
        created = base.replace(day=rng.randint(1, 20))
        resolved = rng.random() < 0.8
        events = (
            [{"at": (created.replace(day=created.day + rng.randint(1, 8))).isoformat(),
              "status": rng.choice(["Resolved", "Closed"]),
              "resolution": rng.choice(["Fixed", "Fixed", "WontFix"])}]
            if resolved
            else []
        )
        issue_records.append(
            {
                "key": f"{project}-{i}",
                "created": created.isoformat(),
                "type": rng.choice(["Bug", "Bug", "Bug", "Improvement"]),
                "assignee": rng.choice(["dev", "alice", None]),
                "title": f"issue number {i} title",
                "description": "generated issue",
                "affected_versions": [],
                "events": events,
                "comments": [],
                "attachments": [],
            }
        )
    issues = [issue_from_record(r) for r in issue_records]
    issues_path = root / "issues.jsonl"
    write_export(issues, issues_path)

    label = 0

    def next_label():
        nonlocal label
        label += 1
        return f"K{label}"

    first = next_label()
    b.commit(first, "main", "initial import", base,
             {p: _java(f"file{i}", 9 + rng.randint(0, 5)) for i, p in enumerate(paths)}
             | {test_path: _java("someTest", 6)},
             [])
    prev = first
    day = 2
    branch_point = None
    n_commits = rng.randint(8, 14)
    for n in range(n_commits):
        day += rng.randint(1, 3)
        when = base.replace(month=1 + day // 28, day=1 + day % 28)
        path = rng.choice(paths + [test_path])
        content = b.content("main", path)
        lines = content.rstrip("\n").split("\n")
        lineno = rng.randint(3, max(3, len(lines) - 1))
        style = rng.random()
        if style < 0.2:
            new_line = lines[lineno - 1].replace("    ", "  ", 1) or "  x"
        elif style < 0.3:
            new_line = lines[lineno - 1] + " // note"
        else:
            new_line = f"    int edited{n}Seed{seed} = {n};"
        ref = rng.random()
        issue_no = rng.randint(1, n_issues)
        if ref < 0.35:
            message = f"{project}-{issue_no} fix things round {n}"
        elif ref < 0.5:
            message = f"adjust handling, see {project}-{issue_no}"
        elif ref < 0.65:
            message = f"fix bug {issue_no}"
        else:
            message = f"routine maintenance pass {n}"
        lab = next_label()
        b.commit(lab, "main", message, when,
                 {path: _replace(content, lineno, new_line)}, [prev])
        prev = lab
        if branch_point is None and rng.random() < 0.4 and n > 2:
            branch_point = prev
    if branch_point is not None:
        s_lab = next_label()
        b.commit(s_lab, "side", "side work", base.replace(month=3, day=1),
                 {"src/main/java/app/Side.java": _java("side", 7)},
                 [branch_point], base_branch="main")
        m_lab = next_label()
        b.commit(m_lab, "main", "merge side work", base.replace(month=3, day=5),
                 {}, [prev, s_lab], merge_files_from="side")
    repo = root / "repo.git"
    b.write(repo)
    return repo, issues_path, project
