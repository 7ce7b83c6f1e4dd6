"""Bug-inducing change detection with suspect classification and filters.

For every action of a fixing commit, the pre-image lines it deleted or
modified are blamed; each blamed commit is a candidate. Candidates dated
before the boundary (issue report date, optionally capped by the earliest
affected-version release) are inducing; later candidates are suspects and
survive only as partial fixes (the candidate itself fixes a bug) or weak
suspects (the candidate carries a before-boundary attribution for another
bug). The remaining hard suspects are dropped from downstream outputs but
kept for audit.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional

from defectmine.fixlabel import FixLabel
from defectmine.issues import Issue, VersionRelease
from defectmine.vcs.blame import Blamer
from defectmine.vcs.model import ChangeGraph, FileAction

log = logging.getLogger("defectmine.inducing")

# inducing strategies; the +R family applies the trivial-change filters
IND_SZZ = "SZZ"
IND_JLMIV = "JLMIV"
IND_JLMIV_R = "JLMIV_R"
IND_JLMIV_RAV = "JLMIV_RAV"
IND_JL_R = "JL_R"

FILTERED_STRATEGIES = {IND_JLMIV_R, IND_JLMIV_RAV, IND_JL_R}

INDUCING = "inducing_before_boundary"
WEAK_SUSPECT = "weak_suspect"
PARTIAL_FIX_SUSPECT = "partial_fix_suspect"
HARD_SUSPECT = "hard_suspect"

SUBSTANTIVE = "substantive"
WHITESPACE_ONLY = "whitespace_only"
COMMENT_ONLY = "comment_only"
NONPRODUCTION = "nonproduction"
REFACTORING_ONLY = "refactoring_only"
PURE_ADDITION = "pure_addition"

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class LanguageProfile:
    """Comment and literal syntax used for source normalization."""

    line_comment: str = "//"
    block_comment_start: str = "/*"
    block_comment_end: str = "*/"
    string_delimiters: tuple[str, ...] = ('"', "'")
    escape_char: str = "\\"
    source_extensions: tuple[str, ...] = (".java",)

    def __post_init__(self):
        if self.block_comment_start and not self.block_comment_end:
            raise ValueError("block comment start without end delimiter")


JAVA_PROFILE = LanguageProfile()

DEFAULT_NONPRODUCTION_PATTERNS = (
    "**/test/**",
    "**/tests/**",
    "**/*Test*.java",
    "**/examples/**",
    "**/tutorial*/**",
    "**/doc/**",
    "**/docs/**",
)


@dataclass(frozen=True)
class RefactoringRange:
    commit: str
    path: str
    old_start: int
    old_end: int  # inclusive
    kind: str = ""


@dataclass(frozen=True)
class FilterConfig:
    nonproduction_path_patterns: tuple[str, ...] = DEFAULT_NONPRODUCTION_PATTERNS
    refactorings: tuple[RefactoringRange, ...] = ()
    profile: LanguageProfile = JAVA_PROFILE

    def refactored_lines(self, commit: str, path: str) -> set[int]:
        lines: set[int] = set()
        for r in self.refactorings:
            if r.commit == commit and r.path == path:
                lines.update(range(r.old_start, r.old_end + 1))
        return lines


def read_refactoring_report(path: str | Path) -> tuple[RefactoringRange, ...]:
    """Columnar report: commit, path, old_start, old_end, kind (tab separated)."""
    ranges = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 4:
            raise ValueError(f"{path}:{lineno}: expected commit<TAB>path<TAB>start<TAB>end[<TAB>kind]")
        ranges.append(
            RefactoringRange(
                commit=parts[0],
                path=parts[1],
                old_start=int(parts[2]),
                old_end=int(parts[3]),
                kind=parts[4] if len(parts) > 4 else "",
            )
        )
    return tuple(ranges)


@dataclass(frozen=True)
class NormalizedSource:
    text: str
    unterminated_comment: bool = False


def normalize_source(text: str, profile: LanguageProfile = JAVA_PROFILE) -> NormalizedSource:
    """Strip comments (string/char literal aware), then all whitespace."""
    out: list[str] = []
    i = 0
    n = len(text)
    lc = profile.line_comment
    bs = profile.block_comment_start
    be = profile.block_comment_end
    esc = profile.escape_char
    unterminated = False
    while i < n:
        ch = text[i]
        if ch in profile.string_delimiters:
            # copy the literal verbatim, honoring escapes
            quote = ch
            out.append(ch)
            i += 1
            while i < n:
                c = text[i]
                out.append(c)
                if c == esc and i + 1 < n:
                    out.append(text[i + 1])
                    i += 2
                    continue
                i += 1
                if c == quote:
                    break
            continue
        if lc and text.startswith(lc, i):
            nl = text.find("\n", i)
            if nl == -1:
                break
            i = nl  # keep the newline; whitespace strip removes it anyway
            continue
        if bs and text.startswith(bs, i):
            end = text.find(be, i + len(bs))
            if end == -1:
                unterminated = True
                break
            i = end + len(be)
            continue
        out.append(ch)
        i += 1
    # remove whitespace without forging new comment delimiters across the
    # removed gap (keeps the function idempotent: "a / / b" must not become
    # a line comment on the second pass)
    starts = {d for d in (lc, bs) if d and len(d) == 2}
    stripped: list[str] = []
    skipped_ws = False
    for ch in "".join(out):
        if ch.isspace():
            skipped_ws = True
            continue
        if skipped_ws and stripped and (stripped[-1] + ch) in starts:
            stripped.append(" ")
        stripped.append(ch)
        skipped_ws = False
    return NormalizedSource(text="".join(stripped), unterminated_comment=unterminated)


def strip_whitespace(text: str) -> str:
    return _WS.sub("", text)


def logical_lines(lines: Iterable[str], profile: LanguageProfile = JAVA_PROFILE) -> int:
    """Count lines that still carry content after comment stripping."""
    count = 0
    for line in lines:
        if normalize_source(line, profile).text:
            count += 1
    return count


def _glob_to_regex(pattern: str) -> re.Pattern:
    # '**' crosses path separators, '*'/'?' stay within one segment
    parts = []
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "*":
            if pattern.startswith("**/", i):
                parts.append("(?:.*/)?")
                i += 3
                continue
            if pattern.startswith("**", i):
                parts.append(".*")
                i += 2
                continue
            parts.append("[^/]*")
        elif c == "?":
            parts.append("[^/]")
        else:
            parts.append(re.escape(c))
        i += 1
    return re.compile("^" + "".join(parts) + "$")


class PathMatcher:
    def __init__(self, patterns: Iterable[str]):
        self._regexes = [_glob_to_regex(p) for p in patterns]

    def matches(self, path: str) -> bool:
        return any(r.match(path) for r in self._regexes)


def is_production_path(path: str, config: FilterConfig) -> bool:
    if not any(path.endswith(ext) for ext in config.profile.source_extensions):
        return False
    return not PathMatcher(config.nonproduction_path_patterns).matches(path)


@dataclass(frozen=True)
class TrivialChangeVerdict:
    commit: str
    path: str
    verdict: str


def classify_action(action: FileAction, config: FilterConfig) -> TrivialChangeVerdict:
    """Exactly one verdict per action; precedence: nonproduction, pure
    addition, whitespace/comment equivalence, refactoring coverage."""
    path = action.path
    if not is_production_path(path, config):
        return TrivialChangeVerdict(action.commit, path, NONPRODUCTION)
    if action.kind == "added":
        return TrivialChangeVerdict(action.commit, path, PURE_ADDITION)
    if not action.is_binary:
        # zero-hunk actions (pure renames, mode changes) leave content intact
        ws_trivial = True
        full_trivial = True
        for h in action.hunks:
            old = "\n".join(h.old_lines)
            new = "\n".join(h.new_lines)
            if strip_whitespace(old) != strip_whitespace(new):
                ws_trivial = False
                old_n = normalize_source(old, config.profile).text
                new_n = normalize_source(new, config.profile).text
                if old_n != new_n:
                    full_trivial = False
                    break
        if ws_trivial:
            return TrivialChangeVerdict(action.commit, path, WHITESPACE_ONLY)
        if full_trivial:
            return TrivialChangeVerdict(action.commit, path, COMMENT_ONLY)
    changed_old = action.old_line_numbers()
    if changed_old and action.path_old is not None:
        covered = config.refactored_lines(action.commit, action.path_old)
        if covered and changed_old <= covered:
            return TrivialChangeVerdict(action.commit, path, REFACTORING_ONLY)
    return TrivialChangeVerdict(action.commit, path, SUBSTANTIVE)


@dataclass(frozen=True)
class InducingChange:
    fixing_commit: str
    fixing_path: str  # pre-image path of the fixed file
    inducing_commit: str
    issue: str
    lines: frozenset[int]
    classification: str
    boundary_used: datetime
    strategy: str

    @property
    def is_suspect(self) -> bool:
        return self.classification != INDUCING

    @property
    def kept(self) -> bool:
        return self.classification != HARD_SUSPECT


@dataclass
class InducingResult:
    changes: list[InducingChange] = field(default_factory=list)
    dropped_hard_suspects: list[InducingChange] = field(default_factory=list)
    skipped_merge_fixes: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def kept_changes(self) -> list[InducingChange]:
        return list(self.changes)

    def all_changes(self) -> list[InducingChange]:
        return self.changes + self.dropped_hard_suspects


def _boundary_for(
    issue: Issue,
    strategy: str,
    releases: dict[str, VersionRelease],
    warnings: list[str],
) -> datetime:
    boundary = issue.reported_at
    if strategy != IND_JLMIV_RAV:
        return boundary
    dates = []
    for name in issue.affected_versions:
        rel = releases.get(name)
        if rel is None or rel.released_at is None:
            warnings.append(
                f"{issue.key}: affected version {name!r} has no known release date; "
                "using report date"
            )
            continue
        dates.append(rel.released_at)
    if dates:
        boundary = min(boundary, min(dates))
    return boundary


def _blame_candidates(
    graph: ChangeGraph,
    action: FileAction,
    blamer: Blamer,
) -> dict[str, set[int]]:
    """inducing commit -> pre-image lines attributed to it."""
    if action.parent is None or action.path_old is None or action.is_binary:
        return {}
    by_commit: dict[str, set[int]] = {}
    for line in sorted(action.old_line_numbers()):
        writer = blamer.attribute(action.parent, action.path_old, line)
        by_commit.setdefault(writer, set()).add(line)
    return by_commit


def find_inducing(
    fix: FixLabel,
    graph: ChangeGraph,
    issues: dict[str, Issue],
    config: FilterConfig,
    strategy: str,
    releases: Optional[dict[str, VersionRelease]] = None,
    blamer: Optional[Blamer] = None,
) -> InducingResult:
    """First-pass attribution for one fixing commit: blame each qualifying
    action and split candidates into before-boundary and suspects. Suspect
    subtyping happens in :func:`find_inducing_all` once every before-boundary
    attribution is known; here suspects are provisionally hard."""
    releases = releases or {}
    result = InducingResult()
    commit = graph.commit(fix.commit)
    if commit.is_merge:
        result.skipped_merge_fixes.append(fix.commit)
        log.info("skipping merge fix %s: per-parent diffs are branch work", fix.commit[:10])
        return result
    blamer = blamer or Blamer(graph)
    apply_filters = strategy in FILTERED_STRATEGIES
    for action in graph.first_parent_actions(fix.commit):
        if action.is_binary:
            continue
        if apply_filters:
            verdict = classify_action(action, config).verdict
            if verdict != SUBSTANTIVE:
                continue
        elif action.kind == "added":
            continue  # pure additions have no pre-image to blame
        candidates = _blame_candidates(graph, action, blamer)
        for issue_key in sorted(fix.fixing_for):
            issue = issues.get(issue_key)
            if issue is None:
                continue
            boundary = _boundary_for(issue, strategy, releases, result.warnings)
            for inducing_commit, lines in sorted(candidates.items()):
                before = graph.commit(inducing_commit).committer_date < boundary
                result.changes.append(
                    InducingChange(
                        fixing_commit=fix.commit,
                        fixing_path=action.path_old,  # type: ignore[arg-type]
                        inducing_commit=inducing_commit,
                        issue=issue_key,
                        lines=frozenset(lines),
                        classification=INDUCING if before else HARD_SUSPECT,
                        boundary_used=boundary,
                        strategy=strategy,
                    )
                )
    return result


def find_inducing_all(
    fix_labels: Iterable[FixLabel],
    graph: ChangeGraph,
    issues: Iterable[Issue],
    config: FilterConfig,
    strategy: str,
    releases: Optional[dict[str, VersionRelease]] = None,
) -> InducingResult:
    """Two-pass driver: blame everything, then classify suspects once all
    before-boundary attributions are known (no fixpoint iteration)."""
    issue_map = {i.key: i for i in issues}
    labels = sorted(fix_labels, key=lambda l: l.commit)
    blamer = Blamer(graph)
    merged = InducingResult()
    for fix in labels:
        part = find_inducing(fix, graph, issue_map, config, strategy, releases, blamer)
        merged.changes.extend(part.changes)
        merged.skipped_merge_fixes.extend(part.skipped_merge_fixes)
        merged.warnings.extend(part.warnings)

    fixing_commits = {l.commit for l in labels}
    inducing_issues_by_commit: dict[str, set[str]] = {}
    for change in merged.changes:
        if change.classification == INDUCING:
            inducing_issues_by_commit.setdefault(change.inducing_commit, set()).add(change.issue)

    final_changes: list[InducingChange] = []
    dropped: list[InducingChange] = []
    for change in merged.changes:
        if change.classification == INDUCING:
            final_changes.append(change)
            continue
        if change.inducing_commit in fixing_commits:
            final_changes.append(
                _reclassify(change, PARTIAL_FIX_SUSPECT)
            )
            continue
        other_bugs = inducing_issues_by_commit.get(change.inducing_commit, set()) - {change.issue}
        if other_bugs:
            final_changes.append(_reclassify(change, WEAK_SUSPECT))
        else:
            dropped.append(change)
    merged.changes = final_changes
    merged.dropped_hard_suspects = dropped
    return merged


def _reclassify(change: InducingChange, classification: str) -> InducingChange:
    return InducingChange(
        fixing_commit=change.fixing_commit,
        fixing_path=change.fixing_path,
        inducing_commit=change.inducing_commit,
        issue=change.issue,
        lines=change.lines,
        classification=classification,
        boundary_used=change.boundary_used,
        strategy=change.strategy,
    )
