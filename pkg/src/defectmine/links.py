"""Commit-to-issue link candidates.

Two detectors: the classic number heuristic (any digit run in the message is
checked against issue numbers) and key matching on the full PROJECT-NUMBER
identifier, with a user-supplied misspelling map for broken key spellings.
Candidates carry the four semantic check results used for fix labeling.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from defectmine.issues import Issue, was_fixed_once
from defectmine.vcs.model import ChangeGraph, Commit

log = logging.getLogger("defectmine.links")

SZZ_NUMBER = "SZZ_NUMBER"
JL_KEY = "JL_KEY"

UNVALIDATED = "unvalidated"
AUTO_VALIDATED = "auto_validated"
EXPERT_CONFIRMED = "expert_confirmed"
EXPERT_REJECTED = "expert_rejected"

DEFAULT_KEYWORDS = ("bug", "fix", "defect", "patch")

DIGIT_RUN = re.compile(r"\d+")
# a "clearly issue-referencing" message: bug #N somewhere, or nothing but
# numbers and list separators
BUG_NUMBER_SYNTAX = re.compile(r"bug\s*#\s*\d+", re.IGNORECASE)
NUMBER_LIST_ONLY = re.compile(r"^[\d\s.,;:#/+-]*\d[\d\s.,;:#/+-]*$")


class LinkConfigError(Exception):
    pass


@dataclass(frozen=True)
class SemanticCheckResult:
    fixed_once: bool = False
    assignee_matches: bool = False
    text_contained: bool = False
    files_attached: bool = False
    keyword_present: bool = False
    bare_number_syntax: bool = False

    @property
    def passed_count(self) -> int:
        return sum(
            (self.fixed_once, self.assignee_matches, self.text_contained, self.files_attached)
        )


@dataclass(frozen=True)
class LinkCandidate:
    commit: str
    issue: str
    detector: str  # SZZ_NUMBER | JL_KEY
    matched_text: str
    at_message_start: bool = False
    checks: SemanticCheckResult = SemanticCheckResult()
    validation: str = UNVALIDATED


def keyword_present(message: str, keywords: Iterable[str] = DEFAULT_KEYWORDS) -> bool:
    """True when a keyword occurs at the start of a word (``fixes`` counts)."""
    pattern = re.compile(r"\b(?:" + "|".join(re.escape(k) for k in keywords) + r")", re.IGNORECASE)
    return bool(pattern.search(message))


def bare_number_syntax(message: str) -> bool:
    text = message.strip()
    return bool(BUG_NUMBER_SYNTAX.search(text)) or bool(NUMBER_LIST_ONLY.match(text))


def evaluate_semantic_checks(
    commit: Commit,
    issue: Issue,
    action_paths: Iterable[str],
    keywords: Iterable[str] = DEFAULT_KEYWORDS,
) -> SemanticCheckResult:
    """The four issue/commit agreement checks plus the keyword fallbacks."""
    message_lower = commit.message.lower()
    assignee = (issue.assignee or "").strip().lower()
    author_ids = {
        commit.author_name.strip().lower(),
        commit.author_email.strip().lower(),
        commit.author_email.split("@", 1)[0].strip().lower(),
    }
    text_contained = False
    for text in (issue.title, issue.description):
        text = text.strip().lower()
        if text and text in message_lower:
            text_contained = True
            break
    basenames = {p.rsplit("/", 1)[-1] for p in action_paths}
    attachments = set(issue.attachments)
    return SemanticCheckResult(
        fixed_once=was_fixed_once(issue),
        assignee_matches=bool(assignee) and assignee in author_ids,
        text_contained=text_contained,
        files_attached=bool(basenames & attachments),
        keyword_present=keyword_present(commit.message, keywords),
        bare_number_syntax=bare_number_syntax(commit.message),
    )


def _changed_paths(graph: ChangeGraph, commit: Commit) -> set[str]:
    paths: set[str] = set()
    for action in graph.first_parent_actions(commit.id):
        if action.path_old:
            paths.add(action.path_old)
        if action.path_new:
            paths.add(action.path_new)
    return paths


def detect_szz_links(
    graph: ChangeGraph,
    issues: Iterable[Issue],
    keywords: Iterable[str] = DEFAULT_KEYWORDS,
) -> list[LinkCandidate]:
    """One candidate per (commit, digit run) whose number is an issue number.

    Version strings like ``1.2`` still produce matches for issues 1 and 2;
    reproducing that false-positive behavior is the point of the baseline.
    """
    # single-project usage in practice; with mixed prefixes the first key in
    # sort order wins deterministically
    by_number: dict[int, Issue] = {}
    for issue in sorted(issues, key=lambda i: i.key, reverse=True):
        by_number[issue.number] = issue
    candidates: list[LinkCandidate] = []
    for commit in graph.commits_sorted():
        seen: set[str] = set()
        for m in DIGIT_RUN.finditer(commit.message):
            run = m.group(0)
            try:
                number = int(run)
            except ValueError:  # pragma: no cover - \d+ always parses
                continue
            issue = by_number.get(number)
            if issue is None or issue.key in seen:
                continue
            seen.add(issue.key)
            checks = evaluate_semantic_checks(
                commit, issue, _changed_paths(graph, commit), keywords
            )
            candidates.append(
                LinkCandidate(
                    commit=commit.id,
                    issue=issue.key,
                    detector=SZZ_NUMBER,
                    matched_text=run,
                    at_message_start=m.start() == 0,
                    checks=checks,
                )
            )
    return candidates


def read_misspellings(path: str | Path) -> dict[str, str]:
    """Parse the ``WRONG=CORRECT`` prefix map; '#' starts a comment line."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise LinkConfigError(f"{path}:{lineno}: expected WRONG=CORRECT, got {line!r}")
        wrong, correct = (part.strip().upper() for part in line.split("=", 1))
        if not wrong or not correct:
            raise LinkConfigError(f"{path}:{lineno}: empty prefix in {line!r}")
        mapping[wrong] = correct
    return mapping


def detect_jl_links(
    graph: ChangeGraph,
    issues: Iterable[Issue],
    misspellings: Optional[dict[str, str]] = None,
    keywords: Iterable[str] = DEFAULT_KEYWORDS,
) -> list[LinkCandidate]:
    """Candidates for full PROJECT-NUMBER mentions, including corrected
    misspellings. Case-insensitive on the prefix, exact on the number, and
    bounded by non-alphanumeric characters on both sides.
    """
    issue_by_key: dict[str, Issue] = {i.key: i for i in issues}
    prefixes = {i.project_key for i in issues}
    misspellings = dict(misspellings or {})
    unknown_targets = {v for v in misspellings.values() if v not in prefixes}
    if unknown_targets:
        log.warning(
            "misspelling map targets unknown project keys: %s", ", ".join(sorted(unknown_targets))
        )
    # exact keys require the dash; misspelt written forms may omit it
    matchers = [
        (
            re.compile(
                r"(?<![A-Za-z0-9])(" + re.escape(p) + r")-([1-9][0-9]*)(?![A-Za-z0-9])",
                re.IGNORECASE,
            ),
            p,
        )
        for p in sorted(prefixes)
    ]
    matchers += [
        (
            re.compile(
                r"(?<![A-Za-z0-9])(" + re.escape(w) + r")[-_]?([1-9][0-9]*)(?![A-Za-z0-9])",
                re.IGNORECASE,
            ),
            c,
        )
        for w, c in sorted(misspellings.items())
        if c in prefixes
    ]

    candidates: list[LinkCandidate] = []
    for commit in graph.commits_sorted():
        message = commit.message
        stripped_offset = len(message) - len(message.lstrip())
        found: dict[str, tuple[int, str]] = {}
        for pattern, canonical in matchers:
            for m in pattern.finditer(message):
                key = f"{canonical}-{m.group(2)}"
                if key not in issue_by_key:
                    continue
                if key not in found or m.start() < found[key][0]:
                    found[key] = (m.start(), m.group(0))
        for key, (start, matched) in sorted(found.items()):
            issue = issue_by_key[key]
            checks = evaluate_semantic_checks(
                commit, issue, _changed_paths(graph, commit), keywords
            )
            candidates.append(
                LinkCandidate(
                    commit=commit.id,
                    issue=key,
                    detector=JL_KEY,
                    matched_text=matched,
                    at_message_start=start == stripped_offset,
                    checks=checks,
                )
            )
    return candidates


def auto_validate(candidates: Iterable[LinkCandidate]) -> list[LinkCandidate]:
    """Validate commits whose single linked issue is named at message start.

    A commit qualifies when exactly one distinct issue is linked and the key
    match for it sits at the very start of the message; all candidate
    records of that (commit, issue) pair are marked. Everything else stays
    unvalidated for expert review.
    """
    candidates = list(candidates)
    by_commit: dict[str, list[LinkCandidate]] = {}
    for cand in candidates:
        by_commit.setdefault(cand.commit, []).append(cand)
    validated_pairs: set[tuple[str, str]] = set()
    for commit, group in by_commit.items():
        issues = {c.issue for c in group}
        if len(issues) != 1:
            continue
        if any(c.at_message_start and c.detector == JL_KEY for c in group):
            validated_pairs.add((commit, next(iter(issues))))
    return [
        replace(c, validation=AUTO_VALIDATED)
        if (c.commit, c.issue) in validated_pairs and c.validation == UNVALIDATED
        else c
        for c in candidates
    ]
