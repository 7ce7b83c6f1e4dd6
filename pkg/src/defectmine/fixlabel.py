"""Bug-fixing commit labeling under the four strategies.

* number-heuristic baseline: semantic checks decide, with the keyword and
  bare-number fallbacks for single-check candidates;
* key links: every detected key link to a resolved tracker-BUG issue;
* validated links: only auto-validated or expert-confirmed links;
* validated links + validated types: additionally the issue's final label
  must be BUG.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from defectmine.issues import Issue, was_closed_or_resolved
from defectmine.links import (
    AUTO_VALIDATED,
    EXPERT_CONFIRMED,
    JL_KEY,
    SZZ_NUMBER,
    LinkCandidate,
)

SZZ = "SZZ"
JL = "JL"
JLM = "JLM"
JLMIV = "JLMIV"

STRATEGIES = (SZZ, JL, JLM, JLMIV)

BUG = "BUG"


class LabelError(Exception):
    pass


@dataclass(frozen=True)
class FixLabel:
    commit: str
    strategy: str
    fixing_for: frozenset[str]

    def __post_init__(self):
        if not self.fixing_for:
            raise LabelError(f"{self.commit}: fix label without issues")


def label_szz(
    candidates: Iterable[LinkCandidate], issues: Iterable[Issue]
) -> set[FixLabel]:
    """A commit fixes an issue when the link passes at least two semantic
    checks, or exactly one check plus the keyword / bare-number fallback."""
    issue_keys = {i.key for i in issues}
    fixing: dict[str, set[str]] = {}
    for cand in candidates:
        if cand.detector != SZZ_NUMBER or cand.issue not in issue_keys:
            continue
        checks = cand.checks
        qualifies = checks.passed_count >= 2 or (
            checks.passed_count == 1
            and (checks.keyword_present or checks.bare_number_syntax)
        )
        if qualifies:
            fixing.setdefault(cand.commit, set()).add(cand.issue)
    return {
        FixLabel(commit=c, strategy=SZZ, fixing_for=frozenset(keys))
        for c, keys in fixing.items()
    }


def label_jl_family(
    candidates: Iterable[LinkCandidate],
    issues: Iterable[Issue],
    strategy: str,
    final_types: Optional[dict[str, str]] = None,
) -> tuple[set[FixLabel], list[str]]:
    """Label fixing commits for the key-link strategies.

    ``final_types`` holds validated issue labels from the decision store
    (required for the validated-type strategy). Returns the labels plus
    warnings for linked issues that still lack a validated type.
    """
    if strategy not in (JL, JLM, JLMIV):
        raise LabelError(f"unknown strategy {strategy!r}")
    final_types = final_types or {}
    candidates = list(candidates)
    by_key = {i.key: i for i in issues}
    warnings: list[str] = []
    fixing: dict[str, set[str]] = {}
    unvalidated: set[str] = set()
    # the validated strategies refine the key-link set: a confirmed link that
    # only the number heuristic found stays out of the labels (kept in the
    # store for audit), preserving JLMIV <= JLM <= JL commit monotonicity
    key_pairs = {(c.commit, c.issue) for c in candidates if c.detector == JL_KEY}

    for cand in candidates:
        issue = by_key.get(cand.issue)
        if issue is None:
            continue
        if strategy == JL:
            if cand.detector != JL_KEY:
                continue
        else:
            if (cand.commit, cand.issue) not in key_pairs:
                continue
            if cand.validation not in (AUTO_VALIDATED, EXPERT_CONFIRMED):
                continue
        if not was_closed_or_resolved(issue):
            continue
        if issue.original_type.upper() != BUG:
            continue
        if strategy == JLMIV:
            final = final_types.get(issue.key)
            if final is None:
                unvalidated.add(issue.key)
                continue
            if final != BUG:
                continue
        fixing.setdefault(cand.commit, set()).add(cand.issue)

    if strategy == JLMIV and unvalidated:
        warnings.append(
            "issues lacking a validated type (excluded from labels): "
            + ", ".join(sorted(unvalidated))
        )
    labels = {
        FixLabel(commit=c, strategy=strategy, fixing_for=frozenset(keys))
        for c, keys in fixing.items()
    }
    return labels, warnings


def fixing_commits(labels: Iterable[FixLabel]) -> set[str]:
    return {l.commit for l in labels}


def issues_fixed_by(labels: Iterable[FixLabel]) -> dict[str, set[str]]:
    """issue key -> fixing commits."""
    out: dict[str, set[str]] = {}
    for label in labels:
        for key in label.fixing_for:
            out.setdefault(key, set()).add(label.commit)
    return out


def audit_rejected_only(
    candidates: Iterable[LinkCandidate], labels: Iterable[FixLabel]
) -> set[str]:
    """Commits whose every link was rejected; kept for cause-reference mining."""
    labeled = fixing_commits(labels)
    by_commit: dict[str, list[LinkCandidate]] = {}
    for cand in candidates:
        by_commit.setdefault(cand.commit, []).append(cand)
    return {
        commit
        for commit, group in by_commit.items()
        if commit not in labeled
        and group
        and all(c.validation == "expert_rejected" for c in group)
    }
