"""Expert decision store: link verdicts and issue-type labels.

Decisions append to a line-delimited log; replaying the log onto an empty
store reproduces identical state. Issue types follow the two-rater protocol:
two agreeing independent labels finalize an issue, a disagreement queues it
for a committee decision by a third rater who sees both labels blinded.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from defectmine.issues import Issue, parse_utc
from defectmine.links import EXPERT_CONFIRMED, EXPERT_REJECTED, UNVALIDATED, LinkCandidate

log = logging.getLogger("defectmine.validation")

VERDICTS = ("addressed", "mentioned_only", "wrong")
ISSUE_LABELS = ("BUG", "IMPROVEMENT", "TEST", "DOC", "OTHER")
ROUNDS = ("independent", "committee")


class DecisionConflict(Exception):
    """A decision that would contradict or duplicate recorded state."""


class DecisionInvalid(Exception):
    """A decision that is malformed or references unknown items."""


@dataclass(frozen=True)
class LinkDecision:
    commit: str
    issue: str
    rater: str
    verdict: str
    decided_at: datetime

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise DecisionInvalid(f"unknown verdict {self.verdict!r}")
        if not self.rater:
            raise DecisionInvalid("rater must be non-empty")


@dataclass(frozen=True)
class IssueTypeDecision:
    issue: str
    rater: str
    label: str
    round: str
    decided_at: datetime

    def __post_init__(self):
        if self.label not in ISSUE_LABELS:
            raise DecisionInvalid(f"unknown issue label {self.label!r}")
        if self.round not in ROUNDS:
            raise DecisionInvalid(f"unknown round {self.round!r}")
        if not self.rater:
            raise DecisionInvalid("rater must be non-empty")


@dataclass
class IssueTypeState:
    independent: dict[str, str] = field(default_factory=dict)  # rater -> label
    committee: Optional[tuple[str, str]] = None  # (rater, label)

    @property
    def has_conflict(self) -> bool:
        labels = set(self.independent.values())
        return len(self.independent) == 2 and len(labels) == 2 and self.committee is None

    @property
    def final_label(self) -> Optional[str]:
        if self.committee is not None:
            return self.committee[1]
        if len(self.independent) == 2:
            labels = set(self.independent.values())
            if len(labels) == 1:
                return labels.pop()
        return None


class ValidationStore:
    """In-memory decision state with an optional append-only log file.

    Single-writer: every mutation happens under one lock; reads of derived
    state take the same lock to stay consistent.
    """

    def __init__(self, log_path: Optional[str | Path] = None):
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path else None
        self.link_decisions: dict[tuple[str, str], LinkDecision] = {}
        self.issue_types: dict[str, IssueTypeState] = {}

    # -- persistence -------------------------------------------------------

    @classmethod
    def load(cls, log_path: str | Path) -> "ValidationStore":
        store = cls(log_path=None)
        path = Path(log_path)
        if path.exists():
            with path.open("r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    try:
                        store.apply_record(rec)
                    except (DecisionConflict, DecisionInvalid) as exc:
                        raise DecisionInvalid(f"{path}:{lineno}: {exc}") from None
        store._log_path = path
        return store

    def apply_record(self, rec: dict) -> None:
        kind = rec.get("kind")
        if kind == "link":
            self.record_link_decision(
                LinkDecision(
                    commit=rec["commit"],
                    issue=rec["issue"],
                    rater=rec["rater"],
                    verdict=rec["verdict"],
                    decided_at=parse_utc(rec["decided_at"]),
                ),
                known_pairs=None,
            )
        elif kind == "issue_type":
            self.record_issue_type(
                IssueTypeDecision(
                    issue=rec["issue"],
                    rater=rec["rater"],
                    label=rec["label"],
                    round=rec["round"],
                    decided_at=parse_utc(rec["decided_at"]),
                )
            )
        else:
            raise DecisionInvalid(f"unknown decision record kind {kind!r}")

    def _append(self, rec: dict) -> None:
        if self._log_path is None:
            return
        with self._log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")

    # -- link decisions ------------------------------------------------------

    def record_link_decision(
        self,
        decision: LinkDecision,
        known_pairs: Optional[set[tuple[str, str]]] = None,
    ) -> None:
        """Record one verdict for a (commit, issue) pair.

        The first decision settles the pair; any further decision raises a
        conflict (one validation decision per pair). ``known_pairs`` guards
        against decisions for unknown candidates when provided.
        """
        pair = (decision.commit, decision.issue)
        with self._lock:
            if known_pairs is not None and pair not in known_pairs:
                raise DecisionInvalid(f"unknown link candidate {pair}")
            existing = self.link_decisions.get(pair)
            if existing is not None:
                if existing.rater == decision.rater:
                    raise DecisionConflict(f"{decision.rater} already decided {pair}")
                raise DecisionConflict(f"{pair} already decided by {existing.rater}")
            self.link_decisions[pair] = decision
            self._append(
                {
                    "kind": "link",
                    "commit": decision.commit,
                    "issue": decision.issue,
                    "rater": decision.rater,
                    "verdict": decision.verdict,
                    "decided_at": decision.decided_at.isoformat(),
                }
            )

    def link_state(self, commit: str, issue: str) -> Optional[str]:
        decision = self.link_decisions.get((commit, issue))
        if decision is None:
            return None
        return EXPERT_CONFIRMED if decision.verdict == "addressed" else EXPERT_REJECTED

    def apply_to_candidates(self, candidates: Iterable[LinkCandidate]) -> list[LinkCandidate]:
        """Overlay expert decisions onto candidate validation states."""
        from dataclasses import replace

        out = []
        with self._lock:
            for cand in candidates:
                decision = self.link_decisions.get((cand.commit, cand.issue))
                if decision is None:
                    out.append(cand)
                else:
                    state = (
                        EXPERT_CONFIRMED if decision.verdict == "addressed" else EXPERT_REJECTED
                    )
                    out.append(replace(cand, validation=state))
        return out

    # -- issue-type decisions --------------------------------------------------

    def record_issue_type(self, decision: IssueTypeDecision) -> bool:
        """Record a label; returns True when the issue is now in conflict."""
        with self._lock:
            state = self.issue_types.setdefault(decision.issue, IssueTypeState())
            if decision.round == "independent":
                if state.committee is not None:
                    raise DecisionConflict(f"{decision.issue} already finalized by committee")
                if decision.rater in state.independent:
                    raise DecisionConflict(
                        f"{decision.rater} already labeled {decision.issue} independently"
                    )
                if len(state.independent) >= 2:
                    raise DecisionConflict(
                        f"{decision.issue} already has two independent labels"
                    )
                state.independent[decision.rater] = decision.label
            else:
                if not state.has_conflict:
                    raise DecisionConflict(
                        f"committee decision for {decision.issue} without a conflict"
                    )
                if decision.rater in state.independent:
                    raise DecisionConflict(
                        "committee rater must not be one of the independent raters"
                    )
                state.committee = (decision.rater, decision.label)
            self._append(
                {
                    "kind": "issue_type",
                    "issue": decision.issue,
                    "rater": decision.rater,
                    "label": decision.label,
                    "round": decision.round,
                    "decided_at": decision.decided_at.isoformat(),
                }
            )
            return state.has_conflict

    def final_issue_types(self) -> dict[str, str]:
        with self._lock:
            return {
                key: state.final_label
                for key, state in self.issue_types.items()
                if state.final_label is not None
            }

    def conflicts(self) -> list[str]:
        with self._lock:
            return sorted(k for k, s in self.issue_types.items() if s.has_conflict)


# -- queues and work items -----------------------------------------------------


EMPTY_QUEUE = {"empty": True}


@dataclass
class ValidationQueue:
    pending_links: list[str] = field(default_factory=list)  # commits
    pending_issues: list[str] = field(default_factory=list)  # issue keys
    conflicts: list[str] = field(default_factory=list)  # issue keys


def build_queue(
    store: ValidationStore,
    candidates: Iterable[LinkCandidate],
    issues: dict[str, Issue],
    bug_scope_only: bool = True,
) -> ValidationQueue:
    """Pending work: commits with undecided candidates, linked BUG-typed
    issues lacking two independent labels, and open label conflicts."""
    candidates = store.apply_to_candidates(list(candidates))
    pending_commits: set[str] = set()
    linked_issues: set[str] = set()
    for cand in candidates:
        if cand.validation != EXPERT_REJECTED:
            # an issue whose every link was rejected is not linked anymore
            linked_issues.add(cand.issue)
        if cand.validation == UNVALIDATED:
            pending_commits.add(cand.commit)
    pending_issues: set[str] = set()
    with store._lock:
        for key in linked_issues:
            issue = issues.get(key)
            if issue is None:
                continue
            if bug_scope_only and issue.original_type.upper() != "BUG":
                continue
            state = store.issue_types.get(key)
            if state is None or (len(state.independent) < 2 and state.committee is None):
                pending_issues.add(key)
    return ValidationQueue(
        pending_links=sorted(pending_commits),
        pending_issues=sorted(pending_issues),
        conflicts=store.conflicts(),
    )


def now_utc() -> datetime:
    return datetime.now(tz=timezone.utc)
