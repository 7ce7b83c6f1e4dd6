"""HTTP API for the validation workflow.

Endpoints (all require the ``X-Session-Token`` header):

    GET  /queues/links?rater=R            pending link-triage commits
    GET  /queues/issues?rater=R           pending issue-type items
    GET  /queues/conflicts?rater=R        committee items
    GET  /items/{id}?rater=R              full context for one work item
    POST /decisions/link                  {commit, issue, rater, verdict}
    POST /decisions/issue-type            {issue, rater, label, round}

Item ids are ``link:<commit>``, ``issue:<KEY>``, ``conflict:<KEY>``. The
queue endpoints skip items the rater already decided; in the independent
round no other rater's label is ever exposed, committee items show the two
labels without rater identities.
"""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from pydantic import BaseModel

from defectmine.issues import Issue
from defectmine.links import UNVALIDATED, LinkCandidate
from defectmine.validation import (
    DecisionConflict,
    DecisionInvalid,
    IssueTypeDecision,
    LinkDecision,
    ValidationStore,
    build_queue,
    now_utc,
)
from defectmine.vcs.model import ChangeGraph

log = logging.getLogger("defectmine.service")


class LinkDecisionBody(BaseModel):
    commit: str
    issue: str
    rater: str
    verdict: str


class IssueTypeBody(BaseModel):
    issue: str
    rater: str
    label: str
    round: str


class ValidationService:
    def __init__(
        self,
        store: ValidationStore,
        graph: ChangeGraph,
        issues: dict[str, Issue],
        candidates: list[LinkCandidate],
        token: str,
    ):
        self.store = store
        self.graph = graph
        self.issues = issues
        self.candidates = candidates
        self.token = token
        self.known_pairs = {(c.commit, c.issue) for c in candidates}

    # -- queue views -------------------------------------------------------

    def pending_link_commits(self, rater: Optional[str]) -> list[str]:
        queue = build_queue(self.store, self.candidates, self.issues)
        if not rater:
            return queue.pending_links
        decided = {
            (c, i) for (c, i), d in self.store.link_decisions.items() if d.rater == rater
        }
        out = []
        for commit in queue.pending_links:
            pairs = {
                (c.commit, c.issue)
                for c in self.store.apply_to_candidates(self.candidates)
                if c.commit == commit and c.validation == UNVALIDATED
            }
            if pairs - decided:
                out.append(commit)
        return out

    def pending_issue_keys(self, rater: Optional[str]) -> list[str]:
        queue = build_queue(self.store, self.candidates, self.issues)
        if not rater:
            return queue.pending_issues
        out = []
        for key in queue.pending_issues:
            state = self.store.issue_types.get(key)
            if state is not None and rater in state.independent:
                continue
            out.append(key)
        return out

    def conflict_keys(self, rater: Optional[str]) -> list[str]:
        out = []
        for key in self.store.conflicts():
            state = self.store.issue_types.get(key)
            if rater and state is not None and rater in state.independent:
                continue  # committee must include a rater who did not label
            out.append(key)
        return out

    # -- item context --------------------------------------------------------

    def _commit_context(self, commit_id: str) -> dict:
        commit = self.graph.commit(commit_id)
        files = []
        for action in self.graph.first_parent_actions(commit_id):
            preview = []
            for h in action.hunks[:3]:
                preview.append(
                    f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@"
                )
                preview += [f"-{l}" for l in h.old_lines[:5]]
                preview += [f"+{l}" for l in h.new_lines[:5]]
            files.append(
                {
                    "path": action.path,
                    "kind": action.kind,
                    "added": sum(h.new_len for h in action.hunks),
                    "deleted": sum(h.old_len for h in action.hunks),
                    "preview": preview,
                }
            )
        return {
            "id": commit.id,
            "message": commit.message,
            "author": commit.author_name,
            "date": commit.committer_date.isoformat(),
            "files": files,
        }

    def _issue_context(self, key: str) -> dict:
        issue = self.issues.get(key)
        if issue is None:
            raise HTTPException(status_code=404, detail=f"unknown issue {key}")
        return {
            "key": issue.key,
            "type": issue.original_type,
            "title": issue.title,
            "description": issue.description,
            "comments": [
                {"author": c.author, "at": c.at.isoformat(), "text": c.text}
                for c in issue.comments
            ],
        }

    def link_item(self, commit_id: str, rater: Optional[str]) -> dict:
        cands = [
            c
            for c in self.store.apply_to_candidates(self.candidates)
            if c.commit == commit_id
        ]
        if not cands:
            raise HTTPException(status_code=404, detail=f"no candidates for {commit_id}")
        pending = [c for c in cands if c.validation == UNVALIDATED]
        if not pending:
            raise HTTPException(status_code=409, detail="item already decided")
        return {
            "id": f"link:{commit_id}",
            "kind": "link",
            "commit": self._commit_context(commit_id),
            "candidates": [
                {
                    "issue": c.issue,
                    "detector": c.detector,
                    "matched_text": c.matched_text,
                    "at_message_start": c.at_message_start,
                    "context": self._issue_context(c.issue) if c.issue in self.issues else None,
                }
                for c in sorted(pending, key=lambda c: c.issue)
            ],
            "verdicts": ["addressed", "mentioned_only", "wrong"],
        }

    def next_item(self, kind: str, rater: Optional[str]) -> dict:
        """The first work item the rater may decide, or an empty marker."""
        if kind == "links":
            pending = self.pending_link_commits(rater)
            if not pending:
                return {"empty": True, "kind": kind}
            return self.link_item(pending[0], rater)
        if kind == "issues":
            pending = self.pending_issue_keys(rater)
            if not pending:
                return {"empty": True, "kind": kind}
            return self.issue_item(pending[0], rater, committee=False)
        if kind == "conflicts":
            pending = self.conflict_keys(rater)
            if not pending:
                return {"empty": True, "kind": kind}
            return self.issue_item(pending[0], rater, committee=True)
        raise HTTPException(status_code=404, detail=f"unknown queue {kind!r}")

    def issue_item(self, key: str, rater: Optional[str], committee: bool) -> dict:
        state = self.store.issue_types.get(key)
        context = self._issue_context(key)
        linked_commits = sorted({c.commit for c in self.candidates if c.issue == key})
        body = {
            "id": (f"conflict:{key}" if committee else f"issue:{key}"),
            "kind": "conflict" if committee else "issue",
            "issue": context,
            "linked_commits": [self._commit_context(c) for c in linked_commits],
            "labels": ["BUG", "IMPROVEMENT", "TEST", "DOC", "OTHER"],
            "round": "committee" if committee else "independent",
        }
        if committee:
            if state is None or not state.has_conflict:
                raise HTTPException(status_code=409, detail="no open conflict for this issue")
            if rater and rater in state.independent:
                raise HTTPException(
                    status_code=403, detail="committee rater must not have labeled this issue"
                )
            # blinded: the two labels, sorted, with no rater attribution
            body["blinded_labels"] = sorted(state.independent.values())
            body["guidance"] = (
                "innocent unless proven guilty: when in doubt, keep the BUG label"
            )
        else:
            if state is not None and rater and rater in state.independent:
                raise HTTPException(status_code=409, detail="already labeled by this rater")
            # independent round: no other rater's label is disclosed
        return body


def create_app(service: ValidationService, allow_reset: bool = False) -> FastAPI:
    """Build the API app. ``allow_reset`` additionally mounts a token-guarded
    POST /admin/reset that swaps in a fresh in-memory store (test hook, off
    by default and absent from the documented surface)."""
    app = FastAPI(title="defectmine validation", docs_url=None, redoc_url=None)

    def check_token(x_session_token: str = Header(default="")) -> str:
        if x_session_token != service.token:
            raise HTTPException(status_code=401, detail="bad or missing session token")
        return x_session_token

    @app.get("/queues/links")
    def queue_links(rater: Optional[str] = Query(default=None), _=Depends(check_token)):
        items = service.pending_link_commits(rater)
        return {"kind": "links", "items": [f"link:{c}" for c in items], "count": len(items)}

    @app.get("/queues/issues")
    def queue_issues(rater: Optional[str] = Query(default=None), _=Depends(check_token)):
        items = service.pending_issue_keys(rater)
        return {"kind": "issues", "items": [f"issue:{k}" for k in items], "count": len(items)}

    @app.get("/queues/conflicts")
    def queue_conflicts(rater: Optional[str] = Query(default=None), _=Depends(check_token)):
        items = service.conflict_keys(rater)
        return {
            "kind": "conflicts",
            "items": [f"conflict:{k}" for k in items],
            "count": len(items),
        }

    @app.get("/queues/{kind}/next")
    def queue_next(kind: str, rater: Optional[str] = Query(default=None), _=Depends(check_token)):
        return service.next_item(kind, rater)

    @app.get("/items/{item_id}")
    def get_item(item_id: str, rater: Optional[str] = Query(default=None), _=Depends(check_token)):
        if item_id.startswith("link:"):
            return service.link_item(item_id[len("link:"):], rater)
        if item_id.startswith("issue:"):
            return service.issue_item(item_id[len("issue:"):], rater, committee=False)
        if item_id.startswith("conflict:"):
            return service.issue_item(item_id[len("conflict:"):], rater, committee=True)
        raise HTTPException(status_code=404, detail=f"unknown item id {item_id!r}")

    @app.post("/decisions/link")
    def post_link(body: LinkDecisionBody, _=Depends(check_token)):
        try:
            service.store.record_link_decision(
                LinkDecision(
                    commit=body.commit,
                    issue=body.issue,
                    rater=body.rater,
                    verdict=body.verdict,
                    decided_at=now_utc(),
                ),
                known_pairs=service.known_pairs,
            )
        except DecisionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except DecisionInvalid as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"status": "recorded", "commit": body.commit, "issue": body.issue}

    @app.post("/decisions/issue-type")
    def post_issue_type(body: IssueTypeBody, _=Depends(check_token)):
        try:
            conflict = service.store.record_issue_type(
                IssueTypeDecision(
                    issue=body.issue,
                    rater=body.rater,
                    label=body.label,
                    round=body.round,
                    decided_at=now_utc(),
                )
            )
        except DecisionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except DecisionInvalid as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"status": "recorded", "issue": body.issue, "conflict": conflict}

    @app.get("/health")
    def health():
        return {"status": "ok"}

    if allow_reset:
        @app.post("/admin/reset")
        def reset(_=Depends(check_token)):
            service.store = ValidationStore()
            return {"status": "reset"}

    return app
