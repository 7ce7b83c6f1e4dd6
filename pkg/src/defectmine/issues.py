"""Issue tracker data: typed issues from a line-delimited export or REST.

Export format (one JSON object per line, mirroring the tracker's REST
payload; unknown fields are preserved in ``extra``):

    {"key": "PROJ-12", "created": "2020-03-10T09:30:00+00:00",
     "type": "Bug", "assignee": "jdoe", "title": "...", "description": "...",
     "affected_versions": ["1.0.0"],
     "events": [{"at": "2020-03-11T08:00:00+00:00",
                 "status": "Resolved", "resolution": "Fixed"}],
     "comments": [{"author": "jdoe", "at": "...", "text": "..."}],
     "attachments": ["stacktrace.txt"],
     "severity": "Major"}

The REST client fetches Jira-style search pages and writes the same format,
so every downstream step can replay from the file.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

log = logging.getLogger("defectmine.issues")

KEY_RE = re.compile(r"^[A-Z][A-Z0-9_]*-[1-9][0-9]*$")

FIXED_RESOLUTIONS = {"FIXED"}
DONE_STATUSES = {"CLOSED", "RESOLVED"}


class IssueError(Exception):
    pass


_OFFSET_NO_COLON = re.compile(r"([+-]\d{2})(\d{2})$")


def parse_utc(value: str) -> datetime:
    """Parse an ISO-8601 timestamp (tracker variants included) as UTC."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    text = _OFFSET_NO_COLON.sub(r"\1:\2", text)  # Jira writes +0000
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class ResolutionEvent:
    at: datetime
    status: str
    resolution: Optional[str] = None


@dataclass(frozen=True)
class Comment:
    author: str
    at: datetime
    text: str


@dataclass(frozen=True)
class Issue:
    key: str
    reported_at: datetime
    original_type: str
    resolutions: tuple[ResolutionEvent, ...] = ()
    affected_versions: tuple[str, ...] = ()
    assignee: Optional[str] = None
    title: str = ""
    description: str = ""
    comments: tuple[Comment, ...] = ()
    attachments: tuple[str, ...] = ()
    severity: Optional[str] = None
    extra: tuple[tuple[str, str], ...] = ()  # unknown fields, JSON-encoded values

    def __post_init__(self):
        if not KEY_RE.match(self.key):
            raise IssueError(f"malformed issue key {self.key!r}")
        times = [e.at for e in self.resolutions]
        if times != sorted(times):
            raise IssueError(f"{self.key}: resolution events out of order")

    @property
    def number(self) -> int:
        return int(self.key.split("-", 1)[1])

    @property
    def project_key(self) -> str:
        return self.key.split("-", 1)[0]


@dataclass(frozen=True)
class VersionRelease:
    name: str
    released_at: Optional[datetime] = None
    release_commit: Optional[str] = None


def was_fixed_once(issue: Issue) -> bool:
    """True iff any resolution event resolved the issue as FIXED."""
    return any(
        (e.resolution or "").upper() in FIXED_RESOLUTIONS for e in issue.resolutions
    )


def was_closed_or_resolved(issue: Issue) -> bool:
    """True iff the issue was ever in a closed or resolved state."""
    return any(e.status.upper() in DONE_STATUSES for e in issue.resolutions)


_KNOWN_FIELDS = {
    "key",
    "created",
    "type",
    "assignee",
    "title",
    "description",
    "affected_versions",
    "events",
    "comments",
    "attachments",
    "severity",
}


def issue_from_record(rec: dict) -> Issue:
    events = tuple(
        sorted(
            (
                ResolutionEvent(
                    at=parse_utc(e["at"]),
                    status=str(e.get("status", "")),
                    resolution=e.get("resolution"),
                )
                for e in rec.get("events", [])
            ),
            key=lambda e: e.at,
        )
    )
    comments = tuple(
        Comment(author=str(c.get("author", "")), at=parse_utc(c["at"]), text=str(c.get("text", "")))
        for c in rec.get("comments", [])
    )
    extra = tuple(
        sorted((k, json.dumps(v, sort_keys=True)) for k, v in rec.items() if k not in _KNOWN_FIELDS)
    )
    return Issue(
        key=rec["key"],
        reported_at=parse_utc(rec["created"]),
        original_type=str(rec.get("type", "")),
        resolutions=events,
        affected_versions=tuple(rec.get("affected_versions", [])),
        assignee=rec.get("assignee"),
        title=str(rec.get("title", "")),
        description=str(rec.get("description", "")),
        comments=comments,
        attachments=tuple(rec.get("attachments", [])),
        severity=rec.get("severity"),
        extra=extra,
    )


def issue_to_record(issue: Issue) -> dict:
    rec = {
        "key": issue.key,
        "created": issue.reported_at.isoformat(),
        "type": issue.original_type,
        "assignee": issue.assignee,
        "title": issue.title,
        "description": issue.description,
        "affected_versions": list(issue.affected_versions),
        "events": [
            {"at": e.at.isoformat(), "status": e.status, "resolution": e.resolution}
            for e in issue.resolutions
        ],
        "comments": [
            {"author": c.author, "at": c.at.isoformat(), "text": c.text}
            for c in issue.comments
        ],
        "attachments": list(issue.attachments),
        "severity": issue.severity,
    }
    for k, v in issue.extra:
        rec[k] = json.loads(v)
    return rec


def read_export(path: str | Path, project_key: Optional[str] = None) -> list[Issue]:
    """Read a line-delimited export; malformed records are skipped and logged."""
    issues: list[Issue] = []
    skipped = 0
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                issue = issue_from_record(rec)
            except (ValueError, KeyError, IssueError) as exc:
                skipped += 1
                log.warning("skipping malformed record at line %d: %s", lineno, exc)
                continue
            if project_key and issue.project_key != project_key:
                continue
            issues.append(issue)
    if skipped:
        log.warning("skipped %d malformed records in %s", skipped, path)
    issues.sort(key=lambda i: i.number)
    return issues


def write_export(issues: Iterable[Issue], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for issue in sorted(issues, key=lambda i: i.number):
            fh.write(json.dumps(issue_to_record(issue), ensure_ascii=False, sort_keys=True) + "\n")


def ingest_issues(
    source: str | Path,
    project_key: str,
    fetch: Optional[Callable[[str, dict], dict]] = None,
) -> list[Issue]:
    """Load all issues of a project from a file path or an HTTP endpoint.

    ``source`` starting with http(s):// is treated as a Jira-style base URL
    and fetched through ``fetch_jira_issues``; anything else is an export
    file.
    """
    text = str(source)
    if text.startswith("http://") or text.startswith("https://"):
        return fetch_jira_issues(text, project_key, fetch=fetch)
    return read_export(source, project_key)


# -- REST client --------------------------------------------------------------


def _default_fetch(url: str, params: dict) -> dict:
    import requests

    resp = requests.get(url, params=params, timeout=60)
    resp.raise_for_status()
    return resp.json()


def _jira_issue_to_record(raw: dict) -> dict:
    fields = raw.get("fields", {})
    events = []
    for hist in raw.get("changelog", {}).get("histories", []):
        for item in hist.get("items", []):
            if item.get("field", "").lower() in ("status", "resolution"):
                events.append(
                    {
                        "at": hist["created"],
                        "status": item.get("toString") or ""
                        if item.get("field", "").lower() == "status"
                        else (fields.get("status", {}) or {}).get("name", ""),
                        "resolution": item.get("toString")
                        if item.get("field", "").lower() == "resolution"
                        else None,
                    }
                )
    assignee = (fields.get("assignee") or {}).get("name") or (
        fields.get("assignee") or {}
    ).get("displayName")
    return {
        "key": raw["key"],
        "created": fields.get("created"),
        "type": (fields.get("issuetype") or {}).get("name", ""),
        "assignee": assignee,
        "title": fields.get("summary", "") or "",
        "description": fields.get("description", "") or "",
        "affected_versions": [v.get("name", "") for v in fields.get("versions", []) or []],
        "events": events,
        "comments": [
            {
                "author": (c.get("author") or {}).get("name", ""),
                "at": c.get("created"),
                "text": c.get("body", ""),
            }
            for c in ((fields.get("comment") or {}).get("comments", []) or [])
        ],
        "attachments": [a.get("filename", "") for a in fields.get("attachment", []) or []],
        "severity": (fields.get("priority") or {}).get("name"),
    }


def fetch_jira_issues(
    base_url: str,
    project_key: str,
    fetch: Optional[Callable[[str, dict], dict]] = None,
    page_size: int = 100,
) -> list[Issue]:
    """Page through a Jira-style search endpoint and build typed issues."""
    fetch = fetch or _default_fetch
    url = base_url.rstrip("/") + "/rest/api/2/search"
    start = 0
    issues: list[Issue] = []
    while True:
        payload = fetch(
            url,
            {
                "jql": f"project={project_key} ORDER BY key ASC",
                "expand": "changelog",
                "fields": "*all",
                "startAt": start,
                "maxResults": page_size,
            },
        )
        batch = payload.get("issues", [])
        for raw in batch:
            try:
                issues.append(issue_from_record(_jira_issue_to_record(raw)))
            except (ValueError, KeyError, IssueError) as exc:
                log.warning("skipping malformed issue %s: %s", raw.get("key"), exc)
        start += len(batch)
        if start >= int(payload.get("total", 0)) or not batch:
            break
    issues.sort(key=lambda i: i.number)
    return issues


def resolve_affected_versions(
    issues: Iterable[Issue], releases: dict[str, VersionRelease]
) -> dict[str, list[str]]:
    """Map each issue to affected-version names with no known release.

    Nothing is dropped: every unresolved name is reported back to the caller.
    """
    unresolved: dict[str, list[str]] = {}
    for issue in issues:
        missing = [v for v in issue.affected_versions if v not in releases]
        if missing:
            unresolved[issue.key] = missing
    return unresolved
