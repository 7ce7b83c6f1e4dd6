"""Read a git repository into a :class:`ChangeGraph` via git plumbing commands.

One ``git log`` call collects metadata for all commits, one
``git diff-tree --stdin`` call produces the per-parent patches (zero context,
rename detection at 60% similarity). Merge commits get one action list per
parent; actions whose content does not reappear in the diff against every
other parent are flagged as merge-side duplicates of branch work.
"""

from __future__ import annotations

import json
import logging
import subprocess
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from defectmine.vcs.diffparse import parse_patch
from defectmine.vcs.model import ChangeGraph, Commit, FileAction, Hunk, SHA_RE, VcsError

log = logging.getLogger("defectmine.vcs")

RENAME_THRESHOLD = "-M60%"
CACHE_VERSION = 1


def _git(repo: Path, *args: str, stdin: Optional[str] = None) -> str:
    cmd = ["git", "-C", str(repo), *args]
    try:
        proc = subprocess.run(
            cmd,
            input=stdin,
            capture_output=True,
            text=True,
            encoding="utf-8",
            errors="replace",
            check=False,
        )
    except FileNotFoundError as exc:
        raise VcsError("git executable not found") from exc
    if proc.returncode != 0:
        raise VcsError(f"git {' '.join(args[:2])} failed: {proc.stderr.strip()[:500]}")
    return proc.stdout


def _list_refs(repo: Path, patterns: Sequence[str]) -> dict[str, str]:
    out = _git(
        repo,
        "for-each-ref",
        "--format=%(refname:short)%01%(objectname)%01%(*objectname)",
        *patterns,
    )
    refs: dict[str, str] = {}
    for line in out.splitlines():
        if not line:
            continue
        name, obj, peeled = line.split("\x01")
        refs[name] = peeled or obj
    return refs


def ingest_repository(repo_path: str | Path, heads: Optional[Sequence[str]] = None) -> ChangeGraph:
    """Load every commit reachable from the selected heads (default: all).

    Raises :class:`VcsError` for unreadable repositories or corrupt objects.
    """
    repo = Path(repo_path)
    if not repo.exists():
        raise VcsError(f"not a readable repository: {repo}")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except VcsError as exc:
        raise VcsError(f"not a readable git repository: {repo}: {exc}") from None

    all_heads = _list_refs(repo, ["refs/heads", "refs/remotes"])
    if heads:
        missing = [h for h in heads if h not in all_heads]
        if missing:
            raise VcsError(f"unknown heads: {', '.join(missing)}")
        selected = {h: all_heads[h] for h in heads}
    else:
        selected = all_heads
    tags = _list_refs(repo, ["refs/tags"])

    if not selected:
        return ChangeGraph({}, {}, tags, {})

    commits = _read_commits(repo, list(selected.values()))
    reach = _reachability(commits, selected)
    commits = {
        cid: Commit(
            id=c.id,
            parents=c.parents,
            author_date=c.author_date,
            committer_date=c.committer_date,
            author_name=c.author_name,
            author_email=c.author_email,
            message=c.message,
            branch_reachability=frozenset(reach.get(cid, ())),
        )
        for cid, c in commits.items()
    }
    actions = _read_actions(repo, commits)
    tags = {name: cid for name, cid in tags.items() if cid in commits}
    graph = ChangeGraph(commits, actions, tags, selected)
    log.info("ingested %d commits from %s", len(graph), repo)
    return graph


def _read_commits(repo: Path, tips: Sequence[str]) -> dict[str, Commit]:
    fmt = "%H\x01%P\x01%at\x01%ct\x01%an\x01%ae\x01%B"
    out = _git(repo, "log", "-z", f"--format={fmt}", *tips)
    commits: dict[str, Commit] = {}
    for record in out.split("\x00"):
        if not record.strip():
            continue
        parts = record.split("\x01", 6)
        if len(parts) != 7:
            raise VcsError(f"corrupt log record near {record[:60]!r}")
        cid, parents, at, ct, an, ae, message = parts
        cid = cid.strip()
        if not SHA_RE.match(cid):
            raise VcsError(f"corrupt object id {cid!r}")
        commits[cid] = Commit(
            id=cid,
            parents=tuple(p for p in parents.split() if p),
            author_date=datetime.fromtimestamp(int(at), tz=timezone.utc),
            committer_date=datetime.fromtimestamp(int(ct), tz=timezone.utc),
            author_name=an,
            author_email=ae,
            message=message,
        )
    return commits


def _reachability(commits: dict[str, Commit], heads: dict[str, str]) -> dict[str, set[str]]:
    reach: dict[str, set[str]] = {}
    for head_name, tip in heads.items():
        stack = [tip]
        seen: set[str] = set()
        while stack:
            cur = stack.pop()
            if cur in seen or cur not in commits:
                continue
            seen.add(cur)
            reach.setdefault(cur, set()).add(head_name)
            stack.extend(commits[cur].parents)
    return reach


def _read_actions(
    repo: Path, commits: dict[str, Commit]
) -> dict[str, dict[Optional[str], tuple[FileAction, ...]]]:
    # one stdin line per (commit, parent) pair; roots rely on --root
    requests: list[tuple[str, Optional[str]]] = []
    lines: list[str] = []
    for cid in sorted(commits):
        parents = commits[cid].parents
        if not parents:
            requests.append((cid, None))
            lines.append(cid)
        else:
            for p in parents:
                requests.append((cid, p))
                lines.append(f"{cid} {p}")
    out = _git(
        repo,
        "diff-tree",
        "--stdin",
        "-p",
        "-U0",
        RENAME_THRESHOLD,
        "-r",
        "--root",
        "--no-color",
        "--always",  # emit the header even for empty diffs
        stdin="\n".join(lines) + "\n",
    )

    # split the stream on bare commit-id header lines, in request order
    stanzas: list[str] = []
    current: list[str] = []
    started = False
    for line in out.split("\n"):
        if SHA_RE.match(line.strip()) and line.strip() in commits:
            if started:
                stanzas.append("\n".join(current))
            current = []
            started = True
        elif started:
            current.append(line)
    if started:
        stanzas.append("\n".join(current))
    if len(stanzas) != len(requests):
        raise VcsError(
            f"diff stream mismatch: expected {len(requests)} stanzas, got {len(stanzas)}"
        )

    actions: dict[str, dict[Optional[str], tuple[FileAction, ...]]] = {}
    for (cid, parent), stanza in zip(requests, stanzas):
        parsed = parse_patch(stanza, cid, parent)
        actions.setdefault(cid, {})[parent] = tuple(parsed)
    for cid, commit in commits.items():
        if commit.is_merge:
            actions[cid] = _flag_merge_duplicates(actions[cid])
    return actions


def _action_signature(action: FileAction) -> tuple:
    return (
        action.kind,
        action.path_old,
        action.path_new,
        tuple((h.old_lines, h.new_lines) for h in action.hunks),
    )


def _flag_merge_duplicates(
    per_parent: dict[Optional[str], tuple[FileAction, ...]]
) -> dict[Optional[str], tuple[FileAction, ...]]:
    """Mark actions not present in every parent diff as branch-work replays."""
    signatures = [
        {_action_signature(a) for a in acts} for acts in per_parent.values()
    ]
    in_all = set.intersection(*signatures) if signatures else set()
    flagged: dict[Optional[str], tuple[FileAction, ...]] = {}
    for parent, acts in per_parent.items():
        flagged[parent] = tuple(
            a
            if _action_signature(a) in in_all
            else FileAction(
                commit=a.commit,
                parent=a.parent,
                kind=a.kind,
                path_old=a.path_old,
                path_new=a.path_new,
                hunks=a.hunks,
                is_binary=a.is_binary,
                merge_duplicate=True,
            )
            for a in acts
        )
    return flagged


# -- cache serialization ----------------------------------------------------
#
# The cache is line-delimited JSON with a version header. Records appear in
# a deterministic order (commits sorted by id, actions per commit/parent),
# so identical graphs serialize byte-identically.


def save_graph(graph: ChangeGraph, path: str | Path) -> None:
    out = Path(path)
    with out.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "meta", "version": CACHE_VERSION}) + "\n")
        for name in sorted(graph.heads):
            fh.write(json.dumps({"kind": "head", "name": name, "commit": graph.heads[name]}) + "\n")
        for name in sorted(graph.release_tags):
            fh.write(
                json.dumps({"kind": "tag", "name": name, "commit": graph.release_tags[name]}) + "\n"
            )
        for cid in sorted(graph.commits):
            c = graph.commits[cid]
            fh.write(
                json.dumps(
                    {
                        "kind": "commit",
                        "id": c.id,
                        "parents": list(c.parents),
                        "author_date": int(c.author_date.timestamp()),
                        "committer_date": int(c.committer_date.timestamp()),
                        "author_name": c.author_name,
                        "author_email": c.author_email,
                        "message": c.message,
                        "branches": sorted(c.branch_reachability),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
        for cid in sorted(graph.actions):
            per_parent = graph.actions[cid]
            for parent in sorted(per_parent, key=lambda p: p or ""):
                for a in per_parent[parent]:
                    fh.write(
                        json.dumps(
                            {
                                "kind": "action",
                                "commit": a.commit,
                                "parent": a.parent,
                                "change": a.kind,
                                "path_old": a.path_old,
                                "path_new": a.path_new,
                                "binary": a.is_binary,
                                "merge_duplicate": a.merge_duplicate,
                                "hunks": [
                                    [h.old_start, h.old_len, h.new_start, h.new_len,
                                     list(h.old_lines), list(h.new_lines)]
                                    for h in a.hunks
                                ],
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )


def load_graph(path: str | Path) -> ChangeGraph:
    src = Path(path)
    commits: dict[str, Commit] = {}
    actions: dict[str, dict[Optional[str], list[FileAction]]] = {}
    tags: dict[str, str] = {}
    heads: dict[str, str] = {}
    with src.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "meta" or header.get("version") != CACHE_VERSION:
            raise VcsError(f"unsupported graph cache header: {header}")
        for line in fh:
            rec = json.loads(line)
            kind = rec["kind"]
            if kind == "commit":
                commits[rec["id"]] = Commit(
                    id=rec["id"],
                    parents=tuple(rec["parents"]),
                    author_date=datetime.fromtimestamp(rec["author_date"], tz=timezone.utc),
                    committer_date=datetime.fromtimestamp(rec["committer_date"], tz=timezone.utc),
                    author_name=rec["author_name"],
                    author_email=rec["author_email"],
                    message=rec["message"],
                    branch_reachability=frozenset(rec["branches"]),
                )
            elif kind == "action":
                hunks = tuple(
                    Hunk(h[0], h[1], h[2], h[3], tuple(h[4]), tuple(h[5]))
                    for h in rec["hunks"]
                )
                action = FileAction(
                    commit=rec["commit"],
                    parent=rec["parent"],
                    kind=rec["change"],
                    path_old=rec["path_old"],
                    path_new=rec["path_new"],
                    hunks=hunks,
                    is_binary=rec["binary"],
                    merge_duplicate=rec["merge_duplicate"],
                )
                actions.setdefault(rec["commit"], {}).setdefault(rec["parent"], []).append(action)
            elif kind == "tag":
                tags[rec["name"]] = rec["commit"]
            elif kind == "head":
                heads[rec["name"]] = rec["commit"]
            else:
                raise VcsError(f"unknown cache record kind {kind!r}")
    frozen = {
        cid: {parent: tuple(acts) for parent, acts in per.items()}
        for cid, per in actions.items()
    }
    # commits without any file change still need their (empty) action entry
    for cid, c in commits.items():
        per = frozen.setdefault(cid, {})
        if not c.parents:
            per.setdefault(None, ())
        for p in c.parents:
            per.setdefault(p, ())
    return ChangeGraph(commits, frozen, tags, heads)
