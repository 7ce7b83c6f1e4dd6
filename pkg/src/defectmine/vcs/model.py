"""Domain model for the change graph.

The graph is built once by :mod:`defectmine.vcs.ingest` and never mutated
afterwards, so it can be shared freely between threads. Trees and file
contents are reconstructed from the stored diffs (diff against the first
parent is a complete tree-to-tree delta), which keeps cached graphs usable
without the original repository.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import lru_cache
from typing import Iterable, Optional

SHA_RE = re.compile(r"^[0-9a-f]{40}$")


class VcsError(Exception):
    """Raised for unreadable repositories, corrupt objects, or bad queries."""


@dataclass(frozen=True)
class Hunk:
    """One unified-diff hunk with zero context lines."""

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    old_lines: tuple[str, ...] = ()
    new_lines: tuple[str, ...] = ()

    def __post_init__(self):
        if self.old_len != len(self.old_lines) or self.new_len != len(self.new_lines):
            raise VcsError(
                f"hunk length mismatch: -{self.old_start},{self.old_len} "
                f"+{self.new_start},{self.new_len}"
            )

    @property
    def old_range(self) -> range:
        return range(self.old_start, self.old_start + self.old_len)

    @property
    def new_range(self) -> range:
        return range(self.new_start, self.new_start + self.new_len)


@dataclass(frozen=True)
class FileAction:
    """A change to one file in one commit, diffed against one parent."""

    commit: str
    parent: Optional[str]
    kind: str  # added | modified | deleted | renamed
    path_old: Optional[str]
    path_new: Optional[str]
    hunks: tuple[Hunk, ...] = ()
    is_binary: bool = False
    # set on merge-side actions that replay work already attributed to
    # branch commits (present in this parent diff but not in all of them)
    merge_duplicate: bool = False

    @property
    def path(self) -> str:
        """The post-image path, falling back to the pre-image for deletions."""
        return self.path_new if self.path_new is not None else self.path_old  # type: ignore[return-value]

    @property
    def blame_path(self) -> Optional[str]:
        """The pre-image path, i.e. where old-side lines live."""
        return self.path_old

    def old_line_numbers(self) -> set[int]:
        lines: set[int] = set()
        for h in self.hunks:
            lines.update(h.old_range)
        return lines

    def line_delta(self) -> int:
        return sum(h.new_len - h.old_len for h in self.hunks)


@dataclass(frozen=True)
class Commit:
    id: str
    parents: tuple[str, ...]
    author_date: datetime
    committer_date: datetime
    author_name: str
    author_email: str
    message: str
    branch_reachability: frozenset[str] = frozenset()

    @property
    def is_merge(self) -> bool:
        return len(self.parents) > 1


def _utc(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


class ChangeGraph:
    """All commits reachable from the selected heads, with per-parent diffs.

    ``actions[commit][parent]`` holds the diff of ``commit`` against that
    parent (parent ``None`` for root commits). Non-merge commits have exactly
    one entry; merge commits one per parent.
    """

    def __init__(
        self,
        commits: dict[str, Commit],
        actions: dict[str, dict[Optional[str], tuple[FileAction, ...]]],
        release_tags: dict[str, str],
        heads: dict[str, str],
    ):
        self.commits = commits
        self.actions = actions
        self.release_tags = release_tags
        self.heads = heads
        self._validate()
        self._topo: Optional[list[str]] = None
        self._trees: dict[str, frozenset[str]] = {}
        self._content_cache: dict[tuple[str, str], Optional[tuple[str, ...]]] = {}

    def _validate(self):
        for cid, commit in self.commits.items():
            for p in commit.parents:
                if p not in self.commits:
                    raise VcsError(f"commit {cid} references unknown parent {p}")
        for cid in self.actions:
            if cid not in self.commits:
                raise VcsError(f"actions recorded for unknown commit {cid}")

    def __len__(self) -> int:
        return len(self.commits)

    def commit(self, commit_id: str) -> Commit:
        try:
            return self.commits[commit_id]
        except KeyError:
            raise VcsError(f"unknown commit {commit_id}") from None

    def actions_for(self, commit_id: str, parent: Optional[str] = None) -> tuple[FileAction, ...]:
        """Actions of a commit against one parent (default: first parent)."""
        per_parent = self.actions.get(commit_id, {})
        if parent is None:
            c = self.commit(commit_id)
            parent = c.parents[0] if c.parents else None
        return per_parent.get(parent, ())

    def first_parent_actions(self, commit_id: str) -> tuple[FileAction, ...]:
        return self.actions_for(commit_id)

    # -- graph traversal ---------------------------------------------------

    def ancestors(self, commit_id: str) -> set[str]:
        """Transitive parent closure, excluding the commit itself."""
        self.commit(commit_id)
        seen: set[str] = set()
        stack = list(self.commits[commit_id].parents)
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.commits[cur].parents)
        return seen

    @lru_cache(maxsize=None)
    def ancestors_frozen(self, commit_id: str) -> frozenset[str]:
        return frozenset(self.ancestors(commit_id))

    def is_ancestor_or_self(self, candidate: str, of: str) -> bool:
        return candidate == of or candidate in self.ancestors_frozen(of)

    def topo_order(self) -> list[str]:
        """Parents-before-children order (Kahn), ties broken by commit id."""
        if self._topo is not None:
            return self._topo
        children: dict[str, list[str]] = {cid: [] for cid in self.commits}
        indeg = {cid: len(c.parents) for cid, c in self.commits.items()}
        for cid, c in self.commits.items():
            for p in c.parents:
                children[p].append(cid)
        ready = sorted(cid for cid, d in indeg.items() if d == 0)
        order: list[str] = []
        while ready:
            cur = ready.pop(0)
            order.append(cur)
            fresh = []
            for ch in children[cur]:
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    fresh.append(ch)
            if fresh:
                ready = sorted(ready + fresh)
        if len(order) != len(self.commits):
            raise VcsError("commit graph contains a cycle")
        self._topo = order
        return order

    # -- tree and content replay -------------------------------------------

    def tree_files(self, commit_id: str) -> frozenset[str]:
        """All paths present at a commit, replayed along first parents."""
        if commit_id in self._trees:
            return self._trees[commit_id]
        self.commit(commit_id)
        # resolve the first-parent chain that still needs computing
        chain = []
        cur: Optional[str] = commit_id
        while cur is not None and cur not in self._trees:
            chain.append(cur)
            parents = self.commits[cur].parents
            cur = parents[0] if parents else None
        base: set[str] = set(self._trees.get(cur, frozenset())) if cur else set()
        for cid in reversed(chain):
            for action in self.first_parent_actions(cid):
                if action.kind == "added":
                    base.add(action.path_new)  # type: ignore[arg-type]
                elif action.kind == "deleted":
                    base.discard(action.path_old)  # type: ignore[arg-type]
                elif action.kind == "renamed":
                    base.discard(action.path_old)  # type: ignore[arg-type]
                    base.add(action.path_new)  # type: ignore[arg-type]
            self._trees[cid] = frozenset(base)
        return self._trees[commit_id]

    def file_lines(self, commit_id: str, path: str) -> tuple[str, ...]:
        """Reconstruct file content (as lines) by replaying stored hunks."""
        lines = self._file_lines_or_none(commit_id, path)
        if lines is None:
            raise VcsError(f"{path} is binary at {commit_id}; no line content")
        return lines

    def _file_lines_or_none(self, commit_id: str, path: str) -> Optional[tuple[str, ...]]:
        key = (commit_id, path)
        if key in self._content_cache:
            return self._content_cache[key]
        if path not in self.tree_files(commit_id):
            raise VcsError(f"path {path} not in tree of {commit_id}")
        # walk back along first parents to the action that last wrote the path
        trail: list[tuple[str, str, Optional[FileAction]]] = []
        cur, cur_path = commit_id, path
        base: Optional[tuple[str, ...]] = ()
        while True:
            ck = (cur, cur_path)
            if ck in self._content_cache:
                base = self._content_cache[ck]
                break
            action = None
            for a in self.first_parent_actions(cur):
                if a.path_new == cur_path:
                    action = a
                    break
            trail.append((cur, cur_path, action))
            if action is not None:
                if action.is_binary:
                    base = None
                    break
                if action.kind == "added":
                    base = ()
                    break
                cur = self.commits[cur].parents[0]
                cur_path = action.path_old  # type: ignore[assignment]
            else:
                parents = self.commits[cur].parents
                if not parents:
                    raise VcsError(f"path {cur_path} unaccounted for at root {cur}")
                cur = parents[0]
        if base is None:
            for tcid, tpath, _ in trail:
                self._content_cache[(tcid, tpath)] = None
            return None
        content = base
        for tcid, tpath, taction in reversed(trail):
            if taction is not None:
                content = _apply_hunks(content, taction.hunks)
            self._content_cache[(tcid, tpath)] = content
        return content

    # -- convenience ---------------------------------------------------------

    def resolve_tag(self, name: str) -> Optional[str]:
        return self.release_tags.get(name)

    def commits_sorted(self) -> list[Commit]:
        return sorted(self.commits.values(), key=lambda c: (c.committer_date, c.id))


def _apply_hunks(old: tuple[str, ...], hunks: Iterable[Hunk]) -> tuple[str, ...]:
    """Apply zero-context hunks to a line list (1-based hunk coordinates)."""
    new: list[str] = []
    old_pos = 1  # next unconsumed old line
    for h in sorted(hunks, key=lambda h: (h.old_start, h.new_start)):
        # for pure insertions old_start is the line BEFORE the insertion point
        copy_until = h.old_start if h.old_len > 0 else h.old_start + 1
        while old_pos < copy_until:
            new.append(old[old_pos - 1])
            old_pos += 1
        new.extend(h.new_lines)
        old_pos += h.old_len
    new.extend(old[old_pos - 1 :])
    return tuple(new)
