"""Line attribution over the change graph.

``last_touch`` answers, for lines of a file at a commit, which ancestor
commit last introduced or modified each line. The walk follows content:
a line moves to a parent when the diff against that parent leaves it
untouched, with rename tracking through the stored actions. At merges a
line may survive on several sides; the attribution then follows every
providing parent and the earlier resulting commit wins (tie-break by id).
Lines changed against every parent are attributed to the merge itself.
"""

from __future__ import annotations

from typing import Optional

from defectmine.vcs.model import ChangeGraph, FileAction, VcsError


def _action_for(graph: ChangeGraph, commit_id: str, parent: Optional[str], path: str) -> Optional[FileAction]:
    for a in graph.actions_for(commit_id, parent):
        if a.path_new == path:
            return a
    return None


def _map_new_to_old(line: int, action: FileAction) -> Optional[int]:
    """Map a post-image line number to the pre-image, or None if introduced."""
    offset = 0
    for h in action.hunks:
        if h.new_len > 0 and h.new_start <= line < h.new_start + h.new_len:
            return None
        applies_before = (
            h.new_start + h.new_len <= line if h.new_len > 0 else h.new_start < line
        )
        if applies_before:
            offset += h.old_len - h.new_len
    return line + offset


class Blamer:
    """Caches per-line attributions; safe to reuse across queries."""

    def __init__(self, graph: ChangeGraph):
        self.graph = graph
        self._memo: dict[tuple[str, str, int], str] = {}

    def attribute(self, commit_id: str, path: str, line: int) -> str:
        graph = self.graph
        cur, cur_path, cur_line = commit_id, path, line
        trail: list[tuple[str, str, int]] = []
        while True:
            key = (cur, cur_path, cur_line)
            if key in self._memo:
                writer = self._memo[key]
                break
            trail.append(key)
            commit = graph.commit(cur)
            providers: list[tuple[str, str, int]] = []
            introduced_everywhere = True
            for parent in commit.parents:
                action = _action_for(graph, cur, parent, cur_path)
                if action is None:
                    # parent diff does not touch the file: present unchanged,
                    # unless the file does not exist there at all
                    if cur_path in graph.tree_files(parent):
                        providers.append((parent, cur_path, cur_line))
                        introduced_everywhere = False
                    continue
                if action.kind == "added" or action.is_binary:
                    continue
                mapped = _map_new_to_old(cur_line, action)
                if mapped is None:
                    continue
                introduced_everywhere = False
                providers.append((parent, action.path_old, mapped))  # type: ignore[arg-type]
            if not commit.parents or introduced_everywhere or not providers:
                writer = cur
                break
            if len(providers) == 1:
                cur, cur_path, cur_line = providers[0]
                continue
            # merge with several providing sides: earlier writer wins
            candidates = [self.attribute(*p) for p in providers]
            writer = min(
                candidates,
                key=lambda cid: (graph.commit(cid).committer_date, cid),
            )
            break
        for key in trail:
            self._memo[key] = writer
        return writer


def last_touch(
    graph: ChangeGraph,
    commit_id: str,
    path: str,
    lines: set[int] | list[int] | tuple[int, ...],
    blamer: Optional[Blamer] = None,
) -> dict[int, str]:
    """Attribute each queried (1-based) line of ``path`` at ``commit_id``."""
    content = graph.file_lines(commit_id, path)  # validates path presence
    n = len(content)
    bad = [l for l in lines if l < 1 or l > n]
    if bad:
        raise VcsError(f"lines out of range for {path} at {commit_id}: {sorted(bad)[:5]}")
    b = blamer or Blamer(graph)
    return {l: b.attribute(commit_id, path, l) for l in lines}


def blame_old_lines(
    graph: ChangeGraph,
    action: FileAction,
    blamer: Optional[Blamer] = None,
) -> dict[int, str]:
    """Attribute the pre-image lines deleted/modified by an action.

    The action must come from a non-merge commit; attribution runs against
    the single parent's version of the file.
    """
    if action.parent is None:
        return {}
    lines = action.old_line_numbers()
    if not lines or action.is_binary or action.path_old is None:
        return {}
    b = blamer or Blamer(graph)
    return {l: b.attribute(action.parent, action.path_old, l) for l in sorted(lines)}


def file_lineage(
    graph: ChangeGraph, commit_id: str, path: str
) -> list[tuple[str, str, Optional[FileAction]]]:
    """Commits that shaped a file, walking back through providing parents.

    Returns (commit, path-at-commit, action-or-None) tuples, deduplicated,
    newest first. Only entries with an action actually changed the file.
    Walks every providing side of merges, stopping at (re-)additions.
    """
    out: list[tuple[str, str, Optional[FileAction]]] = []
    seen: set[tuple[str, str]] = set()
    stack: list[tuple[str, str]] = [(commit_id, path)]
    while stack:
        cur, cur_path = stack.pop()
        if (cur, cur_path) in seen:
            continue
        seen.add((cur, cur_path))
        commit = graph.commit(cur)
        if not commit.parents:
            out.append((cur, cur_path, _action_for(graph, cur, None, cur_path)))
            continue
        per_parent = {p: _action_for(graph, cur, p, cur_path) for p in commit.parents}
        providers: list[tuple[str, str]] = []
        for parent, a in per_parent.items():
            if a is None:
                if cur_path in graph.tree_files(parent):
                    providers.append((parent, cur_path))
            elif a.kind != "added" and a.path_old is not None:
                providers.append((parent, a.path_old))
        # the commit changed the file only if it differs from every parent
        changed_here = all(a is not None for a in per_parent.values()) or not providers
        action = next((a for a in per_parent.values() if a is not None), None)
        out.append((cur, cur_path, action if changed_here else None))
        if not providers:
            continue  # (re-)addition: lineage starts here
        stack.extend(providers)
    # newest first by committer date for stable consumption
    out.sort(key=lambda t: (graph.commit(t[0]).committer_date, t[0]), reverse=True)
    return out


def map_path_to_ancestor(
    graph: ChangeGraph, commit_id: str, path: str, ancestor_id: str
) -> Optional[str]:
    """Name of a file at an ancestor commit, following its rename lineage.

    Returns None when the file has no identity at the ancestor (added later,
    or renamed along a lineage that never passes the ancestor).
    """
    target_tree = graph.tree_files(ancestor_id)
    # fast path: same name still present
    lineage = file_lineage(graph, commit_id, path)
    for cid, name, _action in lineage:
        if cid == ancestor_id:
            return name if name in target_tree else None
    # lineage never visited the ancestor: use the name the file had at the
    # deepest lineage commit that is an ancestor of (or equal to) the target
    for cid, name, _action in lineage:
        if graph.is_ancestor_or_self(cid, ancestor_id):
            return name if name in target_tree else None
    return None
