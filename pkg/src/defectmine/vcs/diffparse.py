"""Parser for git patch output (``diff-tree -p -U0``) into file actions.

Only the subset git actually emits is handled: git-style headers, optional
mode/rename/similarity lines, zero-context hunks, and binary markers.
"""

from __future__ import annotations

import re
from typing import Optional

from defectmine.vcs.model import FileAction, Hunk, VcsError

DIFF_HEADER = re.compile(r'^diff --git (?:"a/(?P<qa>.*)"|a/(?P<a>.*?)) (?:"b/(?P<qb>.*)"|b/(?P<b>.*))$')
HUNK_HEADER = re.compile(
    r"^@@ -(?P<os>\d+)(?:,(?P<ol>\d+))? \+(?P<ns>\d+)(?:,(?P<nl>\d+))? @@"
)
RENAME_FROM = re.compile(r"^rename from (?P<p>.*)$")
RENAME_TO = re.compile(r"^rename to (?P<p>.*)$")
COPY_FROM = re.compile(r"^copy from (?P<p>.*)$")
COPY_TO = re.compile(r"^copy to (?P<p>.*)$")
BINARY_LINE = re.compile(r"^Binary files .* differ$")

_OCTAL_ESCAPE = re.compile(r"\\([0-7]{3})")


def _unquote(path: str) -> str:
    """Undo git's C-style path quoting (only used for unusual characters)."""
    path = _OCTAL_ESCAPE.sub(lambda m: chr(int(m.group(1), 8)), path)
    return (
        path.replace("\\t", "\t")
        .replace("\\n", "\n")
        .replace('\\"', '"')
        .replace("\\\\", "\\")
    )


def _maybe_unquote(path: str) -> str:
    if path.startswith('"') and path.endswith('"'):
        return _unquote(path[1:-1])
    return path


class _FileState:
    def __init__(self, path_a: str, path_b: str):
        self.path_a = path_a
        self.path_b = path_b
        self.new_file = False
        self.deleted_file = False
        self.rename_from: Optional[str] = None
        self.rename_to: Optional[str] = None
        self.binary = False
        self.hunks: list[Hunk] = []

    def to_action(self, commit: str, parent: Optional[str]) -> FileAction:
        if self.new_file:
            kind, path_old, path_new = "added", None, self.path_b
        elif self.deleted_file:
            kind, path_old, path_new = "deleted", self.path_a, None
        elif self.rename_from is not None:
            kind, path_old, path_new = "renamed", self.rename_from, self.rename_to
        else:
            kind, path_old, path_new = "modified", self.path_a, self.path_b
        return FileAction(
            commit=commit,
            parent=parent,
            kind=kind,
            path_old=path_old,
            path_new=path_new,
            hunks=tuple(self.hunks),
            is_binary=self.binary,
        )


def parse_patch(text: str, commit: str, parent: Optional[str]) -> list[FileAction]:
    """Parse one commit/parent patch into a list of file actions."""
    actions: list[FileAction] = []
    state: Optional[_FileState] = None
    cur_hunk: Optional[dict] = None

    def flush_hunk():
        nonlocal cur_hunk
        if cur_hunk is None:
            return
        if state is None:
            raise VcsError("hunk outside of a file diff")
        state.hunks.append(
            Hunk(
                old_start=cur_hunk["os"],
                old_len=cur_hunk["ol"],
                new_start=cur_hunk["ns"],
                new_len=cur_hunk["nl"],
                old_lines=tuple(cur_hunk["old"]),
                new_lines=tuple(cur_hunk["new"]),
            )
        )
        cur_hunk = None

    def flush_file():
        nonlocal state
        flush_hunk()
        if state is not None:
            actions.append(state.to_action(commit, parent))
            state = None

    for line in text.split("\n"):
        m = DIFF_HEADER.match(line)
        if m:
            flush_file()
            a = m.group("a") if m.group("a") is not None else _unquote(m.group("qa"))
            b = m.group("b") if m.group("b") is not None else _unquote(m.group("qb"))
            state = _FileState(a, b)
            continue
        if state is None:
            if line.strip():
                raise VcsError(f"unexpected diff line outside file: {line!r}")
            continue
        h = HUNK_HEADER.match(line)
        if h:
            flush_hunk()
            cur_hunk = {
                "os": int(h.group("os")),
                "ol": int(h.group("ol")) if h.group("ol") is not None else 1,
                "ns": int(h.group("ns")),
                "nl": int(h.group("nl")) if h.group("nl") is not None else 1,
                "old": [],
                "new": [],
            }
            continue
        if cur_hunk is not None:
            if line.startswith("-"):
                cur_hunk["old"].append(line[1:])
                continue
            if line.startswith("+"):
                cur_hunk["new"].append(line[1:])
                continue
            if line.startswith("\\"):  # "\ No newline at end of file"
                continue
            # anything else terminates the hunk section of this file
            flush_hunk()
        if line.startswith("new file mode"):
            state.new_file = True
        elif line.startswith("deleted file mode"):
            state.deleted_file = True
        else:
            m = RENAME_FROM.match(line)
            if m:
                state.rename_from = _maybe_unquote(m.group("p"))
                continue
            m = RENAME_TO.match(line)
            if m:
                state.rename_to = _maybe_unquote(m.group("p"))
                continue
            m = COPY_FROM.match(line)
            if m:
                # copies keep the source file; treat the target as an addition
                state.new_file = True
                continue
            if COPY_TO.match(line):
                continue
            if BINARY_LINE.match(line) or line.startswith("GIT binary patch"):
                state.binary = True
            # index/mode/---/+++ and blank lines carry no extra information
    flush_file()
    return actions
