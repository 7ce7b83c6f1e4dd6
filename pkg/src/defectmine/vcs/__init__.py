"""Git history as an immutable change graph: commits, file actions, hunks, blame."""

from defectmine.vcs.model import ChangeGraph, Commit, FileAction, Hunk
from defectmine.vcs.ingest import ingest_repository, load_graph, save_graph
from defectmine.vcs.blame import last_touch, map_path_to_ancestor

__all__ = [
    "ChangeGraph",
    "Commit",
    "FileAction",
    "Hunk",
    "ingest_repository",
    "load_graph",
    "save_graph",
    "last_touch",
    "map_path_to_ancestor",
]
