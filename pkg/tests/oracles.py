"""Independent oracle implementations used to cross-check the library.

These deliberately re-derive results by brute force (full-history forward
replay, DFS closures, exhaustive permutation enumeration) and share no code
with the implementations they check.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np
from scipy import stats as sps


def dfs_ancestors(graph, commit_id: str) -> set[str]:
    """Transitive parents via plain recursive DFS."""
    seen: set[str] = set()

    def visit(cid: str):
        for parent in graph.commits[cid].parents:
            if parent not in seen:
                seen.add(parent)
                visit(parent)

    visit(commit_id)
    return seen


def _map_new_to_old(line: int, hunks) -> int | None:
    offset = 0
    for h in hunks:
        if h.new_len > 0 and h.new_start <= line < h.new_start + h.new_len:
            return None
        before = h.new_start + h.new_len <= line if h.new_len > 0 else h.new_start < line
        if before:
            offset += h.old_len - h.new_len
    return line + offset


def replay_blame(graph) -> dict[str, dict[str, list[str]]]:
    """Replay every diff from the root, keeping a per-line writer annotation.

    Returns {commit: {path: [writer per line]}} for every commit. Content is
    built along first parents (complete tree deltas); at merges a line whose
    content survives on another parent inherits that parent's writer, and
    the earlier writer wins when several parents provide the line.
    """
    state: dict[str, dict[str, list[tuple[str, str]]]] = {}
    order = graph.topo_order()
    for cid in order:
        commit = graph.commits[cid]
        if not commit.parents:
            files: dict[str, list[tuple[str, str]]] = {}
            for action in graph.actions_for(cid, None):
                if action.is_binary:
                    continue
                lines = [l for h in action.hunks for l in h.new_lines]
                files[action.path_new] = [(text, cid) for text in lines]
            state[cid] = files
            continue
        first = commit.parents[0]
        files = {p: list(lines) for p, lines in state[first].items()}
        for action in graph.actions_for(cid, first):
            if action.is_binary:
                files.pop(action.path_old, None)
                if action.kind != "deleted":
                    files[action.path_new] = []
                continue
            if action.kind == "added":
                files[action.path_new] = [
                    (text, cid) for h in action.hunks for text in h.new_lines
                ]
                continue
            if action.kind == "deleted":
                files.pop(action.path_old, None)
                continue
            old = files.pop(action.path_old)
            new: list[tuple[str, str]] = []
            old_pos = 1
            for h in sorted(action.hunks, key=lambda h: (h.old_start, h.new_start)):
                until = h.old_start if h.old_len > 0 else h.old_start + 1
                while old_pos < until:
                    new.append(old[old_pos - 1])
                    old_pos += 1
                new.extend((text, cid) for text in h.new_lines)
                old_pos += h.old_len
            new.extend(old[old_pos - 1 :])
            files[action.path_new] = new
        if commit.is_merge:
            # inherit writers for lines that survive on other parents
            for path, annotated in files.items():
                for idx in range(len(annotated)):
                    text, writer = annotated[idx]
                    if writer != cid:
                        continue
                    line_no = idx + 1
                    candidates = []
                    for parent in commit.parents:
                        action = next(
                            (
                                a
                                for a in graph.actions_for(cid, parent)
                                if a.path_new == path
                            ),
                            None,
                        )
                        if action is None:
                            if path in state[parent] and line_no <= len(state[parent][path]):
                                candidates.append(state[parent][path][line_no - 1][1])
                            continue
                        if action.kind == "added" or action.is_binary:
                            continue
                        mapped = _map_new_to_old(line_no, action.hunks)
                        if mapped is None:
                            continue
                        src = state[parent].get(action.path_old)
                        if src is not None and mapped <= len(src):
                            candidates.append(src[mapped - 1][1])
                    if candidates:
                        best = min(
                            candidates,
                            key=lambda w: (graph.commits[w].committer_date, w),
                        )
                        annotated[idx] = (text, best)
        state[cid] = files
    return {
        cid: {path: [w for _t, w in lines] for path, lines in files.items()}
        for cid, files in state.items()
    }


def friedman_statistic_oracle(matrix) -> float:
    """Column-rank-sum formulation, independent of the library's version."""
    arr = np.asarray(matrix, dtype=float)
    n, k = arr.shape
    rank_sums = np.zeros(k)
    for row in arr:
        rank_sums += sps.rankdata(row)
    return float(12.0 / (n * k * (k + 1)) * np.sum(rank_sums**2) - 3.0 * n * (k + 1))


def friedman_exact_oracle(matrix) -> tuple[float, float]:
    """(statistic, exact p) by enumerating all within-row permutations."""
    arr = np.asarray(matrix, dtype=float)
    n, k = arr.shape
    observed = friedman_statistic_oracle(arr)
    perms = list(permutations(range(k)))
    hits = 0
    total = 0
    for combo in product(perms, repeat=n):
        permuted = np.vstack([arr[i, list(combo[i])] for i in range(n)])
        total += 1
        if friedman_statistic_oracle(permuted) >= observed - 1e-12:
            hits += 1
    return observed, hits / total


def gaussian_posterior_oracle(x, class_points, priors, epsilon):
    """Closed-form two-class Gaussian posterior for one feature."""
    import math

    likes = []
    for points, prior in zip(class_points, priors):
        mu = sum(points) / len(points)
        var = sum((p - mu) ** 2 for p in points) / len(points) + epsilon
        like = math.exp(-((x - mu) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        likes.append(like * prior)
    total = sum(likes)
    return [l / total for l in likes]
