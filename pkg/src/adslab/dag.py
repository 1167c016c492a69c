"""Longest weighted path in a directed acyclic graph."""
from __future__ import annotations

from collections import deque

import numpy as np


def topological_order(n_nodes: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Kahn's algorithm; ties are resolved by smallest node index.

    Raises ValueError when the edge set contains a cycle.
    """
    indeg = np.bincount(dst, minlength=n_nodes)
    order_e = np.lexsort((dst, src))
    src_s, dst_s = src[order_e], dst[order_e]
    start = np.searchsorted(src_s, np.arange(n_nodes + 1))
    queue = deque(int(i) for i in np.flatnonzero(indeg == 0))
    out = []
    indeg = indeg.copy()
    while queue:
        u = queue.popleft()
        out.append(u)
        for v in dst_s[start[u]:start[u + 1]]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(int(v))
    if len(out) != n_nodes:
        raise ValueError("graph has a cycle")
    return np.array(out, dtype=int)


def longest_path(n_nodes: int, src, dst, w, order=None):
    """Maximum-weight chain and its value.

    ``order`` may supply a known topological order (e.g. nodes sorted by a time
    coordinate).  Among equal-weight predecessors the smallest index wins, so
    the witness chain is reproducible.
    Returns (length, path as a list of node indices).
    """
    src = np.asarray(src, dtype=int)
    dst = np.asarray(dst, dtype=int)
    w = np.asarray(w, dtype=float)
    if n_nodes == 0:
        return 0.0, []
    if order is None:
        order = topological_order(n_nodes, src, dst)
    rank = np.empty(n_nodes, dtype=int)
    rank[order] = np.arange(n_nodes)
    if np.any(rank[src] >= rank[dst]):
        raise ValueError("supplied order is not topological for these edges")
    # incoming edges grouped by destination, predecessors in increasing index
    e = np.lexsort((src, dst))
    src_s, dst_s, w_s = src[e], dst[e], w[e]
    start = np.searchsorted(dst_s, np.arange(n_nodes + 1))
    best = np.zeros(n_nodes)
    pred = np.full(n_nodes, -1)
    for v in order:
        a, b = start[v], start[v + 1]
        if a == b:
            continue
        cand = best[src_s[a:b]] + w_s[a:b]
        k = int(np.argmax(cand))
        if cand[k] > best[v]:
            best[v] = cand[k]
            pred[v] = src_s[a + k]
    end = int(np.argmax(best))
    path = [end]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    return float(best[end]), path[::-1]
