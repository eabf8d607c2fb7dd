"""Capped vertex and edge connectivity via unit-capacity max-flow.

Connectivity values are only needed up to a small cap (k_max <= 5), so the
computation short-circuits through progressively cheaper certificates:

* disconnected -> 0 (component scan),
* an articulation point / bridge -> 1 (one linear DFS pass),
* min degree bounds everything from above (kappa <= lambda <= delta),
* only the remaining 3..k_max band is resolved by max-flow, using the
  Esfahanian-Hakimi candidate reduction for kappa (flows from a minimum
  degree vertex to its non-neighbours plus flows between non-adjacent
  neighbour pairs) and fixed-source flows to every other vertex for
  lambda, with early exit once the running bound hits the certified floor.

Flows run on scipy's C max-flow over a vertex-split digraph (kappa) or a
two-arcs-per-edge digraph (lambda).
"""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow


def adjacency_lists(n: int, ei: np.ndarray, ej: np.ndarray) -> list[np.ndarray]:
    """Neighbour arrays per vertex from an undirected edge list."""
    src = np.concatenate([ei, ej])
    dst = np.concatenate([ej, ei])
    order = np.argsort(src, kind="stable")
    src_s, dst_s = src[order], dst[order]
    starts = np.searchsorted(src_s, np.arange(n + 1))
    return [dst_s[starts[i]:starts[i + 1]] for i in range(n)]


def is_connected(n: int, adj: list[np.ndarray]) -> bool:
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(int(w))
    return count == n


def cut_structure(n: int, adj: list[np.ndarray]) -> tuple[bool, bool]:
    """(has articulation point, has bridge) of a connected graph, n >= 2.

    One iterative DFS lowlink pass.
    """
    disc = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    has_art = has_bridge = False
    disc[0] = low[0] = 0
    timer = 1
    root_children = 0
    stack = [(0, iter(adj[0]))]
    while stack:
        u, it = stack[-1]
        w = next(it, None)
        if w is None:
            stack.pop()
            if stack:
                p = stack[-1][0]
                if low[u] < low[p]:
                    low[p] = low[u]
                if low[u] > disc[p]:
                    has_bridge = True
                if p != 0 and low[u] >= disc[p]:
                    has_art = True
        elif disc[w] == -1:
            parent[w] = u
            disc[w] = low[w] = timer
            timer += 1
            if u == 0:
                root_children += 1
            stack.append((int(w), iter(adj[w])))
        elif w != parent[u]:
            if disc[w] < low[u]:
                low[u] = disc[w]
    if root_children > 1:
        has_art = True
    return has_art, has_bridge


def _vertex_split_digraph(n: int, ei: np.ndarray, ej: np.ndarray) -> csr_matrix:
    # node v -> v_in = v, v_out = v + n; internal arc cap 1, edge arcs cap n
    rows = np.concatenate([np.arange(n), ei + n, ej + n])
    cols = np.concatenate([np.arange(n) + n, ej, ei])
    caps = np.concatenate(
        [np.ones(n, dtype=np.int32), np.full(2 * len(ei), n, dtype=np.int32)]
    )
    return csr_matrix((caps, (rows, cols)), shape=(2 * n, 2 * n))


def _edge_digraph(n: int, ei: np.ndarray, ej: np.ndarray) -> csr_matrix:
    rows = np.concatenate([ei, ej])
    cols = np.concatenate([ej, ei])
    caps = np.ones(2 * len(ei), dtype=np.int32)
    return csr_matrix((caps, (rows, cols)), shape=(n, n))


def _maximal_independent_set(n: int, adj: list[np.ndarray]) -> list[int]:
    """Greedy maximal independent set in fixed vertex order (hence dominating)."""
    blocked = np.zeros(n, dtype=bool)
    chosen = []
    for v in range(n):
        if not blocked[v]:
            chosen.append(v)
            blocked[v] = True
            blocked[adj[v]] = True
    return chosen


def vertex_connectivity_capped(
    n: int,
    ei: np.ndarray,
    ej: np.ndarray,
    adj: list[np.ndarray],
    degrees: np.ndarray,
    k_max: int,
    connected: bool | None = None,
) -> int:
    """min(kappa(G), k_max)."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if n == 1:
        return 0
    m = len(ei)
    if m == n * (n - 1) // 2:
        # complete graph: no non-adjacent pair exists
        return min(n - 1, k_max)
    if connected is None:
        connected = is_connected(n, adj)
    if not connected:
        return 0
    bound = min(int(degrees.min()), k_max)
    if bound <= 1:
        return 1
    has_art, _ = cut_structure(n, adj)
    if has_art:
        return 1
    if bound <= 2:
        return 2
    graph = _vertex_split_digraph(n, ei, ej)
    v = int(np.argmin(degrees))
    neighbours = set(int(w) for w in adj[v])
    for w in range(n):
        if w == v or w in neighbours:
            continue
        f = maximum_flow(graph, v + n, w).flow_value
        if f < bound:
            bound = f
            if bound <= 2:
                return 2
    ordered = sorted(neighbours)
    neighbour_sets = {x: set(int(w) for w in adj[x]) for x in ordered}
    for i, x in enumerate(ordered):
        for y in ordered[i + 1:]:
            if y in neighbour_sets[x]:
                continue
            f = maximum_flow(graph, x + n, y).flow_value
            if f < bound:
                bound = f
                if bound <= 2:
                    return 2
    return bound


def edge_connectivity_capped(
    n: int,
    ei: np.ndarray,
    ej: np.ndarray,
    adj: list[np.ndarray],
    degrees: np.ndarray,
    k_max: int,
    connected: bool | None = None,
) -> int:
    """min(lambda(G), k_max); a single vertex is vacuously infinite, capped."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if n == 1:
        return k_max
    if connected is None:
        connected = is_connected(n, adj)
    if not connected:
        return 0
    bound = min(int(degrees.min()), k_max)
    if bound <= 1:
        return 1
    _, has_bridge = cut_structure(n, adj)
    if has_bridge:
        return 1
    if bound <= 2:
        return 2
    # Any edge cut smaller than delta has more than delta vertices on each
    # side, so a dominating set meets both sides; flows from one fixed
    # dominator to the others therefore find every nontrivial minimum cut,
    # while the trivial (star) cuts are covered by the delta bound.
    graph = _edge_digraph(n, ei, ej)
    dominators = _maximal_independent_set(n, adj)
    s = dominators[0]
    for t in dominators[1:]:
        f = maximum_flow(graph, s, t).flow_value
        if f < bound:
            bound = f
            if bound <= 2:
                return 2
    return bound
