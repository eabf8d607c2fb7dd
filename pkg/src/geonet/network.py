"""Realized random graphs and their per-sample connectivity observables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist

from . import flows
from .channel import ConnectionModel, connection_range, link_outcomes
from .geometry import Domain

_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _TRIU_CACHE:
        if len(_TRIU_CACHE) > 8:
            _TRIU_CACHE.clear()
        _TRIU_CACHE[n] = np.triu_indices(n, 1)
    return _TRIU_CACHE[n]


class NetworkSample:
    """One realized graph: node positions plus a symmetric, irreflexive edge set.

    Edges are stored as an (m, 2) array with i < j in lexicographic order.
    Immutable after construction; observables are cached lazily.
    """

    def __init__(self, domain: Domain, positions: np.ndarray, edges: np.ndarray):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[0] < 1:
            raise ValueError("positions must be a nonempty (n, d) array")
        if positions.shape[1] != domain.dimension:
            raise ValueError("positions dimension does not match domain")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.domain = domain
        self.positions = positions
        self.edges = edges

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n) + np.bincount(
            self.edges[:, 1], minlength=self.n
        )

    @cached_property
    def adjacency(self) -> list[np.ndarray]:
        return flows.adjacency_lists(self.n, self.edges[:, 0], self.edges[:, 1])

    @cached_property
    def _component_labels(self) -> np.ndarray:
        matrix = csr_matrix(
            (np.ones(len(self.edges), dtype=np.int8), (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.n, self.n),
        )
        _, labels = connected_components(matrix, directed=False)
        return labels

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.adjacency[i]


def _grid_candidate_pairs(positions: np.ndarray, side: float, r_cut: float):
    """Candidate pairs (i < j) covering every pair at distance <= r_cut.

    Points are binned into a cell grid of width >= r_cut; only same-cell and
    forward-neighbour-cell pairs are produced, each exactly once.
    """
    n, d = positions.shape
    per_axis = max(1, int(side / r_cut))
    width = side / per_axis
    idx = np.minimum((positions / width).astype(np.int64), per_axis - 1)
    if d == 2:
        flat = idx[:, 0] * per_axis + idx[:, 1]
        offsets = [(0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        flat = (idx[:, 0] * per_axis + idx[:, 1]) * per_axis + idx[:, 2]
        offsets = [
            o
            for o in itertools.product((-1, 0, 1), repeat=3)
            if o > (0, 0, 0)
        ]
    order = np.argsort(flat, kind="stable")
    flat_sorted = flat[order]
    uniq, starts = np.unique(flat_sorted, return_index=True)
    starts = np.append(starts, n)
    members = {int(c): order[starts[k]:starts[k + 1]] for k, c in enumerate(uniq)}

    def cell_coords(c):
        if d == 2:
            return c // per_axis, c % per_axis
        xy, z = divmod(c, per_axis)
        x, y = divmod(xy, per_axis)
        return x, y, z

    pi, pj = [], []
    for c, a in members.items():
        if len(a) > 1:
            ii, jj = _triu_pairs(len(a))
            pi.append(a[ii])
            pj.append(a[jj])
        coords = cell_coords(c)
        for off in offsets:
            nb = tuple(coords[k] + off[k] for k in range(d))
            if any(not (0 <= nb[k] < per_axis) for k in range(d)):
                continue
            nb_flat = nb[0] * per_axis + nb[1] if d == 2 else (nb[0] * per_axis + nb[1]) * per_axis + nb[2]
            b = members.get(int(nb_flat))
            if b is None:
                continue
            gi = np.repeat(a, len(b))
            gj = np.tile(b, len(a))
            pi.append(gi)
            pj.append(gj)
    if not pi:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ci = np.concatenate(pi)
    cj = np.concatenate(pj)
    swap = ci > cj
    ci, cj = np.where(swap, cj, ci), np.where(swap, ci, cj)
    return ci, cj


def _should_use_grid(model: ConnectionModel, domain: Domain, n: int, tail: float) -> bool:
    r_cut = connection_range(model, tail)
    return n >= 128 and r_cut * 4 <= domain.side


def build_graph(
    domain: Domain,
    positions: np.ndarray,
    model: ConnectionModel,
    rng=None,
    method: str = "auto",
    tail: float = 1e-12,
) -> NetworkSample:
    """Sample one random graph: one Bernoulli draw per candidate pair.

    Pair iteration is lexicographic in (i, j), so outcomes are reproducible
    for a fixed rng state.  ``method``:

    * ``"exact"``  -- every unordered pair is sampled (O(n^2)).
    * ``"grid"``   -- cell-list pruning; pairs beyond the connection range
      (H < tail) are never sampled, which skips a total expected edge mass
      below n^2 * tail and consumes a different random stream than "exact".
    * ``"auto"``   -- grid when it prunes meaningfully, else exact.

    The Disk model consumes no randomness under either method and yields
    exactly the unit-disk graph of the positions.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if n < 1:
        raise ValueError("need at least one position")
    if not domain.contains(positions):
        raise ValueError("positions must lie inside the domain")
    if method not in ("auto", "exact", "grid"):
        raise ValueError(f"unknown pair sampling method {method!r}")
    if method == "auto":
        method = "grid" if _should_use_grid(model, domain, n, tail) else "exact"

    if method == "exact":
        if n == 1:
            return NetworkSample(domain, positions, np.empty((0, 2), dtype=np.int64))
        iu, ju = _triu_pairs(n)
        dists = pdist(positions)
        mask = link_outcomes(model, dists, rng)
        edges = np.column_stack([iu[mask], ju[mask]])
        return NetworkSample(domain, positions, edges)

    r_cut = connection_range(model, tail)
    ci, cj = _grid_candidate_pairs(positions, domain.side, r_cut)
    if len(ci):
        dists = np.linalg.norm(positions[ci] - positions[cj], axis=1)
        within = dists <= r_cut
        ci, cj, dists = ci[within], cj[within], dists[within]
        order = np.lexsort((cj, ci))
        ci, cj, dists = ci[order], cj[order], dists[order]
        mask = link_outcomes(model, dists, rng)
        edges = np.column_stack([ci[mask], cj[mask]])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return NetworkSample(domain, positions, edges)


def components(sample: NetworkSample) -> tuple[int, list[int], np.ndarray]:
    """(component count, sizes ascending, per-node component labels)."""
    labels = sample._component_labels
    sizes = np.bincount(labels)
    return len(sizes), sorted(int(s) for s in sizes), labels


def min_degree(sample: NetworkSample) -> int:
    return int(sample.degrees.min())


def mean_degree(sample: NetworkSample) -> float:
    return float(sample.degrees.mean())


def vertex_connectivity(sample: NetworkSample, k_max: int = 5) -> int:
    """min(kappa, k_max) via the staged certificate/max-flow scheme."""
    return flows.vertex_connectivity_capped(
        sample.n,
        sample.edges[:, 0],
        sample.edges[:, 1],
        sample.adjacency,
        sample.degrees,
        k_max,
        connected=len(np.bincount(sample._component_labels)) == 1,
    )


def edge_connectivity(sample: NetworkSample, k_max: int = 5) -> int:
    """min(lambda, k_max); 0 when disconnected."""
    return flows.edge_connectivity_capped(
        sample.n,
        sample.edges[:, 0],
        sample.edges[:, 1],
        sample.adjacency,
        sample.degrees,
        k_max,
        connected=len(np.bincount(sample._component_labels)) == 1,
    )


def detect_isolated_pair(sample: NetworkSample) -> bool:
    """True iff some connected component consists of exactly two nodes."""
    if sample.n < 2:
        raise ValueError("isolated-pair detection needs n >= 2")
    sizes = np.bincount(sample._component_labels)
    return bool((sizes == 2).any())


def _min_external_neighbourhood(sample: NetworkSample) -> Optional[int]:
    """Smallest |N(i) u N(j) \\ {i, j}| over edges (i, j); None if no edges."""
    if len(sample.edges) == 0:
        return None
    neighbour_sets = [set(int(w) for w in a) for a in sample.adjacency]
    deg = sample.degrees
    best = None
    for i, j in sample.edges:
        common = len(neighbour_sets[int(i)] & neighbour_sets[int(j)])
        external = int(deg[i]) + int(deg[j]) - 2 - common
        if best is None or external < best:
            best = external
            if best == 0:
                break
    return best


def detect_bridged_pair(sample: NetworkSample, k: int) -> bool:
    """True iff some adjacent pair reaches the rest only through k-1 nodes.

    The pair (i, j) must have all its external neighbours inside a set of
    exactly k-1 other nodes; k=1 reduces to the isolated-pair test.
    """
    if not (1 <= k <= 5):
        raise ValueError("k must be in [1, 5]")
    if sample.n < k + 1:
        raise ValueError(f"need at least k+1={k + 1} nodes")
    best = _min_external_neighbourhood(sample)
    return best is not None and best <= k - 1


def bridged_pair_order(sample: NetworkSample, k_max: int = 5) -> Optional[int]:
    """Smallest k in [1, k_max] with a bridged pair, or None."""
    best = _min_external_neighbourhood(sample)
    if best is None or best > k_max - 1:
        return None
    return best + 1


@dataclass
class ConnectivityReport:
    """Per-sample observables; kappa/lambda are capped at the report's k_max."""

    n: int
    degree_sequence: np.ndarray
    min_degree: int
    mean_degree: float
    component_count: int
    component_sizes: list[int]
    vertex_connectivity: Optional[int]
    edge_connectivity: Optional[int]
    has_isolated_pair: bool
    bridged_pair_order: Optional[int]


def build_report(
    sample: NetworkSample,
    k_max: int = 4,
    with_vertex_connectivity: bool = True,
    with_edge_connectivity: bool = True,
    with_bridged_pair: bool = False,
) -> ConnectivityReport:
    count, sizes, _ = components(sample)
    degs = sample.degrees
    delta = int(degs.min())
    kappa = vertex_connectivity(sample, k_max) if with_vertex_connectivity else None
    lam = edge_connectivity(sample, k_max) if with_edge_connectivity else None
    if kappa is not None and lam is not None and sample.n > 1:
        # Whitney chain, capped: kappa <= lambda <= delta
        assert kappa <= lam <= min(delta, k_max), (kappa, lam, delta, k_max)
    if kappa is not None:
        assert (count == 1) == (kappa >= 1) or sample.n == 1
    return ConnectivityReport(
        n=sample.n,
        degree_sequence=degs,
        min_degree=delta,
        mean_degree=float(degs.mean()),
        component_count=count,
        component_sizes=sizes,
        vertex_connectivity=kappa,
        edge_connectivity=lam,
        has_isolated_pair=bool((np.bincount(sample._component_labels) == 2).any()) if sample.n >= 2 else False,
        bridged_pair_order=bridged_pair_order(sample, k_max) if with_bridged_pair else None,
    )
