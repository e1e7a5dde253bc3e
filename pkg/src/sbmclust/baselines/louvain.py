"""Louvain modularity maximisation (local moves, then aggregation)."""

from __future__ import annotations

import numpy as np

from ..graph import Graph
from ..partition import Partition

MAX_LEVELS = 64


def modularity(g: Graph, p, resolution: float = 1.0) -> float:
    """``Q = sum_c [e_c / m - resolution * (d_c / 2m)^2]``; 0 for an edgeless graph."""
    labels = p.labels if isinstance(p, Partition) else Partition(np.asarray(p)).labels
    m = g.n_edges
    if m == 0:
        return 0.0
    k = int(labels.max()) + 1
    li, lj = labels[g.edges[:, 0]], labels[g.edges[:, 1]]
    inside = np.bincount(li[li == lj], minlength=k).astype(float)
    deg = np.bincount(labels, weights=g.degrees().astype(float), minlength=k)
    return float((inside / m - resolution * (deg / (2.0 * m)) ** 2).sum())


class _Level:
    """Weighted graph with self-loops, built from the original or an aggregate."""

    def __init__(self, adj, loops):
        self.adj = adj            # list of {neighbour: weight}, no self entries
        self.loops = loops        # self-loop weight per node (edges collapsed inside)
        self.degree = np.array([sum(a.values()) for a in adj], dtype=float) + 2.0 * loops

    @property
    def size(self):
        return len(self.adj)


def _one_level(level: _Level, m: float, resolution: float, rng) -> tuple[np.ndarray, bool]:
    """Local moving phase; returns community per node and whether anything moved."""
    N = level.size
    comm = np.arange(N)
    tot = level.degree.copy()
    k = level.degree
    order = rng.permutation(N)
    moved_any = False
    scale = resolution / (2.0 * m)
    for _ in range(10 * N + 10):
        moved = False
        for i in order:
            ci = comm[i]
            links: dict[int, float] = {}
            for j, w in level.adj[i].items():
                c = comm[j]
                links[c] = links.get(c, 0.0) + w
            tot[ci] -= k[i]
            best = ci
            best_gain = links.get(ci, 0.0) - scale * tot[ci] * k[i]
            for c, w in links.items():
                gain = w - scale * tot[c] * k[i]
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved = True
                moved_any = True
        if not moved:
            break
    _, comm = np.unique(comm, return_inverse=True)
    return comm, moved_any


def _aggregate(level: _Level, comm: np.ndarray) -> _Level:
    C = int(comm.max()) + 1
    adj = [dict() for _ in range(C)]
    loops = np.zeros(C)
    np.add.at(loops, comm, level.loops)
    for i in range(level.size):
        ci = comm[i]
        for j, w in level.adj[i].items():
            cj = comm[j]
            if ci == cj:
                loops[ci] += 0.5 * w  # each internal edge is seen from both ends
            else:
                adj[ci][cj] = adj[ci].get(cj, 0.0) + w
    return _Level(adj, loops)


def louvain(g: Graph, seed=0, resolution: float = 1.0) -> Partition:
    """Community detection by greedy modularity optimisation.

    Vertices are visited in a seeded random order at each level; a vertex
    moves to the first neighbouring community with the largest strict gain.
    An edgeless graph yields the all-singletons partition.
    """
    if g.n_edges == 0:
        return Partition(np.arange(g.n), method="Louvain")
    rng = np.random.default_rng(seed)
    m = float(g.n_edges)
    csr = g.csr
    adj = []
    for i in range(g.n):
        nbrs = csr.indices[csr.indptr[i]:csr.indptr[i + 1]]
        adj.append({int(j): 1.0 for j in nbrs})
    level = _Level(adj, np.zeros(g.n))
    membership = np.arange(g.n)
    for _ in range(MAX_LEVELS):
        comm, moved = _one_level(level, m, resolution, rng)
        if not moved:
            break
        membership = comm[membership]
        level = _aggregate(level, comm)
    return Partition(membership, method="Louvain")
