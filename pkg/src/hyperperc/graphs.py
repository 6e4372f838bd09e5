"""Small shared graph helpers: CSR adjacency and BFS distances."""

from __future__ import annotations

import numpy as np


def csr_adjacency(n: int, edges: np.ndarray):
    """CSR adjacency of an undirected edge list.

    Returns (indptr, indices, edge_id) with edge_id[j] the row index into
    `edges` that produced adjacency slot j, so per-edge marks (open/closed)
    can be consulted during traversals.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, edges[:, 0], 1)
    np.add.at(deg, edges[:, 1], 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(2 * m, dtype=np.int64)
    edge_id = np.empty(2 * m, dtype=np.int64)
    cursor = indptr[:-1].copy()
    for k in range(m):
        u, v = edges[k]
        indices[cursor[u]] = v
        edge_id[cursor[u]] = k
        cursor[u] += 1
        indices[cursor[v]] = u
        edge_id[cursor[v]] = k
        cursor[v] += 1
    return indptr, indices, edge_id


def bfs_distances(n: int, edges: np.ndarray, source: int) -> np.ndarray:
    """Unweighted shortest-path distances from source; -1 if unreachable."""
    indptr, indices, _ = csr_adjacency(n, edges)
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for j in range(indptr[v], indptr[v + 1]):
                u = indices[j]
                if dist[u] < 0:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist
