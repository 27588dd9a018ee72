"""Node-level network controls: degree, betweenness, clustering, reach, effective size."""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from .graph import GraphSnapshot


@dataclass(frozen=True, eq=False)
class CentralityVector:
    node_ids: np.ndarray
    degree: np.ndarray
    betweenness_norm: np.ndarray
    local_clustering: np.ndarray
    local_reach: np.ndarray
    local_efficiency: np.ndarray

    COLUMNS = ("degree", "betweenness_norm", "local_clustering", "local_reach", "local_efficiency")

    def rows(self):
        for k, firm in enumerate(self.node_ids):
            yield int(firm), tuple(getattr(self, c)[k] for c in self.COLUMNS)


def degree(snapshot: GraphSnapshot) -> np.ndarray:
    """Distinct partners per node; edge multiplicity is ignored."""
    return snapshot.degrees().astype(np.int64)


@numba.njit(cache=True)
def _brandes_bfs(indptr, indices, n):
    bc = np.zeros(n)
    reach = np.zeros(n)
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    order = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head, tail = 0, 1
        while head < tail:
            v = order[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        acc = 0.0
        for idx in range(1, tail):
            acc += 1.0 / dist[order[idx]]
        reach[s] = acc
        for idx in range(tail - 1, 0, -1):
            w = order[idx]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            bc[w] += delta[w]
    return bc, reach


def _dijkstra_betweenness(snapshot: GraphSnapshot) -> np.ndarray:
    """Brandes accumulation with edge cost 1/w (sensitivity variant)."""
    n = snapshot.n_nodes
    indptr, indices = snapshot.indptr, snapshot.indices
    cost = 1.0 / snapshot.weights
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, np.inf)
        sigma = np.zeros(n)
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0.0
        sigma[s] = 1.0
        done = np.zeros(n, dtype=bool)
        order = []
        heap = [(0.0, s)]
        while heap:
            d, v = heapq.heappop(heap)
            if done[v]:
                continue
            done[v] = True
            order.append(v)
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                nd = d + cost[k]
                if nd < dist[w] - 1e-12:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    preds[w] = [v]
                    heapq.heappush(heap, (nd, w))
                elif abs(nd - dist[w]) <= 1e-12 and not done[w]:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def _paths_and_reach(snapshot: GraphSnapshot):
    if snapshot.n_nodes == 0:
        return np.zeros(0), np.zeros(0)
    return _brandes_bfs(snapshot.indptr, snapshot.indices, snapshot.n_nodes)


def _normalize_betweenness(raw: np.ndarray) -> np.ndarray:
    n = len(raw)
    if n < 3:
        return np.zeros(n)
    # raw counts every unordered pair twice
    return raw / 2.0 * 2.0 / ((n - 1) * (n - 2))


def betweenness_norm(snapshot: GraphSnapshot, weighted_paths: bool = False) -> np.ndarray:
    """Shortest-path betweenness normalized by the number of node pairs excluding the node."""
    if weighted_paths:
        return _normalize_betweenness(_dijkstra_betweenness(snapshot))
    return _normalize_betweenness(_paths_and_reach(snapshot)[0])


def local_reach(snapshot: GraphSnapshot) -> np.ndarray:
    """Sum of inverse hop distances to every reachable node."""
    return _paths_and_reach(snapshot)[1]


def _common_neighbors(snapshot: GraphSnapshot) -> sp.csr_matrix:
    A = snapshot.adjacency()
    return (A @ A).multiply(A).tocsr()


def local_clustering(snapshot: GraphSnapshot) -> np.ndarray:
    d = snapshot.degrees().astype(np.float64)
    if snapshot.n_nodes == 0:
        return np.zeros(0)
    links = np.asarray(_common_neighbors(snapshot).sum(axis=1)).ravel() / 2.0
    out = np.zeros(snapshot.n_nodes)
    ok = d >= 2
    out[ok] = 2.0 * links[ok] / (d[ok] * (d[ok] - 1.0))
    return out


def local_efficiency(snapshot: GraphSnapshot, normalized: bool = False) -> np.ndarray:
    """Burt's effective size with proportional tie strengths.

    For node i this is ``sum_j (1 - sum_k p_ik * a_jk)`` over neighbors j and
    k != j of i, with ``p_ik = w_ik / sum_l w_il``; it collapses to
    ``d_i - sum_k p_ik * (common neighbors of i and k)``.
    """
    n = snapshot.n_nodes
    if n == 0:
        return np.zeros(0)
    d = snapshot.degrees().astype(np.float64)
    W = snapshot.adjacency(weighted=True)
    strength = np.asarray(W.sum(axis=1)).ravel()
    inv = np.divide(1.0, strength, out=np.zeros(n), where=strength > 0)
    P = sp.diags(inv) @ W
    redundancy = np.asarray(P.multiply(_common_neighbors(snapshot)).sum(axis=1)).ravel()
    eff = d - redundancy
    if normalized:
        eff = np.divide(eff, d, out=np.zeros(n), where=d > 0)
    return eff


def compute_centralities(
    snapshot: GraphSnapshot,
    weighted_paths: bool = False,
    normalized_efficiency: bool = False,
) -> CentralityVector:
    raw_bc, reach = _paths_and_reach(snapshot)
    bc = _normalize_betweenness(
        _dijkstra_betweenness(snapshot) if weighted_paths else raw_bc
    )
    return CentralityVector(
        node_ids=snapshot.node_ids,
        degree=degree(snapshot),
        betweenness_norm=bc,
        local_clustering=local_clustering(snapshot),
        local_reach=reach,
        local_efficiency=local_efficiency(snapshot, normalized_efficiency),
    )


def write_centralities(path, rows) -> None:
    """``rows``: iterable of ``(year, CentralityVector)``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm", "year", *CentralityVector.COLUMNS])
        for year, cv in rows:
            for firm, (deg, bc, cl, reach, eff) in cv.rows():
                w.writerow([firm, year, int(deg), repr(float(bc)), repr(float(cl)),
                            repr(float(reach)), repr(float(eff))])
