"""Weighted undirected alliance graphs built from event streams.

Every multi-party alliance is expanded into a clique; repeated collaborations
between the same pair accumulate into an integer edge weight.  Snapshots are
stored in CSR form with nodes densely re-indexed in ascending canonical-id order.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .ingest import AllianceEvent


class UnknownFirmError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    node_ids: np.ndarray          # canonical id of each dense index, ascending
    indptr: np.ndarray
    indices: np.ndarray           # neighbor indices, sorted within each row
    weights: np.ndarray           # int64, >= 1
    as_of_year: int | None = None
    window: tuple[int, int] | None = None   # (start, end], start exclusive
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.node_ids, self.indptr, self.indices, self.weights):
            arr.setflags(write=False)
        object.__setattr__(
            self, "_index", {int(c): i for i, c in enumerate(self.node_ids)}
        )

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def index_of(self, firm: int) -> int:
        try:
            return self._index[int(firm)]
        except KeyError:
            raise UnknownFirmError(firm) from None

    def __contains__(self, firm) -> bool:
        return int(firm) in self._index

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def neighbor_weights(self, i: int) -> np.ndarray:
        return self.weights[self.indptr[i]:self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def strengths(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n_nodes), self.degrees())
        return np.bincount(rows, weights=self.weights, minlength=self.n_nodes).astype(np.int64)

    def weight(self, i: int, j: int) -> int:
        nbrs = self.neighbors(i)
        k = np.searchsorted(nbrs, j)
        if k < len(nbrs) and nbrs[k] == j:
            return int(self.neighbor_weights(i)[k])
        return 0

    def pair_weights(self) -> dict[tuple[int, int], int]:
        """Edge weights keyed by ordered canonical-id pairs (a < b)."""
        out = {}
        ids = self.node_ids
        for i in range(self.n_nodes):
            for j, w in zip(self.neighbors(i), self.neighbor_weights(i)):
                if i < j:
                    out[(int(ids[i]), int(ids[j]))] = int(w)
        return out

    def edges(self):
        """Yield ``(i, j, w)`` in dense indices with ``i < j``."""
        for i in range(self.n_nodes):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            for j, w in zip(self.indices[lo:hi], self.weights[lo:hi]):
                if i < j:
                    yield i, int(j), int(w)

    def adjacency(self, weighted: bool = False) -> sp.csr_matrix:
        data = self.weights if weighted else np.ones_like(self.weights)
        return sp.csr_matrix(
            (data.astype(np.float64), self.indices, self.indptr),
            shape=(self.n_nodes, self.n_nodes),
        )

    def relabel(self, node_ids) -> "GraphSnapshot":
        """Same topology with canonical ids replaced according to ``node_ids``."""
        node_ids = np.asarray(node_ids, dtype=np.int64)
        mapping = {int(a): int(b) for a, b in zip(self.node_ids, node_ids)}
        pairs = {
            (min(mapping[a], mapping[b]), max(mapping[a], mapping[b])): w
            for (a, b), w in self.pair_weights().items()
        }
        return from_pair_weights(pairs, node_ids, self.as_of_year, self.window)


def from_pair_weights(
    pairs: Mapping[tuple[int, int], int],
    nodes: Iterable[int] = (),
    as_of_year: int | None = None,
    window: tuple[int, int] | None = None,
) -> GraphSnapshot:
    """Build a snapshot from ``{(a, b): weight}`` over canonical ids."""
    node_set = {int(n) for n in nodes}
    for a, b in pairs:
        if a == b:
            raise ValueError(f"self-loop on firm {a}")
        node_set.add(int(a))
        node_set.add(int(b))
    node_ids = np.array(sorted(node_set), dtype=np.int64)
    n = len(node_ids)
    if not pairs:
        return GraphSnapshot(
            node_ids, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64), as_of_year, window,
        )
    index = {int(c): i for i, c in enumerate(node_ids)}
    m = len(pairs)
    rows = np.empty(2 * m, dtype=np.int64)
    cols = np.empty(2 * m, dtype=np.int64)
    wts = np.empty(2 * m, dtype=np.int64)
    for k, ((a, b), w) in enumerate(pairs.items()):
        if w < 1:
            raise ValueError(f"non-positive weight {w} on ({a}, {b})")
        i, j = index[int(a)], index[int(b)]
        rows[2 * k], cols[2 * k] = i, j
        rows[2 * k + 1], cols[2 * k + 1] = j, i
        wts[2 * k] = wts[2 * k + 1] = w
    order = np.lexsort((cols, rows))
    rows, cols, wts = rows[order], cols[order], wts[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return GraphSnapshot(node_ids, indptr, cols, wts, as_of_year, window)


def _clique_pairs(participants):
    return combinations(sorted(participants), 2)


def _accumulate(events: Iterable[AllianceEvent]) -> tuple[Counter, set]:
    pairs: Counter = Counter()
    nodes: set = set()
    for ev in events:
        nodes.update(ev.participants)
        pairs.update(_clique_pairs(ev.participants))
    return pairs, nodes


def empty_snapshot(as_of_year: int | None = None) -> GraphSnapshot:
    return from_pair_weights({}, (), as_of_year)


def add_alliance(
    snapshot: GraphSnapshot, event: AllianceEvent, registry=None
) -> GraphSnapshot:
    """Return a new snapshot with ``event`` clique-expanded into it.

    ``registry`` (any container of canonical ids) is checked when given.
    """
    if snapshot.as_of_year is not None and event.year > snapshot.as_of_year:
        raise ValueError(
            f"alliance {event.alliance_id} ({event.year}) is after snapshot year "
            f"{snapshot.as_of_year}"
        )
    if registry is not None:
        for firm in sorted(event.participants):
            if firm not in registry:
                raise UnknownFirmError(f"firm {firm} is not in the firm registry")
    pairs = Counter(snapshot.pair_weights())
    pairs.update(_clique_pairs(event.participants))
    nodes = set(int(c) for c in snapshot.node_ids) | set(event.participants)
    return from_pair_weights(pairs, nodes, snapshot.as_of_year, snapshot.window)


def cumulative_snapshot(events: Iterable[AllianceEvent], t: int) -> GraphSnapshot:
    """All alliances announced in or before year ``t``."""
    pairs, nodes = _accumulate(ev for ev in events if ev.year <= t)
    return from_pair_weights(pairs, nodes, as_of_year=t)


def window_snapshot(
    events: Iterable[AllianceEvent], window_end: int, width: int = 3
) -> GraphSnapshot:
    """Alliances with ``window_end - width < year <= window_end``."""
    if width < 1:
        raise ValueError("window width must be >= 1")
    start = window_end - width
    pairs, nodes = _accumulate(ev for ev in events if start < ev.year <= window_end)
    return from_pair_weights(pairs, nodes, as_of_year=window_end, window=(start, window_end))


def cumulative_series(events: Iterable[AllianceEvent], years: Iterable[int]):
    """Yield ``(year, snapshot)`` for each requested year, sharing one pass over events."""
    ordered = sorted(events, key=lambda e: (e.year, e.alliance_id))
    pairs: Counter = Counter()
    nodes: set = set()
    k = 0
    for t in sorted(years):
        while k < len(ordered) and ordered[k].year <= t:
            nodes.update(ordered[k].participants)
            pairs.update(_clique_pairs(ordered[k].participants))
            k += 1
        yield t, from_pair_weights(pairs, nodes, as_of_year=t)


def window_ends(first: int, last: int, stride: int = 1) -> list[int]:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return list(range(first, last + 1, stride))


def write_edge_list(snapshot: GraphSnapshot, path) -> None:
    ids = snapshot.node_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm_a", "firm_b", "weight"])
        for i, j, wt in snapshot.edges():
            w.writerow([int(ids[i]), int(ids[j]), wt])


def write_node_attributes(snapshot: GraphSnapshot, path) -> None:
    deg = snapshot.degrees()
    strength = snapshot.strengths()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm", "degree", "strength"])
        for i, firm in enumerate(snapshot.node_ids):
            w.writerow([int(firm), int(deg[i]), int(strength[i])])
