"""Unweighted and weighted k-core decomposition, coreness and Katz comparison."""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphSnapshot


@dataclass(frozen=True)
class CoreMode:
    weighted: bool = False
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.weighted and (self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0):
            raise ValueError("weighted mode needs alpha >= 0, beta >= 0, alpha + beta > 0")

    def __str__(self):
        return f"weighted(alpha={self.alpha}, beta={self.beta})" if self.weighted else "unweighted"


UNWEIGHTED = CoreMode()
WEIGHTED = CoreMode(weighted=True)


@dataclass(frozen=True, eq=False)
class ShellAssignment:
    node_ids: np.ndarray
    k_s: np.ndarray
    mode: CoreMode

    @property
    def k_s_max(self) -> int:
        return int(self.k_s.max()) if len(self.k_s) else 0

    @property
    def coreness(self) -> np.ndarray:
        return self.k_s_max - self.k_s

    @property
    def coreness_max(self) -> int:
        return int(self.coreness.max()) if len(self.k_s) else 0

    @property
    def relative_coreness(self) -> np.ndarray:
        cmax = self.coreness_max
        if cmax == 0:
            return np.zeros(len(self.k_s))
        return self.coreness / cmax

    def as_dict(self) -> dict[int, int]:
        """Shell index keyed by canonical firm id."""
        return {int(f): int(k) for f, k in zip(self.node_ids, self.k_s)}


def weighted_degree(d: float, strength: float, alpha: float = 1.0, beta: float = 1.0) -> float:
    """Geometric-mean combination of degree and total incident weight."""
    if d == 0:
        return 0.0
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError("need alpha >= 0, beta >= 0, alpha + beta > 0")
    if alpha == 1.0 and beta == 1.0:
        return math.sqrt(d * strength)
    return (d ** alpha * strength ** beta) ** (1.0 / (alpha + beta))


def node_weighted_degree(snapshot: GraphSnapshot, i: int, alpha=1.0, beta=1.0) -> float:
    nbr_w = snapshot.neighbor_weights(i)
    return weighted_degree(len(nbr_w), int(nbr_w.sum()), alpha, beta)


def _integer_score(mode: CoreMode):
    """Largest integer s with d' >= s, as a function of (degree, strength)."""
    if not mode.weighted:
        return lambda d, s: d
    if mode.alpha == 1.0 and mode.beta == 1.0:
        return lambda d, s: math.isqrt(d * s)
    a, b = mode.alpha, mode.beta

    def score(d, s):
        if d == 0:
            return 0
        x = weighted_degree(d, s, a, b)
        k = math.floor(x)
        # values sitting a rounding error below an integer belong to it
        if (k + 1) - x <= 1e-9 * (k + 1):
            k += 1
        return k

    return score


def _bucket_cores(snapshot: GraphSnapshot) -> np.ndarray:
    """Batagelj-Zaversnik bucket peeling on the unweighted topology."""
    n = snapshot.n_nodes
    indptr, indices = snapshot.indptr.tolist(), snapshot.indices.tolist()
    deg = [indptr[i + 1] - indptr[i] for i in range(n)]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    md = max(deg)
    bin_ = [0] * (md + 1)
    for d in deg:
        bin_[d] += 1
    start = 0
    for d in range(md + 1):
        bin_[d], start = start, start + bin_[d]
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bin_[deg[v]]
        vert[pos[v]] = v
        bin_[deg[v]] += 1
    for d in range(md, 0, -1):
        bin_[d] = bin_[d - 1]
    bin_[0] = 0
    for i in range(n):
        v = vert[i]
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if deg[u] > deg[v]:
                du, pu = deg[u], pos[u]
                pw = bin_[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bin_[du] += 1
                deg[u] -= 1
    return np.array(deg, dtype=np.int64)


def _heap_cores(snapshot: GraphSnapshot, mode: CoreMode) -> np.ndarray:
    """Min-score peeling with lazy heap entries; scores recomputed when a neighbor leaves."""
    score_of = _integer_score(mode)
    n = snapshot.n_nodes
    indptr = snapshot.indptr.tolist()
    indices = snapshot.indices.tolist()
    weights = snapshot.weights.tolist()
    deg = [indptr[i + 1] - indptr[i] for i in range(n)]
    strength = [sum(weights[indptr[i]:indptr[i + 1]]) for i in range(n)]
    score = [score_of(deg[i], strength[i]) for i in range(n)]
    heap = [(score[i], i) for i in range(n)]
    heapq.heapify(heap)
    removed = [False] * n
    k_s = [0] * n
    level = 0
    while heap:
        sc, v = heapq.heappop(heap)
        if removed[v] or sc != score[v]:
            continue
        level = max(level, sc)
        k_s[v] = level
        removed[v] = True
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if removed[u]:
                continue
            deg[u] -= 1
            strength[u] -= weights[k]
            new = score_of(deg[u], strength[u])
            if new != score[u]:
                score[u] = new
                heapq.heappush(heap, (new, u))
    return np.array(k_s, dtype=np.int64)


def kcore_decompose(snapshot: GraphSnapshot, mode: CoreMode = WEIGHTED) -> ShellAssignment:
    """Shell index of every node.

    A node's shell index is the largest integer ``s`` such that it survives
    iterated removal of every node whose (weighted) degree, recomputed on the
    remaining subgraph, is below ``s``.  Isolated nodes get 0.
    """
    if mode.weighted:
        k_s = _heap_cores(snapshot, mode)
    else:
        k_s = _bucket_cores(snapshot)
    return ShellAssignment(snapshot.node_ids, k_s, mode)


def coreness_distribution(assignment: ShellAssignment) -> dict[int, int]:
    """Counts of coreness values 0..max(C); empty classes are kept as 0."""
    if len(assignment.k_s) == 0:
        return {}
    counts = np.bincount(assignment.coreness, minlength=assignment.coreness_max + 1)
    return {c: int(n) for c, n in enumerate(counts)}


def relative_coreness(c: float, c_max: float) -> float:
    if c_max < 0:
        raise ValueError("maximum coreness must be >= 0")
    if c_max == 0:
        return 0.0
    return c / c_max


class KatzConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Katz series did not converge after {iterations} terms "
                         f"(residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


def katz_bonacich(
    snapshot: GraphSnapshot,
    damping: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    weighted: bool = True,
) -> np.ndarray:
    """Sum over walk lengths k >= 1 of ``damping**k`` times the number of walks.

    The default damping is ``0.9 / max strength``, which keeps the series inside
    the spectral radius bound.
    """
    n = snapshot.n_nodes
    if n == 0:
        return np.zeros(0)
    A = snapshot.adjacency(weighted=weighted)
    if damping is None:
        row_max = float(np.asarray(A.sum(axis=1)).max())
        damping = 0.9 / row_max if row_max > 0 else 0.5
    if damping <= 0:
        raise ValueError("damping must be positive")
    term = np.ones(n)
    total = np.zeros(n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        term = damping * (A @ term)
        total += term
        residual = float(np.abs(term).max())
        if residual <= tol * max(1.0, float(np.abs(total).max())):
            return total
        if not np.isfinite(residual):
            break
    raise KatzConvergenceError(residual, it)


def coreness_trajectories(assignments: dict[int, ShellAssignment]) -> dict[int, list[tuple]]:
    """Per-firm ``(year, C, c)`` series from yearly assignments."""
    out: dict[int, list[tuple]] = {}
    for year in sorted(assignments):
        a = assignments[year]
        for firm, c, rel in zip(a.node_ids, a.coreness, a.relative_coreness):
            out.setdefault(int(firm), []).append((year, int(c), float(rel)))
    return out


def write_shells(path, rows) -> None:
    """``rows``: iterable of ``(year, ShellAssignment)``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["firm", "year", "k_s", "coreness", "relative_coreness"])
        for year, a in rows:
            for firm, k, c, rel in zip(a.node_ids, a.k_s, a.coreness, a.relative_coreness):
                w.writerow([int(firm), year, int(k), int(c), repr(float(rel))])


def write_histogram(path, hist: dict[int, int], year: int | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coreness", "count"] if year is None else ["year", "coreness", "count"])
        for c in sorted(hist):
            w.writerow([c, hist[c]] if year is None else [year, c, hist[c]])
