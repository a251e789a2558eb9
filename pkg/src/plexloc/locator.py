"""Maximum-likelihood source estimator from observer delays.

For each candidate replica v the observed relative delays d are modeled as
Gaussian with mean mu_v and covariance Lam_v, both read off the tree of
shortest mean-delay paths from v to the observers:

    mu_v[i]     = |P(v, o_{i+2})|_mu - |P(v, o_1)|_mu
    Lam_v[i][j] = |P(o_{i+2}, o_1) /\ P(o_{j+2}, o_1)|_sigma2   (paths in the tree)
    score(v)    = mu_v^T Lam_v^{-1} (d - 0.5 mu_v)

and the estimate is the highest-scoring candidate.  This module holds the
readable per-candidate implementation (the behavioral contract) and a
batch ranking path that computes identical scores through the compiled
kernels in ``_kernels``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

from ._kernels import (DIST_TIE_REL, RIDGE_ABS, RIDGE_REL,
                       score_all_candidates, tie_broken_predecessors)
from .graphs import MultiplexGraph, ReplicaId
from .observers import DelayVector
from .spreading import DelayMoments

# Tolerance for "scores are tied" when grouping the ranking.
SCORE_TIE_REL = 1e-9
SCORE_TIE_ABS = 1e-12


class UnreachableObserverError(Exception):
    """A candidate cannot reach every reporting observer."""


@dataclass
class PathTree:
    """Union of shortest mean-delay paths from one candidate to the observers.

    ``parent`` maps each non-root tree node to its (parent, edge class);
    ``path_weight`` maps each observer to the total mean delay of its path
    from the root.  Paths inside the tree are unique.
    """

    root: ReplicaId
    parent: dict[ReplicaId, tuple[ReplicaId, int]]
    path_weight: dict[ReplicaId, float]


@dataclass
class CandidateScore:
    candidate: ReplicaId
    score: float
    mu_v: np.ndarray | None


@dataclass
class SourceRanking:
    """All candidates in descending score order with explicit tie groups.

    ``tie_groups`` holds half-open [start, stop) index ranges of entries
    whose scores are equal within SCORE_TIE_REL; all invalid (-inf)
    candidates form the final group.  Within a group, entries are in
    ascending flat-index order.
    """

    entries: list[CandidateScore]
    tie_groups: list[tuple[int, int]]

    def position(self, candidate: ReplicaId) -> int:
        for i, e in enumerate(self.entries):
            if e.candidate == candidate:
                return i
        raise KeyError(f"{candidate} not in ranking")

    def group_of(self, candidate: ReplicaId) -> tuple[int, int]:
        pos = self.position(candidate)
        for start, stop in self.tie_groups:
            if start <= pos < stop:
                return start, stop
        raise AssertionError("tie groups do not cover the ranking")

    def rank_of(self, candidate: ReplicaId) -> int:
        """Pessimistic 1-based rank: position after the candidate's whole tie group."""
        return self.group_of(candidate)[1]

    def top_group(self) -> list[ReplicaId]:
        start, stop = self.tie_groups[0]
        return [e.candidate for e in self.entries[start:stop]]

    def best(self) -> CandidateScore:
        return self.entries[0]


def _flat_weights(g: MultiplexGraph, moments: DelayMoments) -> tuple[np.ndarray, ...]:
    indptr, indices, ecl = g._csr
    if moments.mean.shape[0] != g.layer_count + 1:
        raise ValueError(
            f"{moments.mean.shape[0]} edge-class moments for "
            f"{g.layer_count} layers plus interlinks"
        )
    return indptr, indices, moments.mean[ecl]


def build_path_tree(g: MultiplexGraph, v: ReplicaId,
                    observers: tuple[ReplicaId, ...],
                    moments: DelayMoments) -> PathTree:
    """Dijkstra from v under mean-delay edge weights, keeping observer chains.

    On equal-distance alternatives the predecessor is the lowest flat-index
    neighbor, so the tree (and everything downstream) is deterministic.
    Raises UnreachableObserverError if any observer is outside v's component.
    """
    indptr, indices, w = _flat_weights(g, moments)
    ecl = g._csr[2]
    n = g.total_replicas
    root = g.flat_index(v)
    dist = np.full(n, np.inf)
    dist[root] = 0.0
    settled = np.zeros(n, dtype=bool)
    heap: list[tuple[float, int]] = [(0.0, root)]
    while heap:
        dx, x = heapq.heappop(heap)
        if settled[x]:
            continue
        settled[x] = True
        for k in range(indptr[x], indptr[x + 1]):
            u = int(indices[k])
            nd = dx + w[k]
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))

    def predecessor(x: int) -> tuple[int, int]:
        tol = DIST_TIE_REL * max(1.0, abs(dist[x]))
        for k in range(indptr[x], indptr[x + 1]):
            u = int(indices[k])
            if abs(dist[u] + w[k] - dist[x]) <= tol:
                return u, int(ecl[k])
        raise AssertionError(f"reachable node {x} has no predecessor")

    parent: dict[ReplicaId, tuple[ReplicaId, int]] = {}
    path_weight: dict[ReplicaId, float] = {}
    for o in observers:
        fo = g.flat_index(o)
        if not np.isfinite(dist[fo]):
            raise UnreachableObserverError(f"observer {o} unreachable from {v}")
        path_weight[o] = float(dist[fo])
        x = fo
        while x != root:
            rx = g.replica(x)
            if rx in parent:
                break
            p, c = predecessor(x)
            parent[rx] = (g.replica(p), c)
            x = p
    return PathTree(root=v, parent=parent, path_weight=path_weight)


def deterministic_delay(tree: PathTree,
                        observers: tuple[ReplicaId, ...]) -> np.ndarray:
    """Expected relative delays: path weight to each reporting observer minus
    path weight to the reference (observers[0])."""
    ref_w = tree.path_weight[observers[0]]
    return np.array([tree.path_weight[o] - ref_w for o in observers[1:]],
                    dtype=np.float64)


def _root_chain(tree: PathTree, o: ReplicaId) -> dict[ReplicaId, int]:
    """Edges of the tree path o -> root, keyed by the child endpoint."""
    edges: dict[ReplicaId, int] = {}
    x = o
    while x != tree.root:
        p, c = tree.parent[x]
        edges[x] = c
        x = p
    return edges


def covariance(tree: PathTree, observers: tuple[ReplicaId, ...],
               moments: DelayMoments) -> np.ndarray:
    """Delay covariance from shared tree-path segments.

    The in-tree path from observer o_i to the reference runs up each root
    chain to their meeting vertex; the two chains share exactly the segment
    above it, so the path's edge set is the symmetric difference of the
    chains.  Entry [i][j] sums per-edge delay variance over the edges the
    two paths have in common (diagonal: the full path).
    """
    ref_chain = _root_chain(tree, observers[0])
    paths: list[dict[ReplicaId, int]] = []
    for o in observers[1:]:
        chain = _root_chain(tree, o)
        path = {x: c for x, c in chain.items() if x not in ref_chain}
        path.update({x: c for x, c in ref_chain.items() if x not in chain})
        paths.append(path)
    b1 = len(paths)
    lam = np.zeros((b1, b1))
    for i in range(b1):
        for j in range(i, b1):
            shared = paths[i].keys() & paths[j].keys()
            val = float(sum(moments.var[paths[i][x]] for x in shared))
            lam[i, j] = lam[j, i] = val
    return lam


def score(mu_v: np.ndarray, lam: np.ndarray, d: np.ndarray) -> float:
    """mu_v^T Lam^{-1} (d - 0.5 mu_v) with a ridge on Lam.

    The ridge eps = max(RIDGE_REL * max diag, RIDGE_ABS) keeps the solve
    defined when observers share full paths or all variances are zero.
    Returns -inf instead of a non-finite score.
    """
    mu_v = np.asarray(mu_v, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    eps = max(RIDGE_REL * (float(np.max(np.diag(lam))) if lam.size else 0.0),
              RIDGE_ABS)
    ridged = lam + eps * np.eye(lam.shape[0])
    try:
        factor = scipy.linalg.cho_factor(ridged, lower=True, check_finite=False)
        solved = scipy.linalg.cho_solve(factor, d - 0.5 * mu_v,
                                        check_finite=False)
    except np.linalg.LinAlgError:
        return -np.inf
    val = float(mu_v @ solved)
    return val if np.isfinite(val) else -np.inf


def score_candidate(g: MultiplexGraph, moments: DelayMoments,
                    dv: DelayVector, v: ReplicaId) -> CandidateScore:
    """Readable single-candidate path: tree, mu_v, covariance, score."""
    observers = (dv.reference, *dv.reporting)
    try:
        tree = build_path_tree(g, v, observers, moments)
    except UnreachableObserverError:
        return CandidateScore(candidate=v, score=-np.inf, mu_v=None)
    mu_v = deterministic_delay(tree, observers)
    lam = covariance(tree, observers, moments)
    return CandidateScore(candidate=v, score=score(mu_v, lam, dv.delays),
                          mu_v=mu_v)


@dataclass
class ShortestPathCache:
    """All-pairs distances and tie-broken predecessors for one (graph, moments).

    Reusable across realizations on the same graph; building it is the
    expensive part of ranking.
    """

    dist: np.ndarray
    pred: np.ndarray


def shortest_path_cache(g: MultiplexGraph,
                        moments: DelayMoments) -> ShortestPathCache:
    indptr, indices, w = _flat_weights(g, moments)
    n = g.total_replicas
    mat = scipy.sparse.csr_matrix((w, indices, indptr), shape=(n, n))
    dist = _sp_dijkstra(mat, directed=True)
    pred = tie_broken_predecessors(indptr, indices, w, dist)
    return ShortestPathCache(dist=dist, pred=pred)


def rank_sources(g: MultiplexGraph, moments: DelayMoments, dv: DelayVector,
                 cache: ShortestPathCache | None = None) -> SourceRanking:
    """Score every replica against the observations and rank them.

    Descending score; equal scores ordered by flat index; tie groups made
    explicit; candidates that cannot reach every observer come last.
    """
    if cache is None:
        cache = shortest_path_cache(g, moments)
    observers = (dv.reference, *dv.reporting)
    obs_flat = np.array([g.flat_index(o) for o in observers], dtype=np.int64)
    scores, mu = score_all_candidates(
        cache.dist, cache.pred, g.nodes_per_layer, g.layer_count,
        moments.var, obs_flat, dv.delays,
    )
    order = np.lexsort((np.arange(scores.size), -scores))
    entries = [
        CandidateScore(
            candidate=g.replica(int(f)),
            score=float(scores[f]),
            mu_v=mu[f].copy() if np.isfinite(scores[f]) else None,
        )
        for f in order
    ]
    return SourceRanking(entries=entries, tie_groups=_tie_groups(entries))


def _tie_groups(entries: list[CandidateScore]) -> list[tuple[int, int]]:
    """Group runs of equal score, anchored on each group's first entry."""
    groups: list[tuple[int, int]] = []
    i = 0
    n = len(entries)
    while i < n:
        head = entries[i].score
        j = i + 1
        if np.isfinite(head):
            tol = max(SCORE_TIE_REL * abs(head), SCORE_TIE_ABS)
            while j < n and np.isfinite(entries[j].score) \
                    and head - entries[j].score <= tol:
                j += 1
        else:
            while j < n and not np.isfinite(entries[j].score):
                j += 1
        groups.append((i, j))
        i = j
    return groups
