"""Compiled hot loops for the source estimator.

Scoring every replica of a graph against one observation is the dominant
cost of an experiment, so the per-candidate work (predecessor chains,
covariance assembly, positive-definite solve) lives here as numba kernels
operating on flat arrays.  The readable reference implementations in
``locator`` define the semantics; tests pin these kernels to them.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Relative tolerance for "same shortest-path distance" when choosing
# predecessors; edge weights are >= 1 so this never merges distinct paths.
DIST_TIE_REL = 1e-9

# Ridge added to the covariance diagonal before factorization.
RIDGE_REL = 1e-9
RIDGE_ABS = 1e-12


@njit(cache=True)
def tie_broken_predecessors(indptr, indices, w, dist):
    """Per-root shortest-path predecessors with deterministic tie-breaking.

    For every root v and reachable node x != v, pred[v, x] is the lowest
    flat-index neighbor u of x with dist[v, u] + w(u, x) == dist[v, x] up
    to DIST_TIE_REL.  Rows of the CSR adjacency are ascending, so the
    first matching neighbor is the lowest-index one.  Unreachable nodes
    and roots themselves get -1.
    """
    n = dist.shape[0]
    pred = np.full((n, n), -1, dtype=np.int64)
    for v in range(n):
        for x in range(n):
            if x == v:
                continue
            dx = dist[v, x]
            if not np.isfinite(dx):
                continue
            tol = DIST_TIE_REL * max(1.0, abs(dx))
            for k in range(indptr[x], indptr[x + 1]):
                u = indices[k]
                if abs(dist[v, u] + w[k] - dx) <= tol:
                    pred[v, x] = u
                    break
    return pred


@njit(cache=True)
def score_all_candidates(dist, pred, n_l, layer_count, var_by_class, obs, d):
    """Estimator score for every candidate replica.

    ``obs`` holds flat observer indices with the reference first; ``d``
    holds the b-1 relative delays.  For candidate v the observer chains
    in the predecessor tree give the covariance through a Gram identity:
    with R_a the edge set of the tree path v -> obs[a] and
    G[a, c] = sum of per-edge delay variance over R_a intersect R_c, the
    covariance of relative delays is
    Lam[i, j] = G[i+1, j+1] + G[0, 0] - G[i+1, 0] - G[0, j+1],
    which equals the shared-variance weight of the in-tree paths
    obs[i+1] -> obs[0] and obs[j+1] -> obs[0].  Candidates that cannot
    reach every observer, or whose ridged covariance is not positive
    definite, score -inf.

    Returns (scores, mu) with mu[v] the deterministic relative delays.
    """
    n = dist.shape[0]
    n_obs = obs.size
    b1 = n_obs - 1
    scores = np.full(n, -np.inf)
    mu = np.zeros((n, b1))
    gram = np.empty((n_obs, n_obs))
    lam = np.empty((b1, b1))
    muv = np.empty(b1)
    rhs = np.empty(b1)
    fwd = np.empty(b1)
    # per-node list of observers whose chain passes through that node
    node_obs = np.empty((n, n_obs), dtype=np.int64)
    node_cnt = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    for v in range(n):
        reachable = True
        for b in range(n_obs):
            if not np.isfinite(dist[v, obs[b]]):
                reachable = False
                break
        if not reachable:
            continue
        n_touched = 0
        for b in range(n_obs):
            x = obs[b]
            while x != v:
                if node_cnt[x] == 0:
                    touched[n_touched] = x
                    n_touched += 1
                node_obs[x, node_cnt[x]] = b
                node_cnt[x] += 1
                x = pred[v, x]
        for a in range(n_obs):
            for c in range(n_obs):
                gram[a, c] = 0.0
        for idx in range(n_touched):
            x = touched[idx]
            p = pred[v, x]
            if x // n_l == p // n_l:
                var = var_by_class[x // n_l]
            else:
                var = var_by_class[layer_count]
            m = node_cnt[x]
            for ia in range(m):
                a = node_obs[x, ia]
                for ic in range(m):
                    gram[a, node_obs[x, ic]] += var
            node_cnt[x] = 0
        for i in range(b1):
            muv[i] = dist[v, obs[i + 1]] - dist[v, obs[0]]
            mu[v, i] = muv[i]
            for j in range(b1):
                lam[i, j] = (gram[i + 1, j + 1] + gram[0, 0]
                             - gram[i + 1, 0] - gram[0, j + 1])
        max_diag = 0.0
        for i in range(b1):
            if lam[i, i] > max_diag:
                max_diag = lam[i, i]
        eps = RIDGE_REL * max_diag
        if eps < RIDGE_ABS:
            eps = RIDGE_ABS
        for i in range(b1):
            lam[i, i] += eps
        # in-place lower Cholesky with pivot check
        spd = True
        for i in range(b1):
            for j in range(i + 1):
                acc = lam[i, j]
                for k in range(j):
                    acc -= lam[i, k] * lam[j, k]
                if i == j:
                    if acc <= 0.0:
                        spd = False
                        break
                    lam[i, i] = np.sqrt(acc)
                else:
                    lam[i, j] = acc / lam[j, j]
            if not spd:
                break
        if not spd:
            continue
        for i in range(b1):
            rhs[i] = d[i] - 0.5 * muv[i]
        for i in range(b1):
            acc = rhs[i]
            for k in range(i):
                acc -= lam[i, k] * fwd[k]
            fwd[i] = acc / lam[i, i]
        for i in range(b1 - 1, -1, -1):
            acc = fwd[i]
            for k in range(i + 1, b1):
                acc -= lam[k, i] * rhs[k]
            rhs[i] = acc / lam[i, i]
        total = 0.0
        for i in range(b1):
            total += muv[i] * rhs[i]
        if np.isfinite(total):
            scores[v] = total
    return scores, mu
