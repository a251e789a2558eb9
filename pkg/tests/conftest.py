"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from plexloc.graphs import LayerGraph, MultiplexGraph


def make_multiplex(layers_edges: list[list[tuple[int, int]]],
                   n_l: int) -> MultiplexGraph:
    """Build a multiplex from explicit per-layer intra edge lists."""
    layers = [
        LayerGraph(layer_id=i, node_count=n_l,
                   edges=np.array(edges, dtype=np.int64).reshape(-1, 2))
        for i, edges in enumerate(layers_edges)
    ]
    return MultiplexGraph(layers=layers)


def random_layer_edges(rng: np.random.Generator, n_l: int,
                       p: float) -> list[tuple[int, int]]:
    """Random G(n, p) edge list over [0, n_l)."""
    edges = []
    for u in range(n_l):
        for v in range(u + 1, n_l):
            if rng.random() < p:
                edges.append((u, v))
    return edges


def random_multiplex(rng: np.random.Generator, layer_count: int, n_l: int,
                     p: float = 0.5) -> MultiplexGraph:
    return make_multiplex(
        [random_layer_edges(rng, n_l, p) for _ in range(layer_count)], n_l
    )


@pytest.fixture(scope="session")
def compiled_kernels():
    """Force one tiny ranking through the compiled path so per-test timing
    does not include kernel compilation."""
    from plexloc.locator import rank_sources, shortest_path_cache
    from plexloc.observers import build_delay_vector
    from plexloc.spreading import SpreadParams, delay_moments, simulate
    from plexloc.graphs import ReplicaId

    g = make_multiplex([[(0, 1), (1, 2)], [(0, 2)]], 3)
    params = SpreadParams(intra=(0.9, 0.9), inter=0.9)
    moments = delay_moments(params, 2)
    rng = np.random.default_rng(0)
    rec = simulate(g, params, ReplicaId(0, 0), rng)
    from plexloc.observers import ObserverSet
    obs = ObserverSet(replicas=(ReplicaId(1, 0), ReplicaId(2, 1)))
    dv = build_delay_vector(obs, rec, g)
    rank_sources(g, moments, dv)
    return True
