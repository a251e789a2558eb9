"""Multiplex graph construction: independently generated layers coupled by replica links.

A multiplex graph consists of L layers, each with the same number of nodes
n_l.  Node u in layer a and node u in layer b are "replicas" (images) of the
same physical node and are always connected by an inter-layer link.  There
are no other inter-layer links.  Intra-layer topology comes from standard
random graph models (Erdos-Renyi or Barabasi-Albert).

Replicas are addressed either as (node, layer) pairs or as a flat index
layer * n_l + node, which enumerates layer 0 first, then layer 1, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np


class GraphModel(str, Enum):
    ER = "ER"
    BA = "BA"
    CUSTOM = "custom"


class ReplicaId(NamedTuple):
    """One image of a physical node inside a specific layer."""

    node: int
    layer: int


@dataclass(eq=False)
class LayerGraph:
    """Undirected intra-layer topology of one layer.

    ``edges`` is kept canonical: shape (m, 2) with u < v in every row and
    rows sorted lexicographically.  This makes serialization byte-stable.
    """

    layer_id: int
    node_count: int
    edges: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.edges.size:
            lo = self.edges.min(axis=1)
            hi = self.edges.max(axis=1)
            if lo.min() < 0 or hi.max() >= self.node_count:
                raise ValueError("edge endpoint out of range [0, node_count)")
            if (lo == hi).any():
                raise ValueError("self-loops are not allowed")
            canon = np.stack([lo, hi], axis=1)
            canon = canon[np.lexsort((canon[:, 1], canon[:, 0]))]
            if (np.diff(canon, axis=0) == 0).all(axis=1).any():
                raise ValueError("duplicate edges are not allowed")
            self.edges = canon

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg


@dataclass(eq=False)
class MultiplexGraph:
    """L coupled layers plus the implied all-replica interlinks.

    Interlinks are never stored: every node u is linked to each of its
    images, so the interlink set is fully determined by (L, n_l).

    Edge classes are encoded as integers: class ``l`` in [0, L) is an
    intra-layer edge of layer ``l``; class ``L`` is an inter-layer link.
    Immutable after construction (cached adjacency arrays are shared
    freely across workers).
    """

    layers: list[LayerGraph]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("at least one layer is required")
        n0 = self.layers[0].node_count
        for i, lg in enumerate(self.layers):
            if lg.node_count != n0:
                raise ValueError(
                    f"layer {i} has {lg.node_count} nodes, expected {n0}"
                )
            if lg.layer_id != i:
                raise ValueError(f"layer at position {i} carries layer_id {lg.layer_id}")

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    @property
    def nodes_per_layer(self) -> int:
        return self.layers[0].node_count

    @property
    def total_replicas(self) -> int:
        return self.layer_count * self.nodes_per_layer

    @property
    def inter_class(self) -> int:
        """Edge-class index used for inter-layer links (== layer_count)."""
        return self.layer_count

    @property
    def interlink_count(self) -> int:
        L = self.layer_count
        return self.nodes_per_layer * (L * (L - 1)) // 2

    @property
    def intra_edge_count(self) -> int:
        return sum(lg.edge_count for lg in self.layers)

    def flat_index(self, r: ReplicaId) -> int:
        node, layer = r
        n_l = self.nodes_per_layer
        if not (0 <= layer < self.layer_count and 0 <= node < n_l):
            raise ValueError(f"replica {r} out of range")
        return layer * n_l + node

    def replica(self, flat: int) -> ReplicaId:
        if not (0 <= flat < self.total_replicas):
            raise ValueError(f"flat index {flat} out of range")
        n_l = self.nodes_per_layer
        return ReplicaId(node=flat % n_l, layer=flat // n_l)

    @cached_property
    def _directed_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All edges as directed pairs (src, dst, eclass), lexsorted by (src, dst)."""
        n_l = self.nodes_per_layer
        L = self.layer_count
        srcs, dsts, cls = [], [], []
        for lg in self.layers:
            if lg.edge_count:
                off = lg.layer_id * n_l
                u = lg.edges[:, 0] + off
                v = lg.edges[:, 1] + off
                srcs.append(u)
                dsts.append(v)
                cls.append(np.full(u.size, lg.layer_id, dtype=np.int64))
        nodes = np.arange(n_l, dtype=np.int64)
        for a in range(L):
            for b in range(a + 1, L):
                srcs.append(nodes + a * n_l)
                dsts.append(nodes + b * n_l)
                cls.append(np.full(n_l, L, dtype=np.int64))
        if srcs:
            s = np.concatenate(srcs)
            d = np.concatenate(dsts)
            c = np.concatenate(cls)
        else:
            s = d = c = np.zeros(0, dtype=np.int64)
        src = np.concatenate([s, d])
        dst = np.concatenate([d, s])
        ecl = np.concatenate([c, c])
        order = np.lexsort((dst, src))
        return src[order], dst[order], ecl[order]

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR adjacency over flat indices: (indptr, indices, eclass per entry)."""
        src, dst, ecl = self._directed_edges
        n = self.total_replicas
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, dst, ecl

    def neighbors(self, r: ReplicaId) -> list[tuple[ReplicaId, int]]:
        """Neighbors of a replica with edge classes, ascending by flat index.

        Returns (neighbor, eclass) pairs where eclass < layer_count marks an
        intra-layer edge of that layer and eclass == layer_count an interlink.
        """
        flat = self.flat_index(r)
        indptr, indices, ecl = self._csr
        lo, hi = indptr[flat], indptr[flat + 1]
        return [
            (self.replica(int(indices[k])), int(ecl[k])) for k in range(lo, hi)
        ]


@dataclass(frozen=True)
class GraphGenSpec:
    """Everything needed to reproduce one multiplex graph."""

    model: GraphModel
    layer_count: int
    nodes_per_layer: int
    mean_degree: float
    seed: int

    def __post_init__(self):
        if self.layer_count < 1:
            raise ValueError("layer_count must be >= 1")
        if self.nodes_per_layer < 2:
            raise ValueError("nodes_per_layer must be >= 2")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        model = GraphModel(self.model)
        object.__setattr__(self, "model", model)
        if model is GraphModel.ER:
            p = self.mean_degree / (self.nodes_per_layer - 1)
            if not (0.0 < p <= 1.0):
                raise ValueError(
                    f"ER edge probability {p:.4g} outside (0, 1]; "
                    f"need 0 < mean_degree <= nodes_per_layer - 1"
                )
        elif model is GraphModel.BA:
            m = self.ba_attachment
            if not (1 <= m < self.nodes_per_layer):
                raise ValueError(
                    f"BA attachment count {m} outside [1, nodes_per_layer)"
                )

    @property
    def ba_attachment(self) -> int:
        return int(np.floor(self.mean_degree / 2 + 0.5))


def generate_er_layer(n: int, k_avg: float, rng: np.random.Generator,
                      layer_id: int = 0) -> LayerGraph:
    """G(n, p) layer with p = k_avg / (n - 1): every pair is an edge independently."""
    if n < 2:
        raise ValueError("n must be >= 2")
    p = k_avg / (n - 1)
    if not (0.0 < p <= 1.0):
        raise ValueError(f"k_avg={k_avg} gives edge probability {p:.4g} outside (0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    edges = np.stack([iu[mask], ju[mask]], axis=1)
    return LayerGraph(layer_id=layer_id, node_count=n, edges=edges)


def generate_ba_layer(n: int, m: int, rng: np.random.Generator,
                      layer_id: int = 0) -> LayerGraph:
    """Preferential-attachment layer grown from an m-clique seed.

    Nodes 0..m-1 start fully connected; each later node j attaches to m
    distinct existing nodes drawn proportionally to current degree.  Node
    labels equal insertion order, so two layers generated independently
    still correlate hub positions when they share labels.
    """
    if not (1 <= m < n):
        raise ValueError("need 1 <= m < n")
    edges: list[tuple[int, int]] = [(a, b) for a in range(m) for b in range(a + 1, m)]
    # one entry per edge endpoint; sampling it uniformly is degree-biased sampling
    endpoint_pool: list[int] = [v for e in edges for v in e]
    for j in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            if endpoint_pool:
                pick = endpoint_pool[rng.integers(0, len(endpoint_pool))]
            else:
                # only reachable on the very first attachment with m == 1
                pick = int(rng.integers(0, j))
            targets.add(int(pick))
        for t in sorted(targets):
            edges.append((t, j))
            endpoint_pool.extend((t, j))
    return LayerGraph(layer_id=layer_id, node_count=n,
                      edges=np.array(edges, dtype=np.int64).reshape(-1, 2))


def couple_multiplex(layers: list[LayerGraph]) -> MultiplexGraph:
    """Assemble layers into a multiplex; interlinks are implied, one per replica pair."""
    relabeled = [
        LayerGraph(layer_id=i, node_count=lg.node_count, edges=lg.edges)
        for i, lg in enumerate(layers)
    ]
    return MultiplexGraph(layers=relabeled)


def generate_multiplex(spec: GraphGenSpec) -> MultiplexGraph:
    """Generate L independent layers per the spec and couple them."""
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.layer_count)
    layers = []
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        if spec.model is GraphModel.ER:
            layers.append(generate_er_layer(spec.nodes_per_layer, spec.mean_degree,
                                            rng, layer_id=i))
        elif spec.model is GraphModel.BA:
            layers.append(generate_ba_layer(spec.nodes_per_layer, spec.ba_attachment,
                                            rng, layer_id=i))
        else:
            raise ValueError(f"cannot generate model {spec.model}")
    return MultiplexGraph(layers=layers)


def save_graph(g: MultiplexGraph, path: str | Path,
               model: GraphModel = GraphModel.CUSTOM, seed: int = 0) -> None:
    """Write the line-oriented text format: header 'L n_l model seed', then 'layer u v'."""
    lines = [f"{g.layer_count} {g.nodes_per_layer} {GraphModel(model).value} {seed}"]
    for lg in g.layers:
        for u, v in lg.edges:
            lines.append(f"{lg.layer_id} {u} {v}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path) -> tuple[MultiplexGraph, GraphModel, int]:
    """Read the text format back; returns (graph, model, seed)."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty graph file")
    head = text[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: malformed header {text[0]!r}")
    L, n_l = int(head[0]), int(head[1])
    model = GraphModel(head[2])
    seed = int(head[3])
    per_layer: list[list[tuple[int, int]]] = [[] for _ in range(L)]
    for ln in text[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed edge line {ln!r}")
        lay, u, v = (int(x) for x in parts)
        if not (0 <= lay < L):
            raise ValueError(f"{path}: layer {lay} out of range")
        per_layer[lay].append((u, v))
    layers = [
        LayerGraph(layer_id=i, node_count=n_l,
                   edges=np.array(es, dtype=np.int64).reshape(-1, 2))
        for i, es in enumerate(per_layer)
    ]
    return MultiplexGraph(layers=layers), model, seed
