"""Discrete-time SI spreading on a multiplex graph.

Each time step, every directed edge from an infected replica to a
susceptible one transmits independently with a per-edge-class probability.
Transmission along an edge therefore takes a geometric number of steps
(support {1, 2, ...}), with mean 1/beta and variance (1 - beta) / beta^2
for success probability beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphs import MultiplexGraph, ReplicaId


@dataclass(frozen=True)
class SpreadParams:
    """Per-edge-class transmission probabilities.

    ``intra`` holds one probability per layer (edge class l transmits with
    intra[l]); ``inter`` applies to replica interlinks (edge class L).
    """

    intra: tuple[float, ...]
    inter: float

    def __post_init__(self):
        object.__setattr__(self, "intra", tuple(float(b) for b in self.intra))
        object.__setattr__(self, "inter", float(self.inter))
        for b in (*self.intra, self.inter):
            if not (0.0 < b <= 1.0):
                raise ValueError(f"transmission probability {b} outside (0, 1]")

    def per_class(self, layer_count: int) -> np.ndarray:
        """Probabilities indexed by edge class: [intra_0..intra_{L-1}, inter]."""
        if len(self.intra) != layer_count:
            raise ValueError(
                f"{len(self.intra)} intra-layer probabilities for {layer_count} layers"
            )
        return np.array([*self.intra, self.inter], dtype=np.float64)


@dataclass(frozen=True)
class DelayMoments:
    """Mean and variance of per-edge transmission delay, indexed by edge class."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "var", np.asarray(self.var, dtype=np.float64))
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise ValueError("mean and var must be 1-d arrays of equal length")


def delay_moments(params: SpreadParams, layer_count: int) -> DelayMoments:
    """Geometric delay moments per edge class: mean 1/b, variance (1-b)/b^2."""
    beta = params.per_class(layer_count)
    return DelayMoments(mean=1.0 / beta, var=(1.0 - beta) / beta**2)


def default_horizon(g: MultiplexGraph, params: SpreadParams) -> int:
    """Step budget that comfortably covers diffusion across the whole graph."""
    mu_max = float(np.max(1.0 / params.per_class(g.layer_count)))
    diam_proxy = int(np.ceil(2 * np.log2(max(g.total_replicas, 2))))
    return max(1000, int(np.ceil(20.0 * mu_max * diam_proxy)))


@dataclass
class InfectionRecord:
    """Outcome of one simulation: first-infection step per replica, -1 if never."""

    source: ReplicaId
    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)

    def infected_mask(self) -> np.ndarray:
        return self.times >= 0

    def infected_count(self) -> int:
        return int(self.infected_mask().sum())


def simulate(g: MultiplexGraph, params: SpreadParams, source: ReplicaId,
             rng: np.random.Generator, t_max: int | None = None) -> InfectionRecord:
    """Run synchronous SI spread from one source replica.

    Every step draws one uniform per susceptible-adjacent directed edge, in
    the fixed (src, dst) lexicographic order of the edge arrays, so the
    trajectory is a pure function of (graph, params, source, rng state).
    Stops when no edge can transmit, everyone is infected, or t_max steps
    have run.
    """
    if t_max is None:
        t_max = default_horizon(g, params)
    beta_class = params.per_class(g.layer_count)
    src, dst, ecl = g._directed_edges
    beta_edge = beta_class[ecl]
    n = g.total_replicas
    times = np.full(n, -1, dtype=np.int64)
    times[g.flat_index(source)] = 0
    infected = times >= 0
    for t in range(1, t_max + 1):
        active = infected[src] & ~infected[dst]
        n_active = int(active.sum())
        if n_active == 0:
            break
        u = rng.random(n_active)
        hit_dst = dst[active][u < beta_edge[active]]
        if hit_dst.size:
            newly = np.unique(hit_dst)
            times[newly] = t
            infected[newly] = True
            if infected.all():
                break
    return InfectionRecord(source=source, times=times)


def save_record(rec: InfectionRecord, g: MultiplexGraph, path: str | Path) -> None:
    """Write 'layer node time' per infected replica, flat order; header names the source."""
    lines = [f"# source {rec.source.layer} {rec.source.node}"]
    for flat in np.flatnonzero(rec.infected_mask()):
        r = g.replica(int(flat))
        lines.append(f"{r.layer} {r.node} {rec.times[flat]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_record(path: str | Path, g: MultiplexGraph) -> InfectionRecord:
    """Read the 'layer node time' format back into a full -1-padded record."""
    times = np.full(g.total_replicas, -1, dtype=np.int64)
    source = None
    for ln in Path(path).read_text().strip().splitlines():
        if ln.startswith("#"):
            parts = ln.split()
            if len(parts) == 4 and parts[1] == "source":
                source = ReplicaId(node=int(parts[3]), layer=int(parts[2]))
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed line {ln!r}")
        lay, node, t = (int(x) for x in parts)
        times[g.flat_index(ReplicaId(node=node, layer=lay))] = t
    if source is None:
        zero = np.flatnonzero(times == 0)
        if zero.size != 1:
            raise ValueError(f"{path}: no source header and no unique time-0 replica")
        source = g.replica(int(zero[0]))
    return InfectionRecord(source=source, times=times)
