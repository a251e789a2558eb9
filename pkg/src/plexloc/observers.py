"""Observer placement and observation extraction from infection records.

Observers are physical nodes sampled per layer; an observer reports the
first-infection time of its replica in its own layer only.  The estimator
consumes relative delays against a reference observer, so realizations
where fewer than two observers got infected carry no usable signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import MultiplexGraph, ReplicaId
from .spreading import InfectionRecord


class UnusableRealizationError(Exception):
    """Raised when fewer than two observers were infected."""


@dataclass(frozen=True)
class ObserverSet:
    """Chosen observer replicas, one entry per (node, layer) pick."""

    replicas: tuple[ReplicaId, ...]

    def __post_init__(self):
        if len(set(self.replicas)) != len(self.replicas):
            raise ValueError("duplicate observer replicas")


@dataclass(frozen=True)
class DelayVector:
    """Observations in estimator form.

    ``reference`` is the earliest-infected observer o_1; ``reporting`` are
    the remaining infected observers in ascending flat order; ``delays``
    holds their infection times minus the reference time, aligned with
    ``reporting``.
    """

    reference: ReplicaId
    reporting: tuple[ReplicaId, ...]
    delays: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delays", np.asarray(self.delays, dtype=np.float64))
        if self.delays.shape != (len(self.reporting),):
            raise ValueError("delays must align with reporting observers")


def observer_count(n_l: int, density: float) -> int:
    """Observers per layer: round density * n_l half-up, at least 1.

    The tiny epsilon absorbs binary representation error so values that
    are exactly a half in decimal (e.g. 0.15 * 30) round up as intended.
    """
    if not (0.0 < density <= 1.0):
        raise ValueError(f"observer density {density} outside (0, 1]")
    return max(1, int(np.floor(density * n_l + 0.5 + 1e-9)))


def place_observers(g: MultiplexGraph, densities: tuple[float, ...] | float,
                    rng: np.random.Generator) -> ObserverSet:
    """Sample observer nodes uniformly without replacement, per layer.

    A scalar density applies to every layer; a tuple gives one density per
    layer.  Layers are sampled in order, so the draw sequence is fixed.
    """
    L = g.layer_count
    n_l = g.nodes_per_layer
    if np.isscalar(densities):
        dens = (float(densities),) * L
    else:
        dens = tuple(float(d) for d in densities)
        if len(dens) != L:
            raise ValueError(f"{len(dens)} densities for {L} layers")
    picks: list[ReplicaId] = []
    for layer, rho in enumerate(dens):
        k = observer_count(n_l, rho)
        nodes = rng.choice(n_l, size=k, replace=False)
        picks.extend(ReplicaId(node=int(u), layer=layer) for u in np.sort(nodes))
    return ObserverSet(replicas=tuple(picks))


def build_delay_vector(obs: ObserverSet, rec: InfectionRecord,
                       g: MultiplexGraph) -> DelayVector:
    """Reduce a record to relative delays at the infected observers.

    Uninfected observers are dropped.  The reference is the infected
    observer with the smallest time, breaking ties by flat index; the rest
    report in ascending flat order.  Raises UnusableRealizationError when
    fewer than two observers were reached.
    """
    flats = np.array([g.flat_index(r) for r in obs.replicas], dtype=np.int64)
    flats = np.sort(flats)
    t = rec.times[flats]
    hit = t >= 0
    if int(hit.sum()) < 2:
        raise UnusableRealizationError(
            f"only {int(hit.sum())} observer(s) infected, need at least 2"
        )
    flats = flats[hit]
    t = t[hit]
    ref_pos = int(np.lexsort((flats, t))[0])
    keep = np.ones(flats.size, dtype=bool)
    keep[ref_pos] = False
    return DelayVector(
        reference=g.replica(int(flats[ref_pos])),
        reporting=tuple(g.replica(int(f)) for f in flats[keep]),
        delays=(t[keep] - t[ref_pos]).astype(np.float64),
    )


def delay_vector_from_times(observations: list[tuple[ReplicaId, int]],
                            g: MultiplexGraph) -> DelayVector:
    """Build a DelayVector from explicit (replica, time) observations.

    Entry point for externally supplied observation files; applies the
    same reference and ordering policy as build_delay_vector.
    """
    if len(observations) < 2:
        raise UnusableRealizationError(
            f"only {len(observations)} observation(s), need at least 2"
        )
    flats = np.array([g.flat_index(r) for r, _ in observations], dtype=np.int64)
    if np.unique(flats).size != flats.size:
        raise ValueError("duplicate observer replicas in observations")
    t = np.array([tt for _, tt in observations], dtype=np.int64)
    order = np.argsort(flats)
    flats, t = flats[order], t[order]
    ref_pos = int(np.lexsort((flats, t))[0])
    keep = np.ones(flats.size, dtype=bool)
    keep[ref_pos] = False
    return DelayVector(
        reference=g.replica(int(flats[ref_pos])),
        reporting=tuple(g.replica(int(f)) for f in flats[keep]),
        delays=(t[keep] - t[ref_pos]).astype(np.float64),
    )
