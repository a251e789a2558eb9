"""Precision and credible-set-size metrics over many localization tests.

One test produces a ranking; its precision is tp/(tp+fp) over the top tie
group (so a unique correct top scores 1, a k-way tie containing the source
scores 1/k).  The rank of the true source is pessimistic: it is placed
last within its tie group.  The alpha-CSS is the alpha-quantile of ranks:
the smallest k such that at least a fraction alpha of tests ranked the
source within the top k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import ReplicaId
from .locator import SourceRanking


@dataclass(frozen=True)
class TestOutcome:
    """Everything the metrics need from one localization test.

    ``node_matches_in_top`` counts top-tie candidates whose physical node
    index equals the true source's, for node-level (layer-ignoring)
    precision.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    true_source: ReplicaId
    top_tie_size: int
    source_in_top: bool
    source_rank: int
    node_matches_in_top: int = 0

    def __post_init__(self):
        if self.top_tie_size < 1:
            raise ValueError("top_tie_size must be >= 1")
        if self.source_rank < 1:
            raise ValueError("source_rank must be >= 1")
        if self.source_in_top and self.source_rank > self.top_tie_size:
            raise ValueError("source in top group but rank exceeds its size")


@dataclass(frozen=True)
class MetricsSummary:
    avg_precision: float
    css: dict[float, int]
    n_tests: int
    discarded: int
    avg_node_precision: float | None = None


def precision_single(outcome: TestOutcome) -> float:
    """tp/(tp+fp) with the top tie group as the found set: 1/|top| or 0."""
    return 1.0 / outcome.top_tie_size if outcome.source_in_top else 0.0


def node_precision_single(outcome: TestOutcome) -> float:
    """Like precision_single but counting node-index matches as correct."""
    return outcome.node_matches_in_top / outcome.top_tie_size


def source_rank(ranking: SourceRanking, true_source: ReplicaId) -> int:
    """Pessimistic rank: candidates strictly above plus the source's whole tie group."""
    return ranking.rank_of(true_source)


def css(ranks: list[int] | np.ndarray, alpha: float) -> int:
    """Smallest k with (fraction of ranks <= k) >= alpha.

    Equals the lower empirical alpha-quantile: the ceil guards against
    binary representation of alpha * n landing a hair above an integer
    (e.g. 0.95 * 100) and pulling in one rank too many.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.size == 0:
        raise ValueError("css needs at least one rank")
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha {alpha} outside (0, 1]")
    m = int(math.ceil(alpha * ranks.size - 1e-9))
    m = max(1, min(m, ranks.size))
    return int(np.sort(ranks)[m - 1])


def outcome_from_ranking(ranking: SourceRanking,
                         true_source: ReplicaId) -> TestOutcome:
    top = ranking.top_group()
    return TestOutcome(
        true_source=true_source,
        top_tie_size=len(top),
        source_in_top=true_source in top,
        source_rank=ranking.rank_of(true_source),
        node_matches_in_top=sum(1 for c in top if c.node == true_source.node),
    )


def summarize(outcomes: list[TestOutcome], alphas: tuple[float, ...] = (0.95,),
              discarded: int = 0) -> MetricsSummary:
    if not outcomes:
        raise ValueError("summarize needs at least one outcome")
    ranks = [o.source_rank for o in outcomes]
    return MetricsSummary(
        avg_precision=float(np.mean([precision_single(o) for o in outcomes])),
        css={a: css(ranks, a) for a in alphas},
        n_tests=len(outcomes),
        discarded=discarded,
        avg_node_precision=float(
            np.mean([node_precision_single(o) for o in outcomes])
        ),
    )
