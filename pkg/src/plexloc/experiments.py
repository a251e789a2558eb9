"""Seeded Monte Carlo experiment harness.

A config names a template (which experiment family to run), overrides for
its axes, and a master seed.  Each grid point runs R independent
realizations: fresh graph, fresh observers, random source in the source
layer, one simulated spread, one ranking, one outcome.  Every realization
derives its RNG from (master_seed, point index, realization index,
attempt), so results are reproducible regardless of thread count or
scheduling, and any single realization can be replayed in isolation.

Realizations whose spread reached fewer than two observers carry no
signal; they are discarded, counted, and redrawn (bounded attempts), so
every point aggregates exactly R usable tests.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .graphs import GraphGenSpec, GraphModel, MultiplexGraph, ReplicaId, \
    generate_multiplex
from .locator import ShortestPathCache, rank_sources, shortest_path_cache
from .metrics import MetricsSummary, TestOutcome, outcome_from_ranking, summarize
from .observers import UnusableRealizationError, build_delay_vector, place_observers
from .spreading import SpreadParams, delay_moments, simulate

TEMPLATES = ("rate_grid", "density_grid", "layers_fixed_nl", "layers_fixed_ntot")

RATE_AXIS_DEFAULT = tuple(round(0.1 * i, 10) for i in range(1, 10))
BETA_INTER_DEFAULT = (0.1, 0.5, 0.9)
DENSITY_AXIS_DEFAULT = tuple(round(0.02 * i, 10) for i in range(1, 11))
LAYERS_FIXED_NL_DEFAULT = (1, 2, 3, 4)
LAYERS_FIXED_NTOT_DEFAULT = (1, 2, 4)


class ConfigError(Exception):
    """Invalid experiment config; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"config field '{field_name}': {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Template name plus overrides; None leaves a template default in place."""

    template: str
    model: str = "ER"
    nodes_per_layer: int | None = None
    mean_degree: float = 8.0
    realizations: int = 1000
    master_seed: int = 0
    alphas: tuple[float, ...] = (0.95,)
    source_layer: int = 0
    fixed_graph: bool = False
    node_level: bool = False
    max_attempts: int = 50
    beta_intra: float = 0.5
    beta1_values: tuple[float, ...] | None = None
    beta2_values: tuple[float, ...] | None = None
    beta_inter_values: tuple[float, ...] | None = None
    beta_inter: float = 0.8
    rho: float = 0.1
    rho1_values: tuple[float, ...] | None = None
    rho2_values: tuple[float, ...] | None = None
    layer_values: tuple[int, ...] | None = None
    n_tot: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown field")
        if "template" not in raw:
            raise ConfigError("template", "required")
        if raw["template"] not in TEMPLATES:
            raise ConfigError(
                "template", f"{raw['template']!r} not one of {TEMPLATES}"
            )
        clean = dict(raw)
        for key in ("alphas", "beta1_values", "beta2_values",
                    "beta_inter_values", "rho1_values", "rho2_values"):
            if clean.get(key) is not None:
                try:
                    clean[key] = tuple(float(x) for x in clean[key])
                except (TypeError, ValueError):
                    raise ConfigError(key, "must be a list of numbers") from None
        if clean.get("layer_values") is not None:
            try:
                clean["layer_values"] = tuple(int(x) for x in clean["layer_values"])
            except (TypeError, ValueError):
                raise ConfigError("layer_values",
                                  "must be a list of integers") from None
        try:
            cfg = cls(**clean)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
        return cls.from_dict(raw)

    def validate(self) -> None:
        if self.template not in TEMPLATES:
            raise ConfigError("template",
                              f"{self.template!r} not one of {TEMPLATES}")
        try:
            GraphModel(self.model)
        except ValueError:
            raise ConfigError("model", f"{self.model!r} not ER or BA") from None
        if GraphModel(self.model) is GraphModel.CUSTOM:
            raise ConfigError("model", "must be a generatable model (ER or BA)")
        if self.realizations < 1:
            raise ConfigError("realizations", "must be >= 1")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts", "must be >= 1")
        if not (0 <= self.master_seed < 2**63):
            raise ConfigError("master_seed", "must fit in 63 unsigned bits")
        if self.nodes_per_layer is not None and self.nodes_per_layer < 2:
            raise ConfigError("nodes_per_layer", "must be >= 2")
        if self.mean_degree <= 0:
            raise ConfigError("mean_degree", "must be > 0")
        for name, vals in (("alphas", self.alphas),):
            for a in vals:
                if not (0.0 < a <= 1.0):
                    raise ConfigError(name, f"value {a} outside (0, 1]")
        for name in ("beta1_values", "beta2_values", "beta_inter_values"):
            vals = getattr(self, name)
            if vals is not None:
                if not vals:
                    raise ConfigError(name, "must be non-empty")
                for b in vals:
                    if not (0.0 < b <= 1.0):
                        raise ConfigError(name, f"value {b} outside (0, 1]")
        for name in ("rho1_values", "rho2_values"):
            vals = getattr(self, name)
            if vals is not None:
                if not vals:
                    raise ConfigError(name, "must be non-empty")
                for r in vals:
                    if not (0.0 < r <= 1.0):
                        raise ConfigError(name, f"value {r} outside (0, 1]")
        if not (0.0 < self.beta_intra <= 1.0):
            raise ConfigError("beta_intra", "must be in (0, 1]")
        if not (0.0 < self.beta_inter <= 1.0):
            raise ConfigError("beta_inter", "must be in (0, 1]")
        if not (0.0 < self.rho <= 1.0):
            raise ConfigError("rho", "must be in (0, 1]")
        if self.layer_values is not None:
            if not self.layer_values:
                raise ConfigError("layer_values", "must be non-empty")
            for L in self.layer_values:
                if L < 1:
                    raise ConfigError("layer_values", f"layer count {L} < 1")
        if self.n_tot is not None and self.n_tot < 2:
            raise ConfigError("n_tot", "must be >= 2")
        if self.source_layer < 0:
            raise ConfigError("source_layer", "must be >= 0")


@dataclass(frozen=True)
class ExperimentPoint:
    """One grid point: CSV coordinates plus everything a realization needs."""

    coords: tuple[tuple[str, float | int], ...]
    model: GraphModel
    layer_count: int
    nodes_per_layer: int
    mean_degree: float
    beta_intra: tuple[float, ...]
    beta_inter: float
    rho: tuple[float, ...]
    source_layer: int


@dataclass(frozen=True)
class ResultRow:
    coords: tuple[tuple[str, float | int], ...]
    summary: MetricsSummary


def _default_nodes_per_layer(cfg: ExperimentConfig) -> int:
    if cfg.nodes_per_layer is not None:
        return cfg.nodes_per_layer
    if cfg.template == "rate_grid":
        return 1000 if GraphModel(cfg.model) is GraphModel.ER else 500
    return 500


def expand_points(cfg: ExperimentConfig) -> list[ExperimentPoint]:
    """Materialize the template's grid, rows sorted by coordinates."""
    model = GraphModel(cfg.model)
    points: list[ExperimentPoint] = []
    if cfg.template == "rate_grid":
        if cfg.source_layer >= 2:
            raise ConfigError("source_layer", "rate_grid is a duplex template")
        n_l = _default_nodes_per_layer(cfg)
        b1s = sorted(cfg.beta1_values or RATE_AXIS_DEFAULT)
        b2s = sorted(cfg.beta2_values or RATE_AXIS_DEFAULT)
        bis = sorted(cfg.beta_inter_values or BETA_INTER_DEFAULT)
        for b1 in b1s:
            for b2 in b2s:
                for bi in bis:
                    points.append(ExperimentPoint(
                        coords=(("beta1", b1), ("beta2", b2), ("beta_inter", bi)),
                        model=model, layer_count=2, nodes_per_layer=n_l,
                        mean_degree=cfg.mean_degree, beta_intra=(b1, b2),
                        beta_inter=bi, rho=(cfg.rho, cfg.rho),
                        source_layer=cfg.source_layer,
                    ))
    elif cfg.template == "density_grid":
        if cfg.source_layer >= 2:
            raise ConfigError("source_layer", "density_grid is a duplex template")
        n_l = _default_nodes_per_layer(cfg)
        r1s = sorted(cfg.rho1_values or DENSITY_AXIS_DEFAULT)
        r2s = sorted(cfg.rho2_values or DENSITY_AXIS_DEFAULT)
        bis = sorted(cfg.beta_inter_values or BETA_INTER_DEFAULT)
        for r1 in r1s:
            for r2 in r2s:
                for bi in bis:
                    points.append(ExperimentPoint(
                        coords=(("rho1", r1), ("rho2", r2), ("beta_inter", bi)),
                        model=model, layer_count=2, nodes_per_layer=n_l,
                        mean_degree=cfg.mean_degree,
                        beta_intra=(cfg.beta_intra, cfg.beta_intra),
                        beta_inter=bi, rho=(r1, r2),
                        source_layer=cfg.source_layer,
                    ))
    elif cfg.template == "layers_fixed_nl":
        n_l = _default_nodes_per_layer(cfg)
        for L in sorted(cfg.layer_values or LAYERS_FIXED_NL_DEFAULT):
            if cfg.source_layer >= L:
                raise ConfigError("source_layer", f"not a layer of an L={L} graph")
            points.append(ExperimentPoint(
                coords=(("layers", L),),
                model=model, layer_count=L, nodes_per_layer=n_l,
                mean_degree=cfg.mean_degree, beta_intra=(cfg.beta_intra,) * L,
                beta_inter=cfg.beta_inter, rho=(cfg.rho,) * L,
                source_layer=cfg.source_layer,
            ))
    elif cfg.template == "layers_fixed_ntot":
        n_tot = cfg.n_tot if cfg.n_tot is not None else 400
        for L in sorted(cfg.layer_values or LAYERS_FIXED_NTOT_DEFAULT):
            if n_tot % L != 0:
                raise ConfigError("layer_values",
                                  f"n_tot={n_tot} not divisible by L={L}")
            if cfg.source_layer >= L:
                raise ConfigError("source_layer", f"not a layer of an L={L} graph")
            points.append(ExperimentPoint(
                coords=(("layers", L),),
                model=model, layer_count=L, nodes_per_layer=n_tot // L,
                mean_degree=cfg.mean_degree, beta_intra=(cfg.beta_intra,) * L,
                beta_inter=cfg.beta_inter, rho=(cfg.rho,) * L,
                source_layer=cfg.source_layer,
            ))
    else:
        raise ConfigError("template", f"{cfg.template!r} not one of {TEMPLATES}")
    return points


def _fixed_graph_for_point(cfg: ExperimentConfig, point: ExperimentPoint,
                           point_index: int) -> MultiplexGraph:
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(point_index,))
    seed = int(np.random.default_rng(ss).integers(0, 2**63))
    return generate_multiplex(GraphGenSpec(
        model=point.model, layer_count=point.layer_count,
        nodes_per_layer=point.nodes_per_layer,
        mean_degree=point.mean_degree, seed=seed,
    ))


def run_realization(cfg: ExperimentConfig, point: ExperimentPoint,
                    point_index: int, realization_index: int,
                    fixed: tuple[MultiplexGraph, ShortestPathCache] | None = None,
                    ) -> tuple[TestOutcome, int]:
    """One usable test at a grid point; returns (outcome, discard count).

    Per attempt, the RNG draw order is fixed: graph seed, observer nodes,
    source node, then simulation uniforms.  Unusable draws (spread reached
    under two observers) bump the attempt counter, so the redraw is
    independent but still reproducible.
    """
    params = SpreadParams(intra=point.beta_intra, inter=point.beta_inter)
    moments = delay_moments(params, point.layer_count)
    discards = 0
    for attempt in range(cfg.max_attempts):
        ss = np.random.SeedSequence(
            cfg.master_seed, spawn_key=(point_index, realization_index, attempt)
        )
        rng = np.random.default_rng(ss)
        if fixed is not None:
            g, cache = fixed
        else:
            seed = int(rng.integers(0, 2**63))
            g = generate_multiplex(GraphGenSpec(
                model=point.model, layer_count=point.layer_count,
                nodes_per_layer=point.nodes_per_layer,
                mean_degree=point.mean_degree, seed=seed,
            ))
            cache = None
        observers = place_observers(g, point.rho, rng)
        source = ReplicaId(node=int(rng.integers(0, point.nodes_per_layer)),
                           layer=point.source_layer)
        record = simulate(g, params, source, rng)
        try:
            dv = build_delay_vector(observers, record, g)
        except UnusableRealizationError:
            discards += 1
            continue
        if cache is None:
            cache = shortest_path_cache(g, moments)
        ranking = rank_sources(g, moments, dv, cache=cache)
        return outcome_from_ranking(ranking, source), discards
    raise RuntimeError(
        f"point {dict(point.coords)}: no usable realization in "
        f"{cfg.max_attempts} attempts (spread rarely reaches two observers)"
    )


def run_point(cfg: ExperimentConfig, point: ExperimentPoint, point_index: int,
              threads: int = 1) -> tuple[ResultRow, list[TestOutcome]]:
    fixed = None
    if cfg.fixed_graph:
        g = _fixed_graph_for_point(cfg, point, point_index)
        params = SpreadParams(intra=point.beta_intra, inter=point.beta_inter)
        fixed = (g, shortest_path_cache(g, delay_moments(params, point.layer_count)))

    def one(i: int) -> tuple[TestOutcome, int]:
        return run_realization(cfg, point, point_index, i, fixed=fixed)

    if threads <= 1:
        results = [one(i) for i in range(cfg.realizations)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(cfg.realizations)))
    outcomes = [o for o, _ in results]
    discarded = sum(d for _, d in results)
    summary = summarize(outcomes, alphas=cfg.alphas, discarded=discarded)
    return ResultRow(coords=point.coords, summary=summary), outcomes


def run_experiment(cfg: ExperimentConfig, out_path: str | Path | None = None,
                   threads: int = 1,
                   outcomes_path: str | Path | None = None) -> list[ResultRow]:
    """Full grid sweep; optionally writes the summary CSV and per-test outcomes."""
    points = expand_points(cfg)
    rows: list[ResultRow] = []
    all_outcomes: list[tuple[ExperimentPoint, list[TestOutcome]]] = []
    for idx, point in enumerate(points):
        row, outcomes = run_point(cfg, point, idx, threads=threads)
        rows.append(row)
        all_outcomes.append((point, outcomes))
    if out_path is not None:
        write_results_csv(rows, cfg.alphas, out_path, node_level=cfg.node_level)
    if outcomes_path is not None:
        write_outcomes_csv(all_outcomes, outcomes_path)
    return rows


def _css_column(alpha: float) -> str:
    return f"css{int(round(alpha * 100))}"


def write_results_csv(rows: list[ResultRow], alphas: tuple[float, ...],
                      path: str | Path, node_level: bool = False) -> None:
    """One row per grid point: coordinates, avg_precision, css per alpha,
    n_tests, discarded, and optionally node-level precision."""
    if not rows:
        raise ValueError("no rows to write")
    coord_names = [name for name, _ in rows[0].coords]
    header = (coord_names + ["avg_precision"]
              + [_css_column(a) for a in alphas] + ["n_tests", "discarded"])
    if node_level:
        header.append("node_precision")
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            cells: list[str] = [f"{v:g}" for _, v in row.coords]
            cells.append(f"{row.summary.avg_precision:.6f}")
            cells.extend(str(row.summary.css[a]) for a in alphas)
            cells.append(str(row.summary.n_tests))
            cells.append(str(row.summary.discarded))
            if node_level:
                cells.append(f"{row.summary.avg_node_precision:.6f}")
            out.writerow(cells)


def write_outcomes_csv(per_point: list[tuple[ExperimentPoint, list[TestOutcome]]],
                       path: str | Path) -> None:
    """Long-format per-test dump consumable by the `metrics` subcommand."""
    if not per_point:
        raise ValueError("no outcomes to write")
    coord_names = [name for name, _ in per_point[0][0].coords]
    header = coord_names + ["realization", "source_layer", "source_node",
                            "source_rank", "top_tie_size", "source_in_top",
                            "node_matches_in_top"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for point, outcomes in per_point:
            coords = [f"{v:g}" for _, v in point.coords]
            for i, o in enumerate(outcomes):
                out.writerow(coords + [
                    str(i), str(o.true_source.layer), str(o.true_source.node),
                    str(o.source_rank), str(o.top_tie_size),
                    str(int(o.source_in_top)), str(o.node_matches_in_top),
                ])


def read_outcomes_csv(path: str | Path) -> list[TestOutcome]:
    """Read a per-test dump back (coordinate columns are ignored)."""
    outcomes: list[TestOutcome] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"source_layer", "source_node", "source_rank",
                    "top_tie_size", "source_in_top"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            outcomes.append(TestOutcome(
                true_source=ReplicaId(node=int(rec["source_node"]),
                                      layer=int(rec["source_layer"])),
                top_tie_size=int(rec["top_tie_size"]),
                source_in_top=bool(int(rec["source_in_top"])),
                source_rank=int(rec["source_rank"]),
                node_matches_in_top=int(rec.get("node_matches_in_top", 0) or 0),
            ))
    return outcomes
