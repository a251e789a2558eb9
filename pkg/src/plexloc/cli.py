"""Command-line interface: generate graphs, simulate spreads, locate sources,
run experiment grids, and summarize outcome dumps."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from .experiments import (ConfigError, ExperimentConfig, read_outcomes_csv,
                          run_experiment, write_results_csv)
from .graphs import (GraphGenSpec, GraphModel, ReplicaId, generate_multiplex,
                     load_graph, save_graph)
from .locator import rank_sources
from .metrics import summarize
from .observers import delay_vector_from_times
from .spreading import SpreadParams, delay_moments, load_record, save_record, simulate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plexloc",
        description="Source localization for spreading processes on multiplex networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a multiplex graph file")
    p.add_argument("--model", choices=["ER", "BA"], default="ER")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--nodes", type=int, required=True, help="nodes per layer")
    p.add_argument("--degree", type=float, default=8.0, help="mean intra-layer degree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="run one SI spread on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--beta", type=float, nargs="+", required=True,
                   help="intra-layer transmission probability per layer")
    p.add_argument("--beta-inter", type=float, required=True)
    p.add_argument("--source", type=int, nargs=2, metavar=("LAYER", "NODE"),
                   required=True)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="infection record file")

    p = sub.add_parser("locate", help="rank source candidates from observations")
    p.add_argument("--graph", required=True)
    p.add_argument("--obs", required=True,
                   help="observation file: 'layer node time' per line")
    p.add_argument("--beta", type=float, nargs="+", required=True)
    p.add_argument("--beta-inter", type=float, required=True)
    p.add_argument("--out", required=True, help="ranking CSV")

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment grid")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--outcomes", default=None, help="optional per-test dump CSV")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("metrics", help="summarize a per-test outcome dump")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--alpha", type=float, nargs="+", default=[0.95])
    p.add_argument("--out", default=None, help="write one-row CSV instead of stdout")
    return parser


def _cmd_generate(args) -> int:
    spec = GraphGenSpec(model=GraphModel(args.model), layer_count=args.layers,
                        nodes_per_layer=args.nodes, mean_degree=args.degree,
                        seed=args.seed)
    g = generate_multiplex(spec)
    save_graph(g, args.out, model=spec.model, seed=spec.seed)
    return 0


def _cmd_simulate(args) -> int:
    g, _, _ = load_graph(args.graph)
    params = SpreadParams(intra=tuple(args.beta), inter=args.beta_inter)
    params.per_class(g.layer_count)
    source = ReplicaId(node=args.source[1], layer=args.source[0])
    rng = np.random.default_rng(args.seed)
    record = simulate(g, params, source, rng, t_max=args.t_max)
    save_record(record, g, args.out)
    return 0


def _read_observations(path: str, g) -> list[tuple[ReplicaId, int]]:
    obs: list[tuple[ReplicaId, int]] = []
    for ln in open(path).read().strip().splitlines():
        if ln.startswith("#") or not ln.strip():
            continue
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed observation line {ln!r}")
        lay, node, t = int(parts[0]), int(parts[1]), int(parts[2])
        obs.append((ReplicaId(node=node, layer=lay), t))
    return obs


def _cmd_locate(args) -> int:
    g, _, _ = load_graph(args.graph)
    params = SpreadParams(intra=tuple(args.beta), inter=args.beta_inter)
    moments = delay_moments(params, g.layer_count)
    dv = delay_vector_from_times(_read_observations(args.obs, g), g)
    ranking = rank_sources(g, moments, dv)
    with open(args.out, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["rank", "layer", "node", "score"])
        for entry in ranking.entries:
            out.writerow([
                str(ranking.rank_of(entry.candidate)),
                str(entry.candidate.layer), str(entry.candidate.node),
                f"{entry.score:.10g}",
            ])
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
        cfg.validate()
    run_experiment(cfg, out_path=args.out, threads=args.threads,
                   outcomes_path=args.outcomes)
    return 0


def _cmd_metrics(args) -> int:
    outcomes = read_outcomes_csv(args.outcomes)
    if not outcomes:
        raise ValueError(f"{args.outcomes}: no outcome rows")
    summary = summarize(outcomes, alphas=tuple(args.alpha))
    if args.out:
        from .experiments import ResultRow
        write_results_csv([ResultRow(coords=(), summary=summary)],
                          tuple(args.alpha), args.out)
    else:
        parts = [f"avg_precision={summary.avg_precision:.6f}"]
        parts += [f"css{int(round(a * 100))}={summary.css[a]}" for a in args.alpha]
        parts += [f"n_tests={summary.n_tests}"]
        print(" ".join(parts))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "simulate": _cmd_simulate,
    "locate": _cmd_locate,
    "experiment": _cmd_experiment,
    "metrics": _cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
