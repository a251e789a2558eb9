"""Sweep intra- and inter-layer transmission rates on a duplex network.

Grid: beta1 x beta2 over {0.1..0.9}, faceted by beta_inter in {0.1,0.5,0.9}.
Writes the summary CSV consumed by the figures tool.
"""

import argparse
import os

from plexloc.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="ER", choices=["ER", "BA"])
    ap.add_argument("--nodes", type=int, default=None,
                    help="nodes per layer (default: 1000 ER, 500 BA)")
    ap.add_argument("--degree", type=float, default=8.0)
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="rate_grid.csv")
    ap.add_argument("--outcomes", default=None,
                    help="also write per-realization outcomes CSV")
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict({
        "template": "rate_grid",
        "model": args.model,
        "nodes_per_layer": args.nodes,
        "mean_degree": args.degree,
        "realizations": args.realizations,
        "rho": args.rho,
        "master_seed": args.seed,
    })
    rows = run_experiment(cfg, out_path=args.out, threads=args.threads,
                          outcomes_path=args.outcomes)
    print(f"{len(rows)} grid points -> {args.out}")


if __name__ == "__main__":
    main()
