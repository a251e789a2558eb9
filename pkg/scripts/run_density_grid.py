"""Sweep observer densities per layer on a duplex network.

Grid: rho1 x rho2 over ten points in [0.02, 0.2], faceted by beta_inter.
All transmission rates fixed at beta=0.5 intra.
"""

import argparse
import os

from plexloc.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="ER", choices=["ER", "BA"])
    ap.add_argument("--nodes", type=int, default=500)
    ap.add_argument("--degree", type=float, default=8.0)
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--beta-inter", type=float, nargs="+",
                    default=[0.1, 0.5, 0.9])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="density_grid.csv")
    ap.add_argument("--outcomes", default=None)
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict({
        "template": "density_grid",
        "model": args.model,
        "nodes_per_layer": args.nodes,
        "mean_degree": args.degree,
        "realizations": args.realizations,
        "beta_inter_values": args.beta_inter,
        "master_seed": args.seed,
    })
    rows = run_experiment(cfg, out_path=args.out, threads=args.threads,
                          outcomes_path=args.outcomes)
    print(f"{len(rows)} grid points -> {args.out}")


if __name__ == "__main__":
    main()
