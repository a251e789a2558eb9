"""Sweep the number of layers, holding either layer size or total size fixed.

fixed-nl: L in {1,2,3,4} with n_l nodes per layer (adding layers grows the
system). fixed-ntot: total replica count held constant while L varies over
{1,2,4}, so layers shrink as they multiply.
"""

import argparse
import os

from plexloc.experiments import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", default="fixed-nl",
                    choices=["fixed-nl", "fixed-ntot"])
    ap.add_argument("--model", default="ER", choices=["ER", "BA"])
    ap.add_argument("--nodes", type=int, default=500,
                    help="nodes per layer (fixed-nl mode)")
    ap.add_argument("--ntot", type=int, default=400,
                    help="total replicas (fixed-ntot mode)")
    ap.add_argument("--degree", type=float, default=8.0)
    ap.add_argument("--realizations", type=int, default=1000)
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--beta-inter", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="layer_sweep.csv")
    ap.add_argument("--outcomes", default=None)
    args = ap.parse_args()

    raw = {
        "model": args.model,
        "mean_degree": args.degree,
        "realizations": args.realizations,
        "rho": args.rho,
        "beta_inter": args.beta_inter,
        "master_seed": args.seed,
    }
    if args.mode == "fixed-nl":
        raw.update(template="layers_fixed_nl", nodes_per_layer=args.nodes)
    else:
        raw.update(template="layers_fixed_ntot", n_tot=args.ntot)
    cfg = ExperimentConfig.from_dict(raw)
    rows = run_experiment(cfg, out_path=args.out, threads=args.threads,
                          outcomes_path=args.outcomes)
    print(f"{len(rows)} grid points -> {args.out}")


if __name__ == "__main__":
    main()
