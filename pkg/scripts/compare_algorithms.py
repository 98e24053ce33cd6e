"""DO-SNM against RA, LG, RD and ED: per-round accuracy and cumulative energy (Fig. 5 axes)."""

import argparse
import csv
from pathlib import Path

import numpy as np

from hflsnm.config import ExperimentConfig
from hflsnm.fedsim import run_experiment

ALGOS = ("do-snm", "ra", "lg", "rd", "ed")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=20)
    ap.add_argument("--algos", default=",".join(ALGOS))
    ap.add_argument("--out", default="results/compare.csv")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    totals = {}
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "seed", "round", "accuracy", "cum_energy", "n_selected", "r_ef", "r_re"])
        for algo in args.algos.split(","):
            for seed in range(args.seeds):
                reports, summary = run_experiment(ExperimentConfig(algorithm=algo, seed=seed, rounds=args.rounds))
                cum = 0.0
                for rep in reports:
                    cum += rep.E_total
                    w.writerow([algo, seed, rep.round, rep.accuracy, cum, rep.M, rep.r_ef, rep.r_re])
                totals.setdefault(algo, []).append((summary["total_energy"], summary["final_accuracy"]))
    for algo, vals in totals.items():
        e, a = np.mean(vals, axis=0)
        print(f"{algo:7s} energy={e:9.3f}J final_acc={a:.4f}")


if __name__ == "__main__":
    main()
