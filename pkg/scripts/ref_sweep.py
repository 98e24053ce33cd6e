"""Accuracy and cumulative energy of DO-SNM for r_ef0 in 0.3..0.9 (Fig. 3 axes)."""

import argparse
import csv
from pathlib import Path

from hflsnm.config import ExperimentConfig
from hflsnm.errors import HflsnmError
from hflsnm.fedsim import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=20)
    ap.add_argument("--out", default="results/ref_sweep.csv")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r_ef0", "seed", "round", "accuracy", "cum_energy", "n_selected"])
        for r in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]:
            for seed in range(args.seeds):
                try:
                    reports, _ = run_experiment(ExperimentConfig(r_ef0=r, seed=seed, rounds=args.rounds))
                except HflsnmError as exc:
                    print(f"r_ef0={r} seed={seed}: {exc}")
                    continue
                cum = 0.0
                for rep in reports:
                    cum += rep.E_total
                    w.writerow([r, seed, rep.round, rep.accuracy, cum, rep.M])
                print(f"r_ef0={r} seed={seed} acc={reports[-1].accuracy:.4f} energy={cum:.3f}J")


if __name__ == "__main__":
    main()
