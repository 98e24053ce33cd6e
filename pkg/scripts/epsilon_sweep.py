"""DO-SNM accuracy under privacy budgets 40..100 and without noise (Fig. 4 axes)."""

import argparse
import csv
from pathlib import Path

from hflsnm.config import ExperimentConfig
from hflsnm.fedsim import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=20)
    ap.add_argument("--out", default="results/epsilon_sweep.csv")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "seed", "round", "accuracy", "cum_energy", "max_sigma_up"])
        for eps in [40.0, 60.0, 80.0, 100.0, None]:
            label = "none" if eps is None else eps
            for seed in range(args.seeds):
                reports, summary = run_experiment(ExperimentConfig(dp_epsilon=eps, seed=seed, rounds=args.rounds))
                cum = 0.0
                for rep in reports:
                    cum += rep.E_total
                    sig = max(rep.noise.sigma_up.values(), default=0.0)
                    w.writerow([label, seed, rep.round, rep.accuracy, cum, sig])
                print(f"epsilon={label} seed={seed} acc={summary['final_accuracy']:.4f}")


if __name__ == "__main__":
    main()
