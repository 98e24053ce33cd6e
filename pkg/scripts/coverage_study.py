"""Accuracy curves at fixed effective size with varying redundancy, and the reverse."""

import argparse
import csv
from pathlib import Path

from scipy.stats import spearmanr

from hflsnm.fedsim import coverage_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=20)
    ap.add_argument("--class-sep", type=float, default=0.3)
    ap.add_argument("--out", default="results/coverage_study.csv")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    settings = [("redundant", 800, r) for r in (100, 200, 300, 400, 500)]
    settings += [("effective", e, 300) for e in (800, 900, 1000, 1100, 1200)]
    final = {}
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["study", "effective", "redundant", "seed", "round", "accuracy"])
        for study, eff, red in settings:
            for seed in range(args.seeds):
                curve = coverage_study(eff, red, seed, rounds=args.rounds, class_sep=args.class_sep)
                for i, acc in enumerate(curve, start=1):
                    w.writerow([study, eff, red, seed, i, acc])
                final.setdefault((study, eff, red), []).append(curve[-1])
    for study, axis in (("redundant", 2), ("effective", 1)):
        keys = [k for k in final if k[0] == study]
        xs = [k[axis] for k in keys]
        ys = [sum(final[k]) / len(final[k]) for k in keys]
        print(f"{study}: spearman={spearmanr(xs, ys)[0]:+.2f} mean final acc={[round(y, 4) for y in ys]}")


if __name__ == "__main__":
    main()
