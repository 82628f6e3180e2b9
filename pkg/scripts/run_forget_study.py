"""Corrupted-label study over several seeds.

For each seed writes results/forget_study_<seed>.csv plus a summary, then
prints the final forget-set accuracy of the naive and TrimGrad arms.
"""

import csv
import pathlib
import sys

from certunlearn import cli

OUT = pathlib.Path(__file__).resolve().parents[1] / "results"

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    wins = 0
    seeds = range(5)
    for seed in seeds:
        summary = OUT / f"forget_study_{seed}_summary.csv"
        argv = [
            "forget-study",
            "--seed",
            str(seed),
            "--out",
            str(OUT / f"forget_study_{seed}.csv"),
            "--summary",
            str(summary),
        ]
        code = cli.main(argv + sys.argv[1:])
        if code:
            sys.exit(code)
        final = {r["method"]: float(r["forget_acc"]) for r in csv.DictReader(summary.open())}
        wins += final["trimgrad"] < final["naive"]
        print(f"seed {seed}: naive forget acc {final['naive']:.3f}, trimgrad {final['trimgrad']:.3f}")
    print(f"trimgrad lower in {wins}/{len(seeds)} seeds")
