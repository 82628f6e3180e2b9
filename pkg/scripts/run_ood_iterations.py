"""Retain excess risk per unlearning iteration on label-offset forget data.

Writes results/ood_iterations.csv, its per-method summary and an SVG. Extra
arguments are forwarded to ``certunlearn ood-iterations``.
"""

import pathlib
import sys

from certunlearn import cli

OUT = pathlib.Path(__file__).resolve().parents[1] / "results"

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    argv = [
        "ood-iterations",
        "--seed",
        "0",
        "--out",
        str(OUT / "ood_iterations.csv"),
        "--summary",
        str(OUT / "ood_iterations_summary.csv"),
        "--plot",
        str(OUT / "ood_iterations.svg"),
    ]
    sys.exit(cli.main(argv + sys.argv[1:]))
