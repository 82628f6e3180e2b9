"""Excess test risk vs dimension for the certified release and the lazy DP baseline.

Writes results/id_separation.csv and .svg. Extra arguments are forwarded to
``certunlearn id-separation`` (for example ``--n 2000`` for a quicker run).
"""

import pathlib
import sys

from certunlearn import cli

OUT = pathlib.Path(__file__).resolve().parents[1] / "results"

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    argv = ["id-separation", "--seed", "0", "--out", str(OUT / "id_separation.csv"), "--plot", str(OUT / "id_separation.svg")]
    sys.exit(cli.main(argv + sys.argv[1:]))
