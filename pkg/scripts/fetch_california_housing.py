"""Download California Housing and write data/california_housing.csv.

Needs network access and scikit-learn (used only here). The output has one
header row, 8 feature columns and the target column, as the loader expects.
"""

import pathlib

from sklearn.datasets import fetch_california_housing

DEST = pathlib.Path(__file__).resolve().parents[1] / "data" / "california_housing.csv"

if __name__ == "__main__":
    bunch = fetch_california_housing(as_frame=True)
    DEST.parent.mkdir(exist_ok=True)
    bunch.frame.to_csv(DEST, index=False, float_format="%.17g", lineterminator="\n")
    print(f"wrote {len(bunch.frame)} rows to {DEST}")
