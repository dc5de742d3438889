#!/usr/bin/env python3
"""Download UCI datasets and write them as CSV fixtures under data/.

Glass, Vehicle and Iris already ship in data/. Dermatology does not (no
reachable mirror when the fixtures were built); run this script on a machine
with network access to add it:

    python3 scripts/fetch_datasets.py dermatology

Every CSV has a header row and the label in the last column.
"""

import argparse
import csv
import io
import statistics
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
DATA = Path(__file__).resolve().parent.parent / "data"

GLASS_COLS = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe", "type"]
VEHICLE_COLS = [
    "compactness", "circularity", "distance_circularity", "radius_ratio",
    "pr_axis_aspect_ratio", "max_length_aspect_ratio", "scatter_ratio",
    "elongatedness", "pr_axis_rectangularity", "max_length_rectangularity",
    "scaled_variance_major", "scaled_variance_minor", "scaled_radius_of_gyration",
    "skewness_major", "skewness_minor", "kurtosis_minor", "kurtosis_major",
    "hollows_ratio", "class",
]
IRIS_COLS = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]


def fetch(url):
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read().decode("ascii", errors="replace")


def glass():
    rows = [line.split(",")[1:] for line in fetch(f"{UCI}/glass/glass.data").splitlines() if line.strip()]
    return GLASS_COLS, rows


def vehicle():
    rows = []
    for part in "abcdefghi":
        text = fetch(f"{UCI}/statlog/vehicle/xa{part}.dat")
        rows += [line.split() for line in text.splitlines() if line.strip()]
    return VEHICLE_COLS, rows


def iris():
    rows = [line.split(",") for line in fetch(f"{UCI}/iris/iris.data").splitlines() if line.strip()]
    return IRIS_COLS, [[c.replace("Iris-", "") for c in r] for r in rows]


def dermatology():
    rows = [line.split(",") for line in fetch(f"{UCI}/dermatology/dermatology.data").splitlines() if line.strip()]
    # Age (column 34) is missing for 8 patients; fill with the median age.
    ages = [float(r[33]) for r in rows if r[33] != "?"]
    median = statistics.median(ages)
    for r in rows:
        if r[33] == "?":
            r[33] = f"{median:g}"
    cols = [f"a{i + 1}" for i in range(33)] + ["age", "class"]
    return cols, rows


SOURCES = {"glass": glass, "vehicle": vehicle, "iris": iris, "dermatology": dermatology}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=["dermatology"], choices=sorted(SOURCES))
    ap.add_argument("--force", action="store_true", help="overwrite existing CSVs")
    args = ap.parse_args()
    DATA.mkdir(exist_ok=True)
    for name in args.names:
        out = DATA / f"{name}.csv"
        if out.exists() and not args.force:
            print(f"{out} exists, skipping (use --force)")
            continue
        cols, rows = SOURCES[name]()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows([c.strip() for c in r] for r in rows)
        out.write_text(buf.getvalue())
        print(f"wrote {out}: {len(rows)} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
