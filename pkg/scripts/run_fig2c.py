"""Worst-case SINR against the number of receive subarrays at a fixed element total."""

import sys

import numpy as np

from _common import figure_main, show
from rhsradar import bench


def describe(res):
    for series in sorted({r["series"] for r in res.summary}, key=lambda s: float(s.split("=")[1])):
        values, db = bench.curve(res.summary, series)
        show(series, values, db)
        print(f"{'':>14}  best Q = {values[int(np.argmax(db))]:g}")


if __name__ == "__main__":
    sys.exit(figure_main("fig2c", describe))
