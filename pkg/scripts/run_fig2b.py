"""Worst-case SINR against the number of transmit subarrays."""

import sys

import numpy as np

from _common import figure_main, show
from rhsradar import bench


def describe(res):
    for series in sorted({r["series"] for r in res.summary}):
        values, db = bench.curve(res.summary, series)
        show(series, values, db)
        print(f"{'':>14}  gains {np.round(np.diff(db), 2).tolist()}")


if __name__ == "__main__":
    sys.exit(figure_main("fig2b", describe))
