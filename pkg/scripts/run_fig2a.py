"""RHS against equal-cost, equal-power phased subarrays over the hardware budget."""

import sys

from _common import figure_main, show
from rhsradar import bench


def describe(res):
    values, rhs = bench.curve(res.summary, "", "rhs")
    show("rhs", values, rhs)
    for d in (6, 8, 10):
        _, ph = bench.curve(res.summary, "", f"phased-d{d}")
        show(f"phased d={d}", values, ph)
        print(f"{'':>14}  mean gap {float((rhs - ph).mean()):.2f} dB")


if __name__ == "__main__":
    sys.exit(figure_main("fig2a", describe))
