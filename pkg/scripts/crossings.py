"""Distances where the n = 2, 3, 4 chains (T = 10 s, loss and dephasing only)
first beat the repeaterless bound and the square-root scaling."""

import math

import numpy as np

from mapqkd import harness, rates
from mapqkd.core import ProtocolParams


def main(step=0.5):
    grid = np.arange(50.0, 1000.0 + step, step)
    base = ProtocolParams(T_coherence=10.0, p_det=1.0, dark_noclick_vacuum=1.0, p_depol=0.0)
    eta = np.exp(-grid / base.L_att)
    for n in (2, 3, 4):
        skr = [rates.skr_per_channel_use(base.replace(n=n, L_total=float(L))).skr_per_use for L in grid]
        plob_x = harness.first_crossing(grid, skr, rates.plob(eta))
        root_x = harness.first_crossing(grid, skr, np.sqrt(eta))
        print(f"n={n}: above PLOB from {plob_x} km, above sqrt(eta) from {root_x} km")


if __name__ == "__main__":
    main()
