#!/usr/bin/env python3
"""Dispersive-norm diagnostic on the torus.

Tabulates the measured W^{k,p} norms of the acoustic pair against the
flat-space decay shape (1 + t/eps)^(1/p - 1/q).  Periodic waves revisit
their initial state instead of decaying, so this is a report, not a
check: the table typically shows the measured norms oscillating while
the flat-space shape falls.

Usage: python3 scripts/dispersive_scan.py [eps] [grid_n]
"""

import sys

import numpy as np

from qnslab import (
    AcousticState,
    Grid2D,
    LimitParams,
    ScalarField,
    dispersive_report,
    random_band_limited,
)


def main():
    eps = float(sys.argv[1]) if len(sys.argv) > 1 else 0.1
    grid_n = int(sys.argv[2]) if len(sys.argv) > 2 else 64
    grid = Grid2D(grid_n)
    params = LimitParams(eps, 2.0)
    rng = np.random.default_rng(0)

    cases = {
        "single mode": AcousticState(
            sigma=ScalarField(grid, np.cos(grid.x)),
            psi=ScalarField(grid, np.zeros_like(grid.x)),
            time=0.0,
            params=params,
        ),
        "random band-limited": AcousticState(
            sigma=random_band_limited(grid, 6, rng, 0.5),
            psi=random_band_limited(grid, 6, rng, 0.3),
            time=0.0,
            params=params,
        ),
    }
    times = [0.0, 0.5 * eps, eps, 2 * eps, 5 * eps, 10 * eps, 20 * eps]
    for label, state in cases.items():
        print(f"{label} (eps = {eps}, N = {grid_n})")
        for k, p in [(0, 2.0), (0, 4.0), (0, np.inf), (1, 2.0)]:
            rows = dispersive_report(state, times, k=k, p=p)
            pname = "inf" if np.isinf(p) else f"{p:g}"
            print(f"  k={k} p={pname}:")
            print(f"    {'t':>8} {'measured':>12} {'flat-space shape':>18}")
            for t, lhs, shape in rows:
                print(f"    {t:8.4f} {lhs:12.6f} {shape:18.6f}")
        print()


if __name__ == "__main__":
    main()
