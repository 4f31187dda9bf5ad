#!/usr/bin/env python3
"""Tabulate fitted high-SNR outage slopes against the predicted diversity
orders for the standard configuration set, in both ZF modes."""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fdrelay.outage import (
    AntennaConfig,
    LinkBudget,
    OutageQuery,
    ZFMode,
    diversity_order,
    end_to_end_outage,
)

CONFIGS = [(2, 3, 2, 1), (2, 2, 3, 1), (2, 3, 2, 2), (2, 3, 2, 3), (3, 2, 2, 2)]


def fitted_slope(cfg, query, start_db, stop_db):
    points = []
    for g_db in np.arange(start_db, stop_db + 1e-9, 2.5):
        g = 10.0 ** (g_db / 10.0)
        p = end_to_end_outage(cfg, LinkBudget(gammabar_sr=g, gammabar_rd=g), query)
        points.append((g_db / 10.0, math.log10(p)))
    return float(np.polyfit(*zip(*points), 1)[0])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gamma-t-db", default=10.0, type=float)
    parser.add_argument("--start-db", default=30.0, type=float)
    parser.add_argument("--stop-db", default=40.0, type=float)
    args = parser.parse_args()

    query = OutageQuery.snr(10.0 ** (args.gamma_t_db / 10.0))
    print(f"{'config':>12} {'mode':>9} {'order':>5} {'slope':>8} {'delta':>7}")
    worst = 0.0
    for antennas in CONFIGS:
        for mode in (ZFMode.RECEIVE, ZFMode.TRANSMIT):
            cfg = AntennaConfig(*antennas, mode)
            order = diversity_order(cfg)
            slope = fitted_slope(cfg, query, args.start_db, args.stop_db)
            delta = abs(slope + order)
            worst = max(worst, delta)
            print(f"{str(antennas):>12} {mode.value:>9} {order:>5} "
                  f"{slope:>+8.3f} {delta:>7.3f}")
    print(f"worst |slope + order| = {worst:.3f}")
    return 0 if worst <= 0.3 else 1


if __name__ == "__main__":
    raise SystemExit(main())
