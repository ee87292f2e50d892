"""Separation distance from a TV protection contour versus white-space node density.

Run: python3 demos/separation_distance.py
"""

from whitefi.fcc import distance_table, separation_distance
from whitefi.scenario import TvTransmitter


def main():
    tx = TvTransmitter("demo", (0.0, 0.0), 21, 1e5, 50.0, 61.1)
    res = [separation_distance(tx, d, n_trials=5, seed=0) for d in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0)]
    print(distance_table(res, ["tower at the origin, 50 km service radius, 11.1 km buffer"]), end="")


if __name__ == "__main__":
    main()
