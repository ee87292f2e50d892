"""Proposed vs baseline allocation on a few seeded scenarios, under both availability rules.

Run: python3 demos/compare_methods.py [n_seeds]
"""

import sys

from whitefi.assign import assign_channels
from whitefi.mac import network_report
from whitefi.optimize import baseline, optimize
from whitefi.scenario import generate, synthetic_tv_network, with_rule


def main(n_seeds=3):
    print(f"{'seed':>4} {'rule':>8} {'proposed Mbps':>14} {'baseline Mbps':>14} {'gain':>7}")
    for seed in range(n_seeds):
        txs = synthetic_tv_network(seed, 3, 15.0, channels=(21, 22, 23, 24))
        relaxed = generate(seed, (3, 5.0), 5, txs, rule="relaxed", channels=(21, 22, 23, 24))
        for sc in (relaxed, with_rule(relaxed, "exact")):
            asg = assign_channels(sc)
            res = optimize(sc, asg)
            bp, ba = baseline(sc, asg)
            base = network_report(sc, asg, ba, bp).total
            gain = res.throughput / base - 1 if base > 0 else float("nan")
            print(f"{seed:>4} {sc.availability_rule.value:>8} {res.throughput / 1e6:>14.2f} "
                  f"{base / 1e6:>14.2f} {gain:>+7.1%}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
