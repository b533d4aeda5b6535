#!/usr/bin/env python3
"""Why deterministic placement breaks under parallelism.

Runs the bundled NFV request mix at desk scale (3 replicas) through each
snapshot policy with 1, 5, 10, and 20 fixed parallel schedulers, and prints
the decline ratio of every combination.  Deterministic policies send every
scheduler to the same "best" host, so their decline ratios explode as
parallelism grows; randomized placement barely notices.

Takes roughly half a minute.
"""

import numpy as np

from apsr import load_dataset, make_config, run_experiment, size_hosts

REPLICAS = 3
SEEDS = (0, 1, 2)
POLICIES = ("ff", "wf", "adaptive", "distfromdiag", "ffr", "wfr", "random")
FLEETS = (1, 5, 10, 20)

hosts = size_hosts(load_dataset("nfv"), REPLICAS, ("ff", "wf", "random"), runs=4, seed=0).hosts
print(f"NFV mix x{REPLICAS} ({437 * REPLICAS} requests) on {hosts} hosts "
      f"(sized so everything can fit).\n")

header = "".join(f"  s={s:<4d}" for s in FLEETS)
print(f"{'decline ratio':14s}{header}")
for policy in POLICIES:
    cells = []
    for s in FLEETS:
        declines = [
            run_experiment(
                make_config(
                    dataset="nfv", replicas=REPLICAS, hosts=hosts,
                    policy=policy, schedulers=s, seed=seed,
                )
            ).decline_ratio
            for seed in SEEDS
        ]
        cells.append(f"{np.mean(declines):8.1%}")
    print(f"{policy:14s}{''.join(cells)}")

print(
    "\nReading the table: first-fit is worst (every scheduler picks the same"
    "\nlowest-id host), worst-fit spreads a little, the randomized variants"
    "\n(ffr/wfr, pick among the top 5) soften the damage, and uniform random"
    "\nplacement stays nearly flat as parallelism grows."
)
