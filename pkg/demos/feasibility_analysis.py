#!/usr/bin/env python3
"""How many schedulers can run in parallel before the SLA breaks?

Walks the closed-form machinery: the hit probability of a d-host sample, the
expected number of winning schedulers under contention, and the greedy fleet
sizer that maximizes parallelism subject to a decline-ratio target and a
per-slot query budget.
"""

from apsr import BallsBinsParams, expected_happy, max_paral, sigma

N = 400          # hosts
BUDGET = N       # total queries per slot, shared by all schedulers
TARGET = 0.05    # decline-ratio SLA

print(f"Cluster of {N} hosts, query budget {BUDGET}/slot, decline target {TARGET:.0%}.\n")

print("Sample hit probability: one scheduler, d uniform samples, k hosts available")
for k in (10, 50, 200):
    row = ", ".join(f"d={d}: {sigma(N, k, d):.3f}" for d in (1, 2, 5, 20))
    print(f"  k={k:3d}  ->  {row}")

print("\nContention: s schedulers, each sampling d=5, k=50 available hosts.")
print("Expected winners grows sublinearly because schedulers collide:")
for s in (1, 5, 10, 25, 50):
    winners = expected_happy(BallsBinsParams(N, 50, s, 5))
    print(f"  s={s:2d}: E[winners] = {winners:6.2f}  ({winners / s:.1%} of schedulers)")

print("\nFleet sizing across utilization levels (k = available hosts):")
print(f"  {'k':>5} {'schedulers':>10} {'samples/req':>11} {'E[winners]/s':>12}")
for k in (0, 5, 20, 50, 100, 200, 400):
    s, d = max_paral(N, TARGET, BUDGET, k)
    ratio = expected_happy(BallsBinsParams(N, k, s, d)) / s
    print(f"  {k:5d} {s:10d} {d:11d} {ratio:12.1%}")

print(
    "\nAs availability shrinks the controller trades parallelism for larger"
    "\nsamples, and at k=0 it degrades to one scheduler spending the whole"
    "\nbudget - the configuration that maximizes the chance of finding the"
    "\nlast free hosts."
)
