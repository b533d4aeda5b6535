"""Independent reference computations used to pin expected test values.

These deliberately avoid the library's own code paths: enumeration over raw
sample tuples with exact rational arithmetic, binomial terms via math.comb,
and plain double loops over hosts and flavors.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from itertools import combinations_with_replacement, product

from apsr.core import fits

_CHOICE_CACHE: dict[tuple, Fraction] = {}


def _mean_distinct_chosen(sets_key: tuple[tuple[int, ...], ...]) -> Fraction:
    """Exact E[#distinct bins chosen] for agents holding the given option sets.

    Enumerates every combination of per-agent uniform choices; an agent with an
    empty option set fails and chooses nothing.
    """
    cached = _CHOICE_CACHE.get(sets_key)
    if cached is not None:
        return cached
    option_lists = [options if options else (None,) for options in sets_key]
    denominator = math.prod(len(options) for options in option_lists)
    acc = 0
    for picks in product(*option_lists):
        acc += len({p for p in picks if p is not None})
    result = Fraction(acc, denominator)
    _CHOICE_CACHE[sets_key] = result
    return result


def enumerated_expected_happy(n: int, k: int, d: int, s: int) -> Fraction:
    """Exact expected winner count by brute-force enumeration.

    Every one of the n**d ordered sample tuples per agent is enumerated and
    reduced to its set of distinct available bins (bins 0..k-1 are available).
    Agents are independent and identically distributed, so a joint outcome is a
    multiset of such sets weighted by a multinomial coefficient; choice
    outcomes are then enumerated exactly per joint outcome.
    """
    if k == 0 or d == 0 or s == 0:
        return Fraction(0)
    subset_weight: Counter = Counter()
    for sample in product(range(n), repeat=d):
        subset_weight[frozenset(b for b in sample if b < k)] += 1
    subsets = sorted(subset_weight, key=lambda fs: (len(fs), sorted(fs)))
    weights = [subset_weight[fs] for fs in subsets]

    total = Fraction(0)
    for combo in combinations_with_replacement(range(len(subsets)), s):
        multiplicity: Counter = Counter(combo)
        arrangements = math.factorial(s)
        for m in multiplicity.values():
            arrangements //= math.factorial(m)
        weight = arrangements * math.prod(weights[i] for i in combo)
        sets_key = tuple(tuple(sorted(subsets[i])) for i in combo)
        total += weight * _mean_distinct_chosen(sets_key)
    return total / Fraction(n**d) ** s


def direct_expected_happy(n: int, k: int, s: int, d: int) -> float:
    """Expected winners via exact integer binomial coefficients (math.comb)."""
    if k == 0 or d == 0:
        return 0.0
    sig = 1.0 - ((n - k) / n) ** d
    total = 0.0
    for f in range(1, s + 1):
        pmf = math.comb(s, f) * sig**f * (1.0 - sig) ** (s - f)
        total += pmf * k * (1.0 - ((k - 1) / k) ** f)
    return total


def scan_max_paral(n: int, delta_hat: float, budget: int, k: int) -> tuple[int, int]:
    """Largest agent count by upward scan, stopping at the first failure."""
    s = 1
    for candidate in range(2, budget + 1):
        d = budget // candidate
        if direct_expected_happy(n, k, candidate, d) >= candidate * (1.0 - delta_hat):
            s = candidate
        else:
            break
    return s, budget // s


def census_brute(state, flavors) -> dict[str, int]:
    """Per-flavor available-host counts by a direct double loop."""
    counts: dict[str, int] = {}
    for flavor in flavors:
        count = 0
        for host_id in range(state.n):
            if fits(flavor.demand, state.host(host_id).available):
                count += 1
        counts[flavor.id] = count
    return counts


class ReplayBook:
    """Mirrors place/complete calls and recomputes the expected availability.

    Uses the same canonical arithmetic as the model is documented to use
    (capacity minus the insertion-ordered sum of resident demands), so the
    comparison is exact, with no tolerance.
    """

    def __init__(self, capacities):
        self.capacities = [tuple(float(v) for v in c) for c in capacities]
        self.resident: list[dict[int, tuple[float, ...]]] = [dict() for _ in self.capacities]

    def place(self, request_id: int, host_id: int, demand) -> None:
        self.resident[host_id][request_id] = tuple(float(v) for v in demand)

    def complete(self, request_id: int) -> None:
        for resident in self.resident:
            if request_id in resident:
                del resident[request_id]
                return
        raise KeyError(request_id)

    def expected_available(self) -> list[list[float]]:
        rows = []
        for capacity, resident in zip(self.capacities, self.resident):
            used = [0.0] * len(capacity)
            for demand in resident.values():
                for j, v in enumerate(demand):
                    used[j] += v
            rows.append([c - u for c, u in zip(capacity, used)])
        return rows

    def placed_demand_sum(self) -> list[float]:
        dim = len(self.capacities[0])
        total = [0.0] * dim
        for resident in self.resident:
            for demand in resident.values():
                for j, v in enumerate(demand):
                    total[j] += v
        return total
