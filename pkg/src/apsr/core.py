"""Domain model for slot-based VM placement: hosts, flavors, requests, cluster state.

Demand and capacity values are plain 64-bit floats; every availability
comparison carries a small absolute slack (``EPS``) so that the short-decimal
values used by the bundled datasets behave deterministically at exact-fit
boundaries.  A host's availability row is recomputed from its resident demand
set on every mutation, which keeps the bookkeeping exact: completing every
request on a host restores its availability bit-for-bit.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

#: Absolute slack used by every availability comparison.
EPS = 1e-9

#: Request lifetime sentinel for "never departs".
INFINITE = math.inf

ResourceVector = tuple[float, ...]


class ModelError(Exception):
    """Misuse of the domain model: unknown ids, dimension mismatches."""


class ConfigError(Exception):
    """Invalid configuration: unknown dataset or policy, malformed files or
    parameter combinations."""


def vector(values: Iterable[float]) -> ResourceVector:
    """Validate and freeze a resource vector: at least one coordinate, all >= 0."""
    vec = tuple(float(v) for v in values)
    if not vec:
        raise ModelError("resource vector needs at least one coordinate")
    for v in vec:
        if not v >= 0.0:  # also rejects NaN
            raise ModelError(f"resource coordinates must be non-negative, got {vec}")
    return vec


def fits(demand: Iterable[float], available: Iterable[float]) -> bool:
    """demand <= available coordinate-wise, within EPS slack (no dimension check)."""
    return all(d <= a + EPS for d, a in zip(demand, available))


@dataclass(frozen=True)
class Flavor:
    """A named demand vector from a dataset's finite flavor set."""

    id: str
    demand: ResourceVector

    def __post_init__(self):
        object.__setattr__(self, "demand", vector(self.demand))
        if not any(v > 0 for v in self.demand):
            raise ModelError(f"flavor {self.id!r} has an all-zero demand vector")


@dataclass(frozen=True)
class Host:
    """Point-in-time view of one host: fixed capacity plus current availability."""

    id: int
    capacity: ResourceVector
    available: ResourceVector


@dataclass
class Request:
    id: int
    flavor: Flavor
    arrival_slot: int = 0
    lifetime: float = INFINITE  # slots; INFINITE or a finite value >= 1

    def __post_init__(self):
        if self.lifetime != INFINITE and self.lifetime < 1:
            raise ModelError("finite lifetimes must be at least 1 slot")


@dataclass(frozen=True)
class Placement:
    host_id: int
    departure_slot: float  # arrival + lifetime; INFINITE for immortal requests


@dataclass
class AvailabilityCensus:
    """Exact per-flavor count of hosts that could accept one more request."""

    per_flavor: dict[str, int]

    @property
    def min_available(self) -> int:
        """Pessimistic cluster-wide availability: the minimum over flavors."""
        if not self.per_flavor:
            raise ModelError("census over an empty flavor set has no minimum")
        return min(self.per_flavor.values())


def is_available(host: Host, flavor: Flavor) -> bool:
    """True iff the flavor's demand fits the host's current availability."""
    if len(host.available) != len(flavor.demand):
        raise ModelError(
            f"dimension mismatch: host has {len(host.available)} resources, "
            f"flavor {flavor.id!r} has {len(flavor.demand)}"
        )
    return fits(flavor.demand, host.available)


class ClusterState:
    """Mutable cluster: capacity/availability matrices plus placement records.

    One instance is owned by a single simulation run; parallel experiments use
    independently constructed states.  Row h of ``available`` always equals
    ``capacity[h]`` minus the insertion-ordered sum of resident demands, so the
    conservation between used capacity and placed demands is exact.
    """

    def __init__(self, capacities: Iterable[Iterable[float]]):
        caps = [vector(c) for c in capacities]
        if not caps:
            raise ModelError("a cluster needs at least one host")
        if len({len(c) for c in caps}) != 1:
            raise ModelError("all hosts must share one resource dimension")
        self.capacity = np.array(caps, dtype=float)
        self.available = self.capacity.copy()
        self.pending: deque[Request] = deque()
        self.placements: dict[int, Placement] = {}
        self.slot = 0
        self._resident: list[dict[int, ResourceVector]] = [dict() for _ in caps]

    @property
    def n(self) -> int:
        return self.capacity.shape[0]

    @property
    def dim(self) -> int:
        return self.capacity.shape[1]

    def host(self, host_id: int) -> Host:
        """Snapshot view of one host."""
        self._check_host(host_id)
        return Host(
            host_id,
            tuple(self.capacity[host_id]),
            tuple(self.available[host_id]),
        )

    def _check_host(self, host_id: int) -> None:
        if not 0 <= host_id < self.n:
            raise ModelError(f"unknown host id {host_id}")

    def _refresh(self, host_id: int) -> None:
        # availability := capacity - sum of resident demands, in insertion order
        used = [0.0] * self.dim
        for demand in self._resident[host_id].values():
            for j, v in enumerate(demand):
                used[j] += v
        for j in range(self.dim):
            self.available[host_id, j] = self.capacity[host_id, j] - used[j]

    def place(self, request: Request, host_id: int) -> bool:
        """Try to place a request; True on success, False on a resolution decline.

        A decline leaves the state untouched.  Unknown hosts and double
        placements are model errors, distinct from declines.
        """
        self._check_host(host_id)
        if request.id in self.placements:
            raise ModelError(f"request {request.id} is already placed")
        demand = request.flavor.demand
        if len(demand) != self.dim:
            raise ModelError(
                f"demand dimension {len(demand)} does not match cluster dimension {self.dim}"
            )
        if not fits(demand, self.available[host_id]):
            return False
        self._resident[host_id][request.id] = demand
        self._refresh(host_id)
        self.placements[request.id] = Placement(
            host_id, request.arrival_slot + request.lifetime
        )
        return True

    def complete(self, request_id: int) -> int:
        """Release the resources of a placed request; returns the hosting id."""
        placement = self.placements.pop(request_id, None)
        if placement is None:
            raise ModelError(f"request {request_id} is not placed")
        del self._resident[placement.host_id][request_id]
        self._refresh(placement.host_id)
        return placement.host_id

    def census(self, flavors: Iterable[Flavor]) -> AvailabilityCensus:
        """Exact per-flavor available-host counts for the current state."""
        counts: dict[str, int] = {}
        for flavor in flavors:
            demand = np.asarray(flavor.demand, dtype=float)
            if demand.shape[0] != self.dim:
                raise ModelError(
                    f"flavor {flavor.id!r} has dimension {demand.shape[0]}, cluster has {self.dim}"
                )
            counts[flavor.id] = int(
                np.count_nonzero((self.available >= demand - EPS).all(axis=1))
            )
        return AvailabilityCensus(counts)

    def utilization(self) -> float:
        """Fraction of total capacity in use, summed over all coordinates."""
        total = float(self.capacity.sum())
        return float((self.capacity - self.available).sum()) / total
