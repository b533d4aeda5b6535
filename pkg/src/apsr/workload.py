"""Datasets, request traces, arrival schedules, and host-fleet sizing.

Three request mixes ship with the package (nfv, google, amazon) in a plain-text
table format that also accepts user-supplied files:

    # comment lines and blank lines are ignored
    resources <name> ...          resource coordinate names (fixes the dimension)
    host <v> ... <weight>         a host capacity vector plus its proportion weight
    class <name> <count>          per-replica draws for a flavor class (optional)
    flavor <v> ... <count> [cls]  a demand vector with its per-replica count;
                                  class-sampled flavors carry count 0 and a class

Count-based flavors appear exactly count * replicas times per trace; class-based
flavors are drawn uniformly within their class, count-per-class times per
replica.  The final trace order is a uniform shuffle under the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .core import ConfigError, Flavor, Request, vector
from .policies import HostView, PolicyConfig, choose

DATASET_NAMES = ("nfv", "google", "amazon")

#: Fleet sizes used by the large-cloud experiments (dataset -> host count).
DEFAULT_FLEETS = {"nfv": 837, "amazon": 876, "google": 5989}

#: Smaller study fleets for the same datasets at reduced replica counts.
COMPACT_FLEETS = {"nfv": 279, "amazon": 126, "google": 5989}

#: Replica counts pairing with DEFAULT_FLEETS.
DEFAULT_REPLICAS = {"nfv": 30, "amazon": 7, "google": 1}


@dataclass(frozen=True)
class DatasetSpec:
    """A parsed dataset table: flavors, their counts or classes, host shapes."""

    name: str
    resources: tuple[str, ...]
    flavors: tuple[Flavor, ...]
    flavor_counts: dict[str, int]  # per replica; 0 for class-sampled flavors
    class_counts: dict[str, int]  # per-replica draws per class
    flavor_classes: dict[str, str]  # flavor id -> class name
    host_shapes: tuple[tuple[tuple[float, ...], int], ...]  # (capacity, weight)

    @property
    def dim(self) -> int:
        return len(self.resources)

    @property
    def requests_per_replica(self) -> int:
        return sum(self.flavor_counts.values()) + sum(self.class_counts.values())

    def class_members(self, class_name: str) -> list[Flavor]:
        return [f for f in self.flavors if self.flavor_classes.get(f.id) == class_name]


def parse_dataset(text: str, name: str) -> DatasetSpec:
    """Parse the table format described in the module docstring."""
    resource_names: tuple[str, ...] | None = None
    flavors: list[Flavor] = []
    flavor_counts: dict[str, int] = {}
    class_counts: dict[str, int] = {}
    flavor_classes: dict[str, str] = {}
    host_shapes: list[tuple[tuple[float, ...], int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword, args = tokens[0], tokens[1:]
        try:
            if keyword == "resources":
                resource_names = tuple(args)
            elif keyword == "host":
                if resource_names is None:
                    raise ConfigError("'resources' line must come first")
                cap = vector(args[: len(resource_names)])
                if len(args) != len(resource_names) + 1:
                    raise ConfigError("host line: capacity coordinates plus one weight")
                host_shapes.append((cap, int(args[-1])))
            elif keyword == "class":
                class_counts[args[0]] = int(args[1])
            elif keyword == "flavor":
                if resource_names is None:
                    raise ConfigError("'resources' line must come first")
                dim = len(resource_names)
                demand = vector(args[:dim])
                rest = args[dim:]
                if len(rest) not in (1, 2):
                    raise ConfigError("flavor line: demand, count, optional class")
                count = int(rest[0])
                if count < 0:
                    raise ConfigError("flavor counts must be >= 0")
                flavor_id = "x".join(args[:dim])
                if any(f.id == flavor_id for f in flavors):
                    raise ConfigError(f"duplicate flavor {flavor_id}")
                flavors.append(Flavor(flavor_id, demand))
                flavor_counts[flavor_id] = count
                if len(rest) == 2:
                    if rest[1] not in class_counts:
                        raise ConfigError(f"flavor references undeclared class {rest[1]!r}")
                    flavor_classes[flavor_id] = rest[1]
            else:
                raise ConfigError(f"unknown keyword {keyword!r}")
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{name}:{lineno}: malformed line {raw!r}") from exc
        except ConfigError as exc:
            raise ConfigError(f"{name}:{lineno}: {exc}") from None

    if resource_names is None or not flavors or not host_shapes:
        raise ConfigError(f"{name}: dataset needs resources, host shapes, and flavors")
    for class_name in class_counts:
        if not any(c == class_name for c in flavor_classes.values()):
            raise ConfigError(f"{name}: class {class_name!r} has no flavors")
    return DatasetSpec(
        name=name,
        resources=resource_names,
        flavors=tuple(flavors),
        flavor_counts=flavor_counts,
        class_counts=class_counts,
        flavor_classes=flavor_classes,
        host_shapes=tuple(host_shapes),
    )


@lru_cache(maxsize=None)
def load_dataset(name_or_path: str) -> DatasetSpec:
    """Load an embedded dataset by name, or a user table from a file path."""
    if name_or_path in DATASET_NAMES:
        text = resources.files("apsr.data").joinpath(f"{name_or_path}.txt").read_text()
        return parse_dataset(text, name_or_path)
    path = Path(name_or_path)
    if path.is_file():
        return parse_dataset(path.read_text(), path.stem)
    raise ConfigError(
        f"unknown dataset {name_or_path!r}: not one of {DATASET_NAMES} and not a file"
    )


def fleet_capacities(spec: DatasetSpec, hosts: int) -> list[tuple[float, ...]]:
    """Deterministic host shapes for a fleet: round-robin over weighted shapes."""
    if hosts < 1:
        raise ConfigError(f"need at least one host, got {hosts}")
    cycle: list[tuple[float, ...]] = []
    for capacity, weight in spec.host_shapes:
        cycle.extend([capacity] * weight)
    return [cycle[i % len(cycle)] for i in range(hosts)]


def build_trace(spec: DatasetSpec, replicas: int, seed) -> list[Request]:
    """Replicate the dataset's request mix and shuffle it into one trace."""
    if replicas < 1:
        raise ConfigError(f"replicas must be >= 1, got {replicas}")
    rng = np.random.default_rng(seed)
    by_id = {f.id: f for f in spec.flavors}
    items: list[Flavor] = []
    for flavor in spec.flavors:
        items.extend([flavor] * (spec.flavor_counts[flavor.id] * replicas))
    for class_name, count in spec.class_counts.items():
        members = spec.class_members(class_name)
        for _ in range(replicas):
            picks = rng.integers(0, len(members), size=count)
            items.extend(members[i] for i in picks)
    order = rng.permutation(len(items))
    return [Request(i, items[j]) for i, j in enumerate(order)]


@dataclass(frozen=True)
class ArrivalProcess:
    """Per-slot arrival counts: plain Poisson, or rate-switching Poisson that
    drops from `rate` to `rate_low` once `switch_fraction` of the trace arrived."""

    kind: str  # "poisson" | "mmpp"
    rate: float
    rate_low: float | None = None
    switch_fraction: float = 0.2

    def __post_init__(self):
        if self.kind not in ("poisson", "mmpp"):
            raise ConfigError(f"unknown arrival process {self.kind!r}")
        if not self.rate > 0:
            raise ConfigError(f"arrival rate must be positive, got {self.rate}")
        if self.kind == "mmpp":
            if self.rate_low is None or not self.rate_low > 0:
                raise ConfigError("mmpp needs a positive low rate")
            if not 0.0 < self.switch_fraction < 1.0:
                raise ConfigError("mmpp switch fraction must be in (0, 1)")


@dataclass
class ArrivalSchedule:
    counts: list[int]
    process: ArrivalProcess
    lambda_d: float | None = None  # finite-lifetime departure rate, if any

    @property
    def total(self) -> int:
        return sum(self.counts)


def build_arrivals(process: ArrivalProcess, trace_length: int, seed) -> ArrivalSchedule:
    """Draw per-slot arrival counts until the trace is exhausted (last slot truncated)."""
    if trace_length < 1:
        raise ConfigError(f"trace_length must be >= 1, got {trace_length}")
    rng = np.random.default_rng(seed)
    counts: list[int] = []
    arrived = 0
    while arrived < trace_length:
        rate = process.rate
        if process.kind == "mmpp" and arrived >= process.switch_fraction * trace_length:
            rate = process.rate_low
        c = min(int(rng.poisson(rate)), trace_length - arrived)
        counts.append(c)
        arrived += c
    return ArrivalSchedule(counts, process)


@dataclass
class SizingRun:
    run: int
    policy: str
    hosts: int


@dataclass
class SizingResult:
    hosts: int  # the minimum over all runs and policies
    runs: list[SizingRun] = field(default_factory=list)


def size_hosts(
    spec: DatasetSpec,
    replicas: int,
    policy_set: tuple[str, ...] = ("ff", "wf", "random"),
    runs: int = 10,
    seed=0,
) -> SizingResult:
    """Approximate the smallest fleet that can take a whole trace at once.

    Each run shuffles the trace and places it sequentially with a single
    scheduler, opening a fresh host (shapes round-robin per the dataset
    proportions) whenever a request fits no open host.  The answer is the
    minimum open-host count over all runs and policies.
    """
    if runs < 1:
        raise ConfigError(f"runs must be >= 1, got {runs}")
    result = SizingResult(hosts=0)
    best: int | None = None
    for run in range(runs):
        trace = build_trace(spec, replicas, (_as_seed(seed), 1, run))
        for policy_name in policy_set:
            policy = PolicyConfig(policy_name)
            rng = np.random.default_rng((_as_seed(seed), 2, run, _policy_tag(policy_name)))
            opened = _size_one_run(spec, trace, policy, rng)
            result.runs.append(SizingRun(run, policy_name, opened))
            if best is None or opened < best:
                best = opened
    result.hosts = int(best)
    return result


def _as_seed(seed) -> int:
    if isinstance(seed, (tuple, list)):
        raise ConfigError("size_hosts expects a plain integer seed")
    return int(seed)


def _policy_tag(name: str) -> int:
    return int.from_bytes(name.encode(), "big") % (2**31)


def _size_one_run(
    spec: DatasetSpec, trace: list[Request], policy: PolicyConfig, rng
) -> int:
    shape_cycle: list[tuple[float, ...]] = []
    for capacity, weight in spec.host_shapes:
        shape_cycle.extend([capacity] * weight)

    limit = len(trace) + len(shape_cycle)
    capacity = np.empty((limit, spec.dim))
    available = np.empty((limit, spec.dim))
    opened = 0

    for request in trace:
        target = None
        if opened:
            view = HostView(
                ids=np.arange(opened),
                available=available[:opened],
                capacity=capacity[:opened],
            )
            target = choose(policy, view, request, rng)
        while target is None:
            shape = shape_cycle[opened % len(shape_cycle)]
            capacity[opened] = shape
            available[opened] = shape
            opened += 1
            demand = request.flavor.demand
            if all(d <= c for d, c in zip(demand, shape)):
                target = opened - 1
        available[target] -= np.asarray(request.flavor.demand)
    return opened
