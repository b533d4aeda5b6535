"""Slot-based simulation loop: arrivals, parallel decisions against a slot-start
snapshot, contended resolution at hosts, metric accumulation, controller ticks.

Each slot proceeds in a fixed order: departures, arrivals, controller tick (on
period boundaries), scheduler decisions, randomized resolution, metrics.  Every
scheduler observes the same start-of-slot snapshot and owns an RNG stream
derived from (run seed, slot, scheduler index), so decisions are independent of
the order schedulers are evaluated in.  Chosen assignments are then resolved
against the live state in a uniformly random order; an assignment fails if its
host can no longer take the request at its turn.  Declined requests are not
re-queued: each request gets a single placement attempt.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, fields
from typing import Iterable

import numpy as np

from .ballsbins import SlaBudget
from .controller import ESTIMATOR_MODES, ApsrController, FlavorCounters
from .core import EPS, INFINITE, ClusterState, ConfigError, Request
from .policies import POLICY_KINDS, HostView, PolicyConfig, choose
from .workload import (
    DEFAULT_FLEETS,
    ArrivalProcess,
    build_arrivals,
    build_trace,
    fleet_capacities,
    load_dataset,
)

# seed sub-stream tags
_TRACE, _ARRIVALS, _DEPARTURES, _SCHEDULER, _RESOLVE = range(5)


@dataclass
class ExperimentConfig:
    """One simulation run, fully determined together with its seed."""

    dataset: str
    replicas: int = 1
    hosts: int | None = None  # None: the dataset's default fleet size
    policy: str = "apsr"
    schedulers: int | None = None  # fixed fleet size; None when controller-managed
    controller: bool = True
    delta_hat: float = 0.05
    budget: int | str | None = None  # None: one query per host; "60%" of hosts ok
    period: int = 10
    alpha: float = 0.1
    estimator: str = "min"
    lambda_a: float = 20.0
    arrival: str = "poisson"
    mmpp_rate_low: float = 5.0
    mmpp_switch: float = 0.2
    lifetime: str = "infinite"  # "infinite" | "finite"
    lambda_d: float | None = None
    lambda_rank: int = 5
    adaptive_threshold: float = 0.6
    seed: int = 0
    max_slots: int = 1_000_000

    def __post_init__(self):
        if self.policy not in POLICY_KINDS:
            raise ConfigError(f"unknown policy {self.policy!r}; valid: {POLICY_KINDS}")
        if self.controller == (self.schedulers is not None):
            raise ConfigError("set exactly one of: fixed schedulers, controller")
        if self.controller != (self.policy == "apsr"):
            raise ConfigError(
                "the controller manages 'apsr' schedulers; fixed fleets run snapshot policies"
            )
        if self.schedulers is not None and self.schedulers < 1:
            raise ConfigError(f"schedulers must be >= 1, got {self.schedulers}")
        if self.estimator not in ESTIMATOR_MODES:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.lifetime not in ("infinite", "finite"):
            raise ConfigError(f"lifetime must be 'infinite' or 'finite', got {self.lifetime!r}")
        if (self.lifetime == "finite") != (self.lambda_d is not None):
            raise ConfigError("finite lifetime requires lambda_d; infinite forbids it")
        if self.lambda_d is not None and not self.lambda_d > 0:
            raise ConfigError(f"lambda_d must be positive, got {self.lambda_d}")
        if self.arrival not in ("poisson", "mmpp"):
            raise ConfigError(f"unknown arrival process {self.arrival!r}")
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if self.hosts is not None and self.hosts < 1:
            raise ConfigError(f"hosts must be >= 1, got {self.hosts}")
        if self.max_slots < 1:
            raise ConfigError(f"max_slots must be >= 1, got {self.max_slots}")
        if isinstance(self.budget, str):
            _parse_percent(self.budget)
        elif self.budget is not None and self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")

    def arrival_process(self) -> ArrivalProcess:
        if self.arrival == "poisson":
            return ArrivalProcess("poisson", self.lambda_a)
        return ArrivalProcess("mmpp", self.lambda_a, self.mmpp_rate_low, self.mmpp_switch)

    def resolve_budget(self, n: int) -> int:
        if self.budget is None:
            return n
        if isinstance(self.budget, str):
            return max(1, round(n * _parse_percent(self.budget) / 100.0))
        return int(self.budget)


def _parse_percent(text: str) -> float:
    if not text.endswith("%"):
        raise ConfigError(f"budget must be an integer or 'NN%', got {text!r}")
    try:
        value = float(text[:-1])
    except ValueError:
        raise ConfigError(f"budget must be an integer or 'NN%', got {text!r}") from None
    if not 0.0 < value <= 100.0:
        raise ConfigError(f"budget percentage must be in (0, 100], got {text!r}")
    return value


#: Ready-made configurations for the bundled datasets.  Values not set here
#: follow ExperimentConfig defaults (controller-managed apsr, delta_hat 5%,
#: budget = host count, T=10, alpha=0.1, Poisson arrivals at 20/slot).
PRESETS: dict[str, dict] = {
    "nfv": dict(dataset="nfv", replicas=30, hosts=837),
    "google": dict(dataset="google", replicas=1, hosts=5989),
    "amazon": dict(dataset="amazon", replicas=7, hosts=876),
    # saturated cloud with rate-switching arrivals and finite request lifetimes
    "nfv-mmpp": dict(
        dataset="nfv",
        replicas=100,
        hosts=837,
        arrival="mmpp",
        lambda_a=20.0,
        mmpp_rate_low=5.0,
        mmpp_switch=0.2,
        lifetime="finite",
        lambda_d=4.0,
    ),
}

_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def make_config(preset: str | None = None, **overrides) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional preset plus overrides."""
    base: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; valid: {tuple(PRESETS)}")
        base.update(PRESETS[preset])
    unknown = set(overrides) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base.update(overrides)
    # a fixed scheduler count implies no controller unless stated otherwise
    if base.get("schedulers") is not None and "controller" not in overrides:
        base["controller"] = False
    return ExperimentConfig(**base)


@dataclass
class SlotMetrics:
    slot: int
    attempts: int
    successes: int
    decline_no_host: int
    decline_collision: int
    queries: int
    schedulers_allowed: int
    k_estimate: float  # nan for fixed-fleet runs
    utilization: float

    @property
    def active(self) -> int:
        return self.attempts


@dataclass
class SlotSeries:
    """Per-slot time series, parallel lists indexed by slot."""

    slot: list[int] = field(default_factory=list)
    utilization: list[float] = field(default_factory=list)
    schedulers: list[int] = field(default_factory=list)
    k_estimate: list[float] = field(default_factory=list)
    decline_ratio: list[float] = field(default_factory=list)  # cumulative
    attempts: list[int] = field(default_factory=list)
    successes: list[int] = field(default_factory=list)
    queries: list[int] = field(default_factory=list)


@dataclass
class RunMetrics:
    slots: int = 0
    attempts: int = 0
    successes: int = 0
    declines_no_host: int = 0
    declines_collision: int = 0
    scheduler_queries: int = 0
    controller_queries: int = 0
    truncated: bool = False
    series: SlotSeries = field(default_factory=SlotSeries)

    @property
    def declines(self) -> int:
        return self.declines_no_host + self.declines_collision

    @property
    def decline_ratio(self) -> float:
        return self.declines / self.attempts if self.attempts else 0.0

    @property
    def throughput(self) -> float:
        """Successful placements per slot over the whole run."""
        return self.successes / self.slots if self.slots else 0.0

    @property
    def mean_active(self) -> float:
        """Average number of schedulers that handled a request per slot."""
        return self.attempts / self.slots if self.slots else 0.0

    def record(self, sm: SlotMetrics) -> None:
        self.slots += 1
        self.attempts += sm.attempts
        self.successes += sm.successes
        self.declines_no_host += sm.decline_no_host
        self.declines_collision += sm.decline_collision
        self.scheduler_queries += sm.queries
        s = self.series
        s.slot.append(sm.slot)
        s.utilization.append(sm.utilization)
        s.schedulers.append(sm.schedulers_allowed)
        s.k_estimate.append(sm.k_estimate)
        s.decline_ratio.append(self.decline_ratio)
        s.attempts.append(sm.attempts)
        s.successes.append(sm.successes)
        s.queries.append(sm.queries)

    def to_dict(self) -> dict:
        return {
            "slots": self.slots,
            "attempts": self.attempts,
            "successes": self.successes,
            "declines_no_host": self.declines_no_host,
            "declines_collision": self.declines_collision,
            "decline_ratio": self.decline_ratio,
            "throughput": self.throughput,
            "mean_active": self.mean_active,
            "scheduler_queries": self.scheduler_queries,
            "controller_queries": self.controller_queries,
            "truncated": self.truncated,
        }


class Simulation:
    """One deterministic run of an experiment configuration."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.dataset = load_dataset(config.dataset)
        hosts = config.hosts or DEFAULT_FLEETS.get(self.dataset.name)
        if hosts is None:
            raise ConfigError(
                f"dataset {self.dataset.name!r} has no default fleet; set hosts explicitly"
            )
        self.state = ClusterState(fleet_capacities(self.dataset, hosts))
        self.budget = config.resolve_budget(self.state.n)
        self.trace = build_trace(self.dataset, config.replicas, (config.seed, _TRACE))
        self.schedule = (
            build_arrivals(config.arrival_process(), len(self.trace), (config.seed, _ARRIVALS))
            if self.trace
            else None
        )
        self.policy = PolicyConfig(
            config.policy,
            lambda_rank=config.lambda_rank,
            adaptive_threshold=config.adaptive_threshold,
        )
        self.controller = (
            ApsrController(
                self.state.n,
                SlaBudget(config.delta_hat, self.budget),
                period=config.period,
                alpha=config.alpha,
                estimator=config.estimator,
            )
            if config.controller
            else None
        )
        self.counters = FlavorCounters() if config.controller else None
        self.metrics = RunMetrics()

        self._next_arrival = 0
        self._host_ids = np.arange(self.state.n)
        self._rng_departures = np.random.default_rng((config.seed, _DEPARTURES))
        self._placed_ids: list[int] = []
        self._placed_pos: dict[int, int] = {}
        self._departure_heap: list[tuple[float, int]] = []

    # -- state bookkeeping -------------------------------------------------

    def _place(self, request: Request, host_id: int) -> bool:
        if not self.state.place(request, host_id):
            return False
        self._placed_pos[request.id] = len(self._placed_ids)
        self._placed_ids.append(request.id)
        if request.lifetime != INFINITE:
            heapq.heappush(
                self._departure_heap, (request.arrival_slot + request.lifetime, request.id)
            )
        return True

    def _complete(self, request_id: int) -> None:
        self.state.complete(request_id)
        pos = self._placed_pos.pop(request_id)
        last = self._placed_ids.pop()
        if last != request_id:
            self._placed_ids[pos] = last
            self._placed_pos[last] = pos

    def _process_departures(self, slot: int) -> None:
        while self._departure_heap and self._departure_heap[0][0] <= slot:
            _, request_id = heapq.heappop(self._departure_heap)
            if request_id in self.state.placements:
                self._complete(request_id)
        if self.config.lambda_d is not None and self._placed_ids:
            leaving = int(self._rng_departures.poisson(self.config.lambda_d))
            leaving = min(leaving, len(self._placed_ids))
            if leaving:
                picks = self._rng_departures.choice(
                    len(self._placed_ids), size=leaving, replace=False
                )
                for request_id in [self._placed_ids[i] for i in picks]:
                    self._complete(request_id)

    # -- per-slot work -----------------------------------------------------

    def _decide(
        self, snapshot: np.ndarray, request: Request, slot: int, index: int
    ) -> tuple[int | None, int]:
        """One scheduler's decision from the slot-start snapshot.

        Returns (target host or None, queries charged).  Depends only on the
        snapshot and the (seed, slot, index) stream, never on other schedulers.
        """
        rng = np.random.default_rng((self.config.seed, _SCHEDULER, slot, index))
        if self.policy.kind == "apsr":
            d = self.controller.d
            sample = rng.integers(0, self.state.n, size=d)
            view = HostView(
                ids=sample,
                available=snapshot[sample],
                capacity=self.state.capacity[sample],
                completeness="sample",
            )
            demand = np.asarray(request.flavor.demand)
            found = int(((view.available >= demand - EPS).all(axis=1)).sum())
            self.counters.record(request.flavor.id, d, found)
            return choose(self.policy, view, request, rng), d
        view = HostView(
            ids=self._host_ids,
            available=snapshot,
            capacity=self.state.capacity,
            completeness="full",
        )
        return choose(self.policy, view, request, rng), self.state.n

    def run_slot(self) -> SlotMetrics:
        state, config = self.state, self.config
        slot = state.slot

        self._process_departures(slot)

        if self.schedule is not None and slot < len(self.schedule.counts):
            for _ in range(self.schedule.counts[slot]):
                request = self.trace[self._next_arrival]
                self._next_arrival += 1
                request.arrival_slot = slot
                state.pending.append(request)

        if self.controller is not None and self.controller.due(slot):
            census = None
            if self.controller.estimator == "oracle":
                census = state.census(self.dataset.flavors)
                self.metrics.controller_queries += state.n
            self.controller.tick(counters=self.counters, census=census)

        allowed = self.controller.s if self.controller else config.schedulers
        active = min(allowed, len(state.pending))
        snapshot = state.available.copy()
        decisions: list[tuple[Request, int | None]] = []
        queries = 0
        for i in range(active):
            request = state.pending.popleft()
            target, charged = self._decide(snapshot, request, slot, i)
            queries += charged
            decisions.append((request, target))

        order = np.random.default_rng((config.seed, _RESOLVE, slot)).permutation(len(decisions))
        successes = no_host = collisions = 0
        for j in order:
            request, target = decisions[j]
            if target is None:
                no_host += 1
            elif self._place(request, target):
                successes += 1
            else:
                collisions += 1

        sm = SlotMetrics(
            slot=slot,
            attempts=active,
            successes=successes,
            decline_no_host=no_host,
            decline_collision=collisions,
            queries=queries,
            schedulers_allowed=allowed,
            k_estimate=self.controller.k_estimate if self.controller else float("nan"),
            utilization=state.utilization(),
        )
        self.metrics.record(sm)
        state.slot += 1
        return sm

    def run(self) -> RunMetrics:
        while self._next_arrival < len(self.trace) or self.state.pending:
            if self.state.slot >= self.config.max_slots:
                self.metrics.truncated = True
                break
            self.run_slot()
        return self.metrics


def run_experiment(config: ExperimentConfig) -> RunMetrics:
    """Run one experiment to completion; deterministic in (config, seed)."""
    return Simulation(config).run()


def sweep(config: ExperimentConfig, seeds: Iterable[int]) -> dict[int, RunMetrics]:
    """Run the same configuration across seeds (independent runs)."""
    results: dict[int, RunMetrics] = {}
    for seed in seeds:
        results[seed] = run_experiment(_with_seed(config, seed))
    return results


def _with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    values = {f.name: getattr(config, f.name) for f in fields(ExperimentConfig)}
    values["seed"] = seed
    return ExperimentConfig(**values)
