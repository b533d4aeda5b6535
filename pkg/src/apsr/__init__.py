"""Parallel VM placement with decline-ratio guarantees.

A library and simulator for slot-based placement of resource requests on
finite-capacity hosts: closed-form feasibility analysis for parallel sampling
schedulers, an adaptive controller that maximizes parallelism under an SLA and
query budget, seven baseline placement policies, bundled request-mix datasets,
and a deterministic trace-driven simulation engine.
"""

__version__ = "0.1.0"

from .ballsbins import (
    BallsBinsParams,
    SimulationResult,
    SlaBudget,
    binom_pmf,
    expected_happy,
    expected_happy_given_f,
    max_paral,
    satisfy_sla,
    sigma,
    simulate_balls_and_bins,
)
from .controller import ApsrController, FlavorCounters, estimate_k
from .core import (
    EPS,
    INFINITE,
    AvailabilityCensus,
    ClusterState,
    ConfigError,
    Flavor,
    Host,
    ModelError,
    Placement,
    Request,
    is_available,
    vector,
)
from .engine import (
    PRESETS,
    ExperimentConfig,
    RunMetrics,
    Simulation,
    SlotMetrics,
    make_config,
    run_experiment,
    sweep,
)
from .policies import HostView, PolicyConfig, choose, host_load
from .workload import (
    COMPACT_FLEETS,
    DATASET_NAMES,
    DEFAULT_FLEETS,
    DEFAULT_REPLICAS,
    ArrivalProcess,
    ArrivalSchedule,
    DatasetSpec,
    SizingResult,
    build_arrivals,
    build_trace,
    fleet_capacities,
    load_dataset,
    size_hosts,
)

__all__ = [
    "__version__",
    "EPS",
    "INFINITE",
    "ApsrController",
    "ArrivalProcess",
    "ArrivalSchedule",
    "AvailabilityCensus",
    "BallsBinsParams",
    "COMPACT_FLEETS",
    "ClusterState",
    "ConfigError",
    "DATASET_NAMES",
    "DEFAULT_FLEETS",
    "DEFAULT_REPLICAS",
    "DatasetSpec",
    "ExperimentConfig",
    "Flavor",
    "FlavorCounters",
    "Host",
    "HostView",
    "ModelError",
    "PRESETS",
    "Placement",
    "PolicyConfig",
    "Request",
    "RunMetrics",
    "SimulationResult",
    "Simulation",
    "SizingResult",
    "SlaBudget",
    "SlotMetrics",
    "binom_pmf",
    "build_arrivals",
    "build_trace",
    "choose",
    "estimate_k",
    "expected_happy",
    "expected_happy_given_f",
    "fleet_capacities",
    "host_load",
    "is_available",
    "load_dataset",
    "make_config",
    "max_paral",
    "run_experiment",
    "satisfy_sla",
    "sigma",
    "simulate_balls_and_bins",
    "size_hosts",
    "sweep",
    "vector",
]
