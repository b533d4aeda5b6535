"""Placement policies behind a single interface: view + request -> host or decline.

Seven full-snapshot heuristics (ff, wf, random, ffr, wfr, adaptive,
distfromdiag) plus the sampling agent ("apsr") that works on a d-host sample.
Policies are stateless; all randomness flows through the generator passed to
``choose``, and the deterministic kinds never touch it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EPS, ConfigError, Host, Request

FULL_SNAPSHOT_KINDS = ("ff", "wf", "random", "ffr", "wfr", "adaptive", "distfromdiag")
POLICY_KINDS = FULL_SNAPSHOT_KINDS + ("apsr",)

RANDOMIZED_KINDS = ("random", "ffr", "wfr", "apsr")
DETERMINISTIC_KINDS = ("ff", "wf", "adaptive", "distfromdiag")


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    lambda_rank: int = 5  # candidate-set size for ffr/wfr
    adaptive_threshold: float = 0.6

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}; valid: {POLICY_KINDS}")
        if self.lambda_rank < 1:
            raise ConfigError(f"lambda_rank must be >= 1, got {self.lambda_rank}")
        if not 0.0 <= self.adaptive_threshold <= 1.0:
            raise ConfigError(
                f"adaptive_threshold must be in [0, 1], got {self.adaptive_threshold}"
            )


@dataclass
class HostView:
    """What a scheduler sees: host ids with their availability and capacity rows.

    Full views list every host once, ordered by id.  Sample views are drawn
    with replacement and may repeat ids; ``choose`` collapses them to the
    distinct set before picking.
    """

    ids: np.ndarray
    available: np.ndarray
    capacity: np.ndarray
    completeness: str = "full"  # "full" | "sample"

    def __post_init__(self):
        if self.completeness not in ("full", "sample"):
            raise ConfigError(f"unknown view completeness {self.completeness!r}")


def host_load(host: Host) -> float:
    """Load of one host: the worst per-resource used fraction."""
    if any(c <= 0 for c in host.capacity):
        raise ConfigError(f"host {host.id} has a non-positive capacity coordinate")
    return max((c - a) / c for c, a in zip(host.capacity, host.available))


def _view_loads(view: HostView) -> np.ndarray:
    if np.any(view.capacity <= 0):
        raise ConfigError("zero-capacity coordinate in host view")
    return ((view.capacity - view.available) / view.capacity).max(axis=1)


def choose(
    policy: PolicyConfig,
    view: HostView,
    request: Request,
    rng: np.random.Generator,
) -> int | None:
    """Pick a host for the request from the view, or None to decline.

    Declines happen exactly when no host in the view can take the request's
    demand.  A returned host is always available for the request in the view.
    """
    demand = np.asarray(request.flavor.demand, dtype=float)
    mask = (view.available >= demand - EPS).all(axis=1)

    if policy.kind == "apsr":
        candidates = np.unique(view.ids[mask])
        if candidates.size == 0:
            return None
        return int(candidates[rng.integers(candidates.size)])

    if view.completeness != "full":
        raise ConfigError(f"policy {policy.kind!r} needs a full snapshot view")
    if view.ids.size == 0:
        raise ConfigError("empty host view")
    if not mask.any():
        return None

    ids = view.ids[mask]
    if policy.kind == "ff":
        return int(ids.min())
    if policy.kind == "random":
        return int(ids[rng.integers(ids.size)])
    if policy.kind == "ffr":
        candidates = np.sort(ids)[: policy.lambda_rank]
        return int(candidates[rng.integers(candidates.size)])

    loads = _view_loads(view)[mask]
    if policy.kind == "wf":
        return int(ids[np.lexsort((ids, loads))[0]])
    if policy.kind == "wfr":
        # rank by (load, id), then pick uniformly among the top lambda_rank
        candidates = ids[np.lexsort((ids, loads))][: policy.lambda_rank]
        return int(candidates[rng.integers(candidates.size)])
    if policy.kind == "adaptive":
        regime = "wf" if float(_view_loads(view).mean()) < policy.adaptive_threshold else "ff"
        return choose(PolicyConfig(regime), view, request, rng)
    if policy.kind == "distfromdiag":
        # usage fractions after a hypothetical placement; prefer the host whose
        # usage stays closest to equal consumption across resources
        capacity = view.capacity[mask]
        usage = (capacity - (view.available[mask] - demand)) / capacity
        centered = usage - usage.mean(axis=1, keepdims=True)
        scores = np.sqrt((centered * centered).sum(axis=1))
        return int(ids[np.lexsort((ids, scores))[0]])

    raise ConfigError(f"unknown policy kind {policy.kind!r}")
