"""Replication strategies behind a common request/interval hook interface.

Baselines react to individual requests (or, for best-client, to interval
totals) and make room with LRU eviction. PFR only acts at interval ends and
keeps its own min-RI eviction.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .fuzzy import ConfigError
from .pfr import EVICTED, PLACED, PfrParams, ReplicationAction, run_interval
from .state import GridState, dependent_files

NONE = "none"
BEST_CLIENT = "best_client"
CASCADING = "cascading"
CACHING_CASCADING = "caching_cascading"
FAST_SPREAD = "fast_spread"
PHFS_SIMPLIFIED = "phfs_simplified"
PFR = "pfr"

STRATEGY_KINDS = (NONE, BEST_CLIENT, CASCADING, CACHING_CASCADING, FAST_SPREAD,
                  PHFS_SIMPLIFIED, PFR)


@dataclass(frozen=True)
class ThresholdParams:
    cascade_threshold: int = 3

    def validate(self):
        if self.cascade_threshold < 1:
            raise ConfigError("cascade_threshold must be >= 1")
        return self


def serve_request(state: GridState, requester, f):
    """Hops from ``requester`` to the nearest cluster holding ``f``, and that holder.

    The walk follows tree edges upward; the root always terminates it.
    """
    cat = state.catalog
    path = state.node_path(requester)
    for hops, node in enumerate(path):
        if cat.holds(node, f):
            return hops, cat.cluster_of(node)
    return len(path), cat.root


def place_lru(state: GridState, f, node, tick, trigger="request"):
    """Place ``f`` on ``node``'s cluster, evicting least-recently-used replicas."""
    cat = state.catalog
    c = cat.cluster_of(node)
    if c is None or c == cat.root or cat.holds(c, f):
        return []
    size = cat.size(f)
    if size > cat.capacity[c]:
        return []
    actions = []
    if cat.free_space[c] < size:
        lru = sorted(cat.held[c], key=lambda g: (cat.last_used.get((c, g), -1), g))
        for g in lru:
            cat.remove_replica(g, c)
            actions.append(ReplicationAction(EVICTED, g, c, trigger))
            if cat.free_space[c] >= size:
                break
    cat.place_replica(f, c, tick)
    actions.append(ReplicationAction(PLACED, f, c, trigger))
    return actions


def top_down_clusters(state: GridState, requester):
    """Root followed by the distinct clusters on the way down to ``requester``."""
    return [state.catalog.root] + list(reversed(state.header_path(requester)))


class Strategy:
    kind = NONE

    def on_request(self, state, request, served_by, tick):
        return []

    def on_interval_end(self, state, interval, tick):
        return []


class NoReplication(Strategy):
    kind = NONE


class BestClient(Strategy):
    kind = BEST_CLIENT

    def __init__(self):
        self.counts = defaultdict(lambda: defaultdict(int))

    def on_request(self, state, request, served_by, tick):
        self.counts[request.file][request.requester] += 1
        return []

    def on_interval_end(self, state, interval, tick):
        actions = []
        for f in sorted(self.counts):
            by_node = self.counts[f]
            top = max(by_node.values())
            leaders = [h for h, c in by_node.items() if c == top]
            if len(leaders) == 1:
                actions += place_lru(state, f, leaders[0], tick, trigger="interval")
        self.counts.clear()
        return actions


class Cascading(Strategy):
    """Push a file one cluster down toward the requester once the serving
    holder has served it ``cascade_threshold`` times; the counter then resets."""
    kind = CASCADING

    def __init__(self, params: ThresholdParams):
        self.threshold = params.validate().cascade_threshold
        self.served = defaultdict(int)

    def on_request(self, state, request, served_by, tick):
        key = (served_by, request.file)
        self.served[key] += 1
        if self.served[key] < self.threshold:
            return []
        chain = top_down_clusters(state, request.requester)
        pos = chain.index(served_by)
        if pos + 1 >= len(chain):
            return []
        self.served[key] = 0
        return place_lru(state, request.file, chain[pos + 1], tick)


class CachingCascading(Cascading):
    kind = CACHING_CASCADING

    def on_request(self, state, request, served_by, tick):
        actions = super().on_request(state, request, served_by, tick)
        return actions + place_lru(state, request.file, request.requester, tick)


class FastSpread(Strategy):
    kind = FAST_SPREAD

    def on_request(self, state, request, served_by, tick):
        actions = []
        for c in top_down_clusters(state, request.requester)[1:]:
            actions += place_lru(state, request.file, c, tick)
        return actions


class PhfsSimplified(FastSpread):
    """Fast spread plus one replica of each strongly related file at the
    requester's parent. Deeper placement for stronger dependencies is not modelled."""
    kind = PHFS_SIMPLIFIED

    def __init__(self, dependency_threshold=0.5):
        self.dependency_threshold = dependency_threshold

    def on_request(self, state, request, served_by, tick):
        actions = super().on_request(state, request, served_by, tick)
        parent = state.tree.parent(request.requester)
        if parent is None or parent == state.tree.root:
            return actions
        for g in dependent_files(state.dep, request.file, self.dependency_threshold):
            actions += place_lru(state, g, parent, tick)
        return actions


class Pfr(Strategy):
    kind = PFR

    def __init__(self, params: PfrParams, injected_ri=None):
        self.params = params.validate()
        self.injected_ri = injected_ri

    def on_interval_end(self, state, interval, tick):
        ri = self.injected_ri if interval == 0 else None
        return run_interval(state, self.params, injected_ri=ri, tick=tick)


def make_strategy(kind, pfr_params=None, thresholds=None, injected_ri=None):
    pfr_params = pfr_params or PfrParams()
    thresholds = thresholds or ThresholdParams()
    if kind == NONE:
        return NoReplication()
    if kind == BEST_CLIENT:
        return BestClient()
    if kind == CASCADING:
        return Cascading(thresholds)
    if kind == CACHING_CASCADING:
        return CachingCascading(thresholds)
    if kind == FAST_SPREAD:
        return FastSpread()
    if kind == PHFS_SIMPLIFIED:
        return PhfsSimplified(pfr_params.dependency_threshold)
    if kind == PFR:
        return Pfr(pfr_params, injected_ri)
    raise ConfigError(f"unknown strategy {kind!r}; choose from {', '.join(STRATEGY_KINDS)}")
