"""Predictive Fuzzy Replication: the interval-end decision procedure.

Each interval the usage ratios roll forward, the RI matrix is rebuilt, the
best (header, file) entry that passes the usage gate is fast-spread from the
root down to its header, and every strongly dependent file is fast-spread to
whichever node on that same path scores it highest. Space is made by evicting
the lowest-RI replicas of the receiving cluster, never evicting a replica that
scores at least as high as the incoming one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .fuzzy import ConfigError
from .state import (GridState, PlaceResult, RIMatrix, ReplicaCatalog,
                    dependent_files, recompute_ri)

PLACED = "placed"
EVICTED = "evicted"
SKIP_NO_CANDIDATE = "skipped-no-candidate"
SKIP_GUARD = "skipped-guard"
SKIP_DUPLICATE = "skipped-duplicate"


@dataclass(frozen=True)
class PfrParams:
    gamma: float = 2.0
    dependency_threshold: float = 0.5
    # guard primary placements too; off = evict unconditionally for the primary
    eviction_guard: bool = True

    def validate(self):
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if not 0.0 <= self.dependency_threshold < 1.0:
            raise ConfigError("dependency_threshold must lie in [0, 1)")
        return self


@dataclass(frozen=True)
class ReplicationAction:
    kind: str
    file: Optional[int]
    node: Optional[int]
    trigger: str = "primary"  # primary | dependent | request | interval
    parent: Optional[int] = None  # primary file id, for dependent placements

    def to_dict(self):
        return asdict(self)


def apply_action(catalog: ReplicaCatalog, action: ReplicationAction):
    """Replay one logged action onto ``catalog``; skip markers are ignored."""
    if action.kind == PLACED:
        catalog.place_replica(action.file, action.node)
    elif action.kind == EVICTED:
        catalog.remove_replica(action.file, action.node)


def select_primary(ri: RIMatrix, catalog: ReplicaCatalog, usage, params: PfrParams):
    """Highest-RI (header, file) not yet replicated in that cluster and with
    usage ratio >= gamma. Ties go to the lower header id, then lower file id."""
    headers = np.array(ri.headers)
    vals = ri.values
    h_idx, f_idx = np.meshgrid(np.arange(len(headers)), np.arange(vals.shape[1]), indexing="ij")
    order = np.lexsort((f_idx.ravel(), headers[h_idx.ravel()], -vals.ravel()))
    for k in order:
        h = int(headers[h_idx.ravel()[k]])
        f = int(f_idx.ravel()[k]) + 1
        if catalog.holds(h, f):
            continue
        if usage.usage_ratio(h, f) >= params.gamma:
            return h, f
    return None


def make_space(catalog: ReplicaCatalog, ri: RIMatrix, header, needed, incoming_ri=None):
    """Victims to evict from ``header`` so that ``needed`` units fit.

    Victims are chosen lowest-RI first (file id on ties) and only staged;
    nothing is removed here. Returns None (refusal) when the guard trips,
    i.e. the next victim scores at least ``incoming_ri``, or when even an
    empty cluster could not fit the file.
    """
    free = catalog.free_space[header]
    if free >= needed:
        return []
    if needed > catalog.capacity[header]:
        return None
    held = sorted(catalog.held[header], key=lambda g: (ri[header, g], g))
    victims = []
    for g in held:
        if incoming_ri is not None and ri[header, g] >= incoming_ri:
            return None
        victims.append(g)
        free += catalog.size(g)
        if free >= needed:
            return victims
    return None


def fast_spread(state: GridState, ri: RIMatrix, f, target, *, guard=True,
                trigger="primary", parent=None, tick=None):
    """Replicate ``f`` on every cluster from the root down to ``target``."""
    catalog = state.catalog
    actions = []
    for c in reversed(state.header_path(target)):
        if catalog.holds(c, f):
            actions.append(ReplicationAction(SKIP_DUPLICATE, f, c, trigger, parent))
            continue
        victims = make_space(catalog, ri, c, catalog.size(f), ri[c, f] if guard else None)
        if victims is None:
            actions.append(ReplicationAction(SKIP_GUARD, f, c, trigger, parent))
            continue
        for g in victims:
            catalog.remove_replica(g, c)
            actions.append(ReplicationAction(EVICTED, g, c, trigger, parent))
        result = catalog.place_replica(f, c, tick)
        assert result is PlaceResult.PLACED
        actions.append(ReplicationAction(PLACED, f, c, trigger, parent))
    return actions


def place_dependents(state: GridState, ri: RIMatrix, n, m, params: PfrParams, tick=None):
    """Fast-spread each file depending on ``n`` to its best node on m's path."""
    path = state.header_path(m)
    actions = []
    for g in dependent_files(state.dep, n, params.dependency_threshold):
        target = None
        # top-down scan with strict > keeps the node nearer the root on ties
        for s in reversed(path):
            if target is None or ri[s, g] > ri[target, g]:
                target = s
        actions += fast_spread(state, ri, g, target, guard=True,
                               trigger="dependent", parent=n, tick=tick)
    return actions


def decide(state: GridState, ri: RIMatrix, params: PfrParams, tick=None):
    """Primary selection plus placements for an already computed RI matrix."""
    state.ri = ri
    choice = select_primary(ri, state.catalog, state.usage, params)
    if choice is None:
        return [ReplicationAction(SKIP_NO_CANDIDATE, None, None)]
    m, n = choice
    actions = fast_spread(state, ri, n, m, guard=params.eviction_guard, tick=tick)
    actions += place_dependents(state, ri, n, m, params, tick=tick)
    return actions


def run_interval(state: GridState, params: PfrParams, injected_ri=None, tick=None):
    """Close the interval: roll usage, rebuild RI, then replicate.

    With ``injected_ri`` the usage roll and RI rebuild are skipped and the
    given matrix and current usage ratios drive the decision directly.
    """
    if injected_ri is None:
        state.usage.close_interval()
        ri = recompute_ri(state)
    else:
        ri = injected_ri
    return decide(state, ri, params, tick=tick)
