"""Mutable simulation state: catalog, usage statistics, dependency and RI matrices."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fuzzy import ConfigError, FuzzySystemConfig, infer_ri
from .topology import Cluster, GridTree, path_to_root


@dataclass(frozen=True)
class FileMeta:
    id: int  # 1-based
    size: float

    def __post_init__(self):
        if self.size <= 0:
            raise ConfigError(f"file {self.id}: size must be positive")


def update_usage(ratio, prev, curr):
    """One interval step of the usage-ratio recurrence.

    No requests this interval halves the ratio (this wins when both counts
    are zero); no requests last interval adds the current count; otherwise
    the ratio scales by curr/prev. Works elementwise on arrays.
    """
    ratio = np.asarray(ratio, dtype=float)
    prev = np.asarray(prev, dtype=float)
    curr = np.asarray(curr, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = ratio * curr / prev
    out = np.where(curr == 0, ratio / 2.0, np.where(prev == 0, ratio + curr, scaled))
    return out if out.ndim else float(out)


class UsageStats:
    """Per (header, file) usage ratio plus current/previous interval counts."""

    def __init__(self, headers, n_files):
        self.headers = tuple(headers)
        self.row = {h: i for i, h in enumerate(self.headers)}
        shape = (len(self.headers), n_files)
        self.ratio = np.zeros(shape)
        self.curr = np.zeros(shape, dtype=np.int64)
        self.prev = np.zeros(shape, dtype=np.int64)

    def record(self, header, file_id, count=1):
        self.curr[self.row[header], file_id - 1] += count

    def usage_ratio(self, header, file_id):
        return float(self.ratio[self.row[header], file_id - 1])

    def set_ratio(self, header, file_id, value):
        self.ratio[self.row[header], file_id - 1] = value

    def close_interval(self):
        self.ratio = update_usage(self.ratio, self.prev, self.curr)
        self.prev = self.curr
        self.curr = np.zeros_like(self.prev)


class DependencyMatrix:
    """Row-major file dependency ratios, ``dep[f, g]`` for 1-based file ids."""

    def __init__(self, values):
        m = np.array(values, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("dependency matrix must be square")
        if np.any(m < 0) or np.any(m > 1):
            raise ConfigError("dependency entries must lie in [0, 1]")
        if not np.all(np.diag(m) == 1.0):
            raise ConfigError("dependency diagonal must be 1")
        self.values = m
        self.values.setflags(write=False)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def n(self):
        return self.values.shape[0]

    def __getitem__(self, key):
        f, g = key
        return float(self.values[f - 1, g - 1])


def dependent_files(dep: DependencyMatrix, f, threshold=0.5):
    """Files g != f with dep[f, g] strictly above ``threshold``, ascending."""
    row = dep.values[f - 1]
    return [int(g) + 1 for g in np.flatnonzero(row > threshold) if g + 1 != f]


class RIMatrix:
    """Replica Indicator scores, rows = cluster headers, columns = files."""

    def __init__(self, headers, values):
        self.headers = tuple(headers)
        self.row = {h: i for i, h in enumerate(self.headers)}
        self.values = np.array(values, dtype=float)
        if self.values.shape[0] != len(self.headers):
            raise ConfigError("RI matrix rows must match the header list")
        self.values.setflags(write=False)

    def __getitem__(self, key):
        h, f = key
        return float(self.values[self.row[h], f - 1])

    @property
    def n_files(self):
        return self.values.shape[1]


class PlaceResult(Enum):
    PLACED = "placed"
    DUPLICATE = "duplicate"


class CatalogError(RuntimeError):
    pass


class InsufficientSpace(CatalogError):
    pass


class ReplicaCatalog:
    """Which clusters hold which files, at cluster-header granularity.

    Any tree node maps to the header of its cluster; the root (master store)
    implicitly holds every file and has no free-space account.
    """

    def __init__(self, tree: GridTree, clusters, files):
        self.tree = tree
        self.root = tree.root
        self.files = {f.id: f for f in files}
        self.header_of = {}
        self.capacity = {}
        for c in clusters:
            self.capacity[c.header_id] = float(sum(tree.nodes[i].capacity for i in c.member_ids))
            for i in c.member_ids:
                self.header_of[i] = c.header_id
        self.headers = tuple(sorted(self.capacity))
        self.free_space = dict(self.capacity)
        self.holders = {f: set() for f in self.files}
        self.held = {h: set() for h in self.headers}
        self.last_used = {}

    def cluster_of(self, node):
        """Header id for ``node``'s cluster, the root for the root, None if unclustered."""
        if node == self.root:
            return self.root
        return self.header_of.get(node)

    def holds(self, node, f):
        c = self.cluster_of(node)
        if c == self.root:
            return True
        return c is not None and f in self.held[c]

    def holder_set(self, f):
        return {self.root} | self.holders[f]

    def size(self, f):
        return self.files[f].size

    def place_replica(self, f, node, tick=None):
        c = self.cluster_of(node)
        if c is None:
            raise CatalogError(f"node {node} is not in any cluster")
        if c == self.root or f in self.held[c]:
            return PlaceResult.DUPLICATE
        size = self.files[f].size
        if self.free_space[c] < size:
            raise InsufficientSpace(f"cluster {c}: free {self.free_space[c]} < size {size}")
        self.held[c].add(f)
        self.holders[f].add(c)
        self.free_space[c] -= size
        if tick is not None:
            self.last_used[(c, f)] = tick
        return PlaceResult.PLACED

    def remove_replica(self, f, node):
        c = self.cluster_of(node)
        if c == self.root:
            raise CatalogError("master copies at the root cannot be removed")
        if c is None or f not in self.held[c]:
            raise CatalogError(f"node {node} does not hold file {f}")
        self.held[c].discard(f)
        self.holders[f].discard(c)
        self.free_space[c] += self.files[f].size
        self.last_used.pop((c, f), None)

    def touch(self, node, f, tick):
        c = self.cluster_of(node)
        if c is not None and c != self.root and f in self.held[c]:
            self.last_used[(c, f)] = tick

    def used_fraction(self, header=None):
        if header is not None:
            cap = self.capacity[header]
            return 0.0 if cap in (0, float("inf")) else 1.0 - self.free_space[header] / cap
        cap = sum(self.capacity.values())
        if cap in (0, float("inf")):
            return 0.0
        return 1.0 - sum(self.free_space.values()) / cap

    def replica_count(self):
        return sum(len(s) for s in self.held.values())

    def copy(self):
        new = copy.copy(self)
        new.free_space = dict(self.free_space)
        new.holders = {f: set(s) for f, s in self.holders.items()}
        new.held = {h: set(s) for h, s in self.held.items()}
        new.last_used = dict(self.last_used)
        return new

    def signature(self):
        """Comparable view of the mutable state (LRU ticks excluded)."""
        return ({h: frozenset(s) for h, s in self.held.items()},
                dict(self.free_space))

    def to_dict(self):
        return {
            "root": self.root,
            "holders": {str(f): sorted(self.holder_set(f)) for f in sorted(self.files)},
            "free_space": {str(h): self.free_space[h] for h in self.headers},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def check_invariants(self):
        """Raise AssertionError if a catalog invariant is broken."""
        for h in self.headers:
            held_size = sum(self.files[f].size for f in self.held[h])
            assert self.free_space[h] >= 0, f"negative free space at {h}"
            if self.capacity[h] != float("inf"):
                assert abs(self.free_space[h] + held_size - self.capacity[h]) < 1e-9, \
                    f"storage not conserved at {h}"
        for f, hs in self.holders.items():
            assert self.root not in hs
            # one replica per cluster: holders are header ids, each at most once
            assert hs <= set(self.headers)
            for h in hs:
                assert f in self.held[h]
        for h, fs in self.held.items():
            for f in fs:
                assert h in self.holders[f]


class GridState:
    """Everything a strategy reads or mutates during a run."""

    def __init__(self, tree: GridTree, clusters, files, dep: DependencyMatrix,
                 fuzzy: FuzzySystemConfig | None = None):
        self.tree = tree
        self.clusters = list(clusters)
        self.files = sorted(files, key=lambda f: f.id)
        if [f.id for f in self.files] != list(range(1, len(self.files) + 1)):
            raise ConfigError("file ids must be 1..n")
        if dep.n != len(self.files):
            raise ConfigError("dependency matrix size does not match file count")
        self.dep = dep
        self.fuzzy = (fuzzy or FuzzySystemConfig()).validate()
        self.catalog = ReplicaCatalog(tree, self.clusters, self.files)
        self.headers = self.catalog.headers
        self.usage = UsageStats(self.headers, len(self.files))
        self.ri = None
        self._paths = {}

    def node_path(self, node):
        """Cached path_to_root for ``node``."""
        p = self._paths.get(node)
        if p is None:
            p = self._paths[node] = path_to_root(self.tree, node)
        return p

    def header_path(self, node):
        """Distinct cluster headers met walking from ``node`` toward the root."""
        out = []
        for n in self.node_path(node):
            c = self.catalog.cluster_of(n)
            if c is not None and c not in out:
                out.append(c)
        return out

    def copy(self):
        new = copy.copy(self)
        new.catalog = self.catalog.copy()
        new.usage = copy.deepcopy(self.usage)
        return new


def normalised_inputs(state: GridState):
    """Level, file size, usage and free space scaled to [0, 1] for the RI system."""
    tree, cat = state.tree, state.catalog
    max_tier = max(tree.tier_count - 1, 1)
    level = np.array([tree.tier(h) for h in state.headers], dtype=float) / max_tier
    sizes = np.array([f.size for f in state.files], dtype=float)
    fsize = sizes / sizes.max()
    caps = np.array([cat.capacity[h] for h in state.headers], dtype=float)
    free = np.array([cat.free_space[h] for h in state.headers], dtype=float)
    finite = np.isfinite(caps)
    largest = caps[finite].max() if finite.any() else 1.0
    nsize = np.where(np.isfinite(free), free / (largest or 1.0), 1.0)
    usage = state.usage.ratio / state.fuzzy.usage_cap
    return level[:, None], fsize[None, :], usage, nsize[:, None]


def recompute_ri(state: GridState):
    level, fsize, usage, nsize = normalised_inputs(state)
    values = infer_ri(level, fsize, usage, nsize, state.fuzzy)
    values = np.broadcast_to(values, (len(state.headers), len(state.files)))
    return RIMatrix(state.headers, values)
