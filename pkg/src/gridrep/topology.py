"""Multi-tier grid tree, distance-threshold clustering and header election."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .fuzzy import ConfigError


@dataclass(frozen=True)
class GridNode:
    id: int
    tier: int
    parent: Optional[int]
    capacity: float
    coord: tuple = (0.0, 0.0)


class GridTree:
    """Rooted tree of grid sites. Node ids are assigned breadth-first."""

    def __init__(self, nodes: Iterable[GridNode]):
        self.nodes = {n.id: n for n in nodes}
        roots = [n for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1:
            raise ConfigError(f"tree needs exactly one root, found {len(roots)}")
        self.root = roots[0].id
        if roots[0].tier != 0:
            raise ConfigError("root must sit on tier 0")
        self.children = {i: [] for i in self.nodes}
        for n in self.nodes.values():
            if n.parent is None:
                continue
            if n.parent not in self.nodes:
                raise ConfigError(f"node {n.id}: unknown parent {n.parent}")
            if self.nodes[n.parent].tier != n.tier - 1:
                raise ConfigError(f"node {n.id}: tier does not follow its parent")
            if n.capacity > self.nodes[n.parent].capacity:
                raise ConfigError(f"node {n.id}: capacity exceeds its parent's")
            self.children[n.parent].append(n.id)
        for kids in self.children.values():
            kids.sort()
        self.tier_count = max(n.tier for n in self.nodes.values()) + 1

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node_id):
        return node_id in self.nodes

    def tier(self, node_id):
        return self.nodes[node_id].tier

    def parent(self, node_id):
        return self.nodes[node_id].parent

    def ids(self):
        return sorted(self.nodes)

    def coords(self, ids=None):
        ids = self.ids() if ids is None else list(ids)
        return np.array([self.nodes[i].coord for i in ids], dtype=float).reshape(len(ids), -1)

    def dump_edges(self):
        """Flat text dump: one ``child parent tier capacity x y`` line per node."""
        lines = ["# child parent tier capacity x y"]
        for i in self.ids():
            n = self.nodes[i]
            parent = "-" if n.parent is None else str(n.parent)
            xy = " ".join(f"{c:.6g}" for c in n.coord)
            lines.append(f"{n.id} {parent} {n.tier} {n.capacity:g} {xy}")
        return "\n".join(lines) + "\n"


def _tier_capacity(capacities, tier):
    # the root is the master store and holds everything
    if capacities is None or tier == 0:
        return float("inf")
    if tier < len(capacities):
        return float(capacities[tier])
    return float(capacities[-1])


def build_tree(fanouts=None, edges=None, capacities=None, coords=None, seed=0):
    """Build a GridTree from per-tier fanouts or an explicit ``{child: parent}`` map.

    ``capacities`` is indexed by tier (the last value repeats for deeper
    tiers; the tier-0 entry is ignored because the root is unbounded). When ``coords`` is not given, nodes get a seeded nested 2-D layout
    (see ``nested_layout``).
    """
    if fanouts is not None and edges is not None:
        raise ConfigError("give either fanouts or edges, not both")
    if edges is None:
        parent = {0: None}
        frontier = [0]
        next_id = 1
        for fan in fanouts or []:
            if fan < 1:
                raise ConfigError("fanouts must be >= 1")
            new = []
            for p in frontier:
                for _ in range(fan):
                    parent[next_id] = p
                    new.append(next_id)
                    next_id += 1
            frontier = new
    else:
        parent = _parents_from_edges(edges)

    tiers = _tiers(parent)
    if coords is None:
        coords = nested_layout(parent, tiers, seed)
    nodes = [GridNode(i, tiers[i], parent[i], _tier_capacity(capacities, tiers[i]),
                      tuple(float(c) for c in coords[i]))
             for i in sorted(parent)]
    return GridTree(nodes)


def _parents_from_edges(edges):
    if isinstance(edges, dict):
        pairs = list(edges.items())
    else:
        pairs = [tuple(e) for e in edges]
    parent = {}
    for child, par in pairs:
        child, par = int(child), int(par)
        if child in parent:
            raise ConfigError(f"node {child} has two parents")
        parent[child] = par
    roots = {p for p in parent.values() if p not in parent}
    if len(roots) != 1:
        raise ConfigError("edge list must have exactly one root")
    parent[roots.pop()] = None
    return parent


def _tiers(parent):
    tiers = {}
    for start in parent:
        chain = []
        node = start
        while node is not None and node not in tiers:
            if node in chain:
                raise ConfigError("edge list contains a cycle")
            chain.append(node)
            node = parent[node]
        base = -1 if node is None else tiers[node]
        for depth, n in enumerate(reversed(chain), start=1):
            tiers[n] = base + depth
    return tiers


def nested_layout(parent, tiers, seed=0, step=100.0, shrink=0.4, jitter=0.1):
    """Children ring their parent at a distance shrinking geometrically by tier.

    Subtrees therefore occupy nested neighbourhoods, which is what makes
    distance-threshold clusters follow the hierarchy.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x70b0]))
    children = {i: [] for i in parent}
    for c, p in parent.items():
        if p is not None:
            children[p].append(c)
    root = next(i for i, p in parent.items() if p is None)
    coords = {root: (0.0, 0.0)}
    heading = {root: 0.0}
    queue = [root]
    while queue:
        n = queue.pop(0)
        kids = sorted(children[n])
        for k, c in enumerate(kids):
            theta = heading[n] + 2 * np.pi * k / len(kids) + rng.normal(0.0, jitter)
            r = step * shrink ** (tiers[c] - 1) * (1.0 + rng.normal(0.0, jitter))
            x, y = coords[n]
            coords[c] = (x + r * np.cos(theta), y + r * np.sin(theta))
            heading[c] = theta
            queue.append(c)
    return coords


def path_to_root(tree: GridTree, node_id):
    """Node ids from ``node_id`` upward, root excluded."""
    if node_id not in tree:
        raise KeyError(f"unknown node {node_id}")
    path = []
    node = node_id
    while tree.parent(node) is not None:
        path.append(node)
        node = tree.parent(node)
    return path


@dataclass(frozen=True)
class Cluster:
    id: int
    member_ids: frozenset
    header_id: int


def elect_header(capacities):
    """Member with the largest capacity, lowest id on ties."""
    if not capacities:
        raise ValueError("cannot elect a header for an empty cluster")
    return min(capacities, key=lambda i: (-capacities[i], i))


def cluster_nodes(tree: GridTree, alpha, tiers=None):
    """Greedy single-pass clustering by Euclidean distance threshold ``alpha``.

    Nodes are visited in ascending id; each unassigned node seeds a cluster
    and absorbs every unassigned node strictly closer than ``alpha``.
    ``tiers`` defaults to every tier below the root.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    ids = _clustered_ids(tree, tiers)
    groups = _greedy_groups(_distances(tree.coords(ids)), alpha)
    return _make_clusters(tree, [[ids[i] for i in g] for g in groups])


def clusters_from_members(tree: GridTree, groups):
    """Clusters from an explicit list of member-id groups."""
    seen = set()
    for g in groups:
        for i in g:
            if i not in tree:
                raise ConfigError(f"cluster member {i} is not in the tree")
            if i in seen:
                raise ConfigError(f"node {i} appears in two clusters")
            if i == tree.root:
                raise ConfigError("the root cannot be a cluster member")
            seen.add(i)
    return _make_clusters(tree, [sorted(g) for g in groups])


def _clustered_ids(tree, tiers):
    if tiers is None:
        return [i for i in tree.ids() if tree.tier(i) >= 1]
    tiers = set(tiers)
    return [i for i in tree.ids() if tree.tier(i) in tiers]


def _distances(xy):
    return np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)


def _greedy_groups(dist, alpha):
    n = len(dist)
    if n == 0:
        return []
    free = np.ones(n, dtype=bool)
    groups = []
    for seed in range(n):
        if not free[seed]:
            continue
        members = np.flatnonzero(free & (dist[seed] < alpha))
        members = np.union1d(members, [seed])
        free[members] = False
        groups.append(members.tolist())
    return groups


def _make_clusters(tree, groups):
    out = []
    for cid, members in enumerate(groups):
        caps = {i: tree.nodes[i].capacity for i in members}
        out.append(Cluster(cid, frozenset(members), elect_header(caps)))
    return out


def tune_alpha(tree: GridTree, target, tiers=None):
    """A threshold whose greedy clustering yields exactly ``target`` clusters.

    Bisects over the distinct pairwise distances first; the cluster count is
    not strictly monotone in alpha under greedy seeding, so a miss falls back
    to a full ascending scan.
    """
    ids = _clustered_ids(tree, tiers)
    if not 1 <= target <= len(ids):
        raise ConfigError(f"cannot form {target} clusters from {len(ids)} nodes")
    dist = _distances(tree.coords(ids))
    levels = np.unique(dist[np.triu_indices(len(ids), 1)])
    # alpha just above each distinct distance (membership uses strict <)
    first = levels[0] / 2 if len(levels) else 1.0
    candidates = np.concatenate([[first], np.nextafter(levels, np.inf)])

    def count(k):
        return len(_greedy_groups(dist, candidates[k]))

    lo, hi = 0, len(candidates) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        c = count(mid)
        if c == target:
            return float(candidates[mid])
        if c > target:
            lo = mid + 1
        else:
            hi = mid - 1
    for k in range(len(candidates)):
        if count(k) == target:
            return float(candidates[k])
    raise ConfigError(f"no alpha yields exactly {target} clusters")
