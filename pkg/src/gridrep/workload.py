"""Seeded request streams mixing temporal, geographical and spatial locality.

Every request is drawn from one of four branches:

* temporal: replay a recent (requester, file) pair, newer pairs weighted higher;
* geographical: take a recent pair and hand its file to a nearby cluster;
* spatial: take a recent pair and request a file strongly dependent on it;
* background: uniform requester, Zipf-ranked file.

Branches that need history fall through to the background draw while the
history window is empty. Randomness comes from numpy's PCG64 seeded with
``SeedSequence([seed, interval])``, so each interval is reproducible on its own
given the history carried into it.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .fuzzy import ConfigError
from .state import DependencyMatrix, dependent_files


@dataclass(frozen=True)
class WorkloadParams:
    requests_per_interval: int = 200
    temporal_weight: float = 0.3
    geo_weight: float = 0.2
    spatial_weight: float = 0.2
    zipf_exponent: float = 0.8
    history_window: int = 100
    geo_neighbors: int = 2
    rng_seed: int | None = None  # None: use the simulation seed

    def validate(self):
        ws = (self.temporal_weight, self.geo_weight, self.spatial_weight)
        if any(not 0.0 <= w <= 1.0 for w in ws):
            raise ConfigError("workload weights must lie in [0, 1]")
        if sum(ws) > 1.0 + 1e-12:
            raise ConfigError("workload weights must sum to at most 1")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be positive")
        if self.requests_per_interval < 0 or self.history_window < 1:
            raise ConfigError("bad request count or history window")
        if self.geo_neighbors < 1:
            raise ConfigError("geo_neighbors must be >= 1")
        return self


@dataclass(frozen=True)
class Request:
    interval: int
    requester: int
    file: int

    def to_json(self):
        return json.dumps({"interval": self.interval, "requester": self.requester,
                           "file": self.file})


def interval_rng(seed, interval):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(interval)])))


def zipf_pmf(n, exponent):
    ranks = np.arange(1, n + 1, dtype=float)
    w = ranks ** -exponent
    return w / w.sum()


def neighbor_clusters(coords, header):
    """Other headers ordered by Euclidean distance to ``header`` (ids break ties).

    ``coords`` maps header id to a coordinate tuple.
    """
    here = np.asarray(coords[header], dtype=float)
    others = [h for h in coords if h != header]
    return sorted(others, key=lambda h: (float(np.linalg.norm(np.asarray(coords[h]) - here)), h))


class WorkloadGenerator:
    def __init__(self, params: WorkloadParams, headers, header_coords,
                 dep: DependencyMatrix, seed=0, dependency_threshold=0.5):
        self.params = params.validate()
        self.headers = list(headers)
        if not self.headers:
            raise ConfigError("workload needs at least one requester")
        self.n_files = dep.n
        self.seed = params.rng_seed if params.rng_seed is not None else seed
        self.pmf = zipf_pmf(self.n_files, params.zipf_exponent)
        self.neighbors = {h: neighbor_clusters(header_coords, h)[:params.geo_neighbors]
                          for h in self.headers}
        self.related = {f: dependent_files(dep, f, dependency_threshold)
                        for f in range(1, self.n_files + 1)}
        self.history = deque(maxlen=params.history_window)

    def _recent(self, rng):
        k = len(self.history)
        w = np.arange(1, k + 1, dtype=float)
        return self.history[int(rng.choice(k, p=w / w.sum()))]

    def _background(self, rng):
        h = self.headers[int(rng.integers(len(self.headers)))]
        f = int(rng.choice(self.n_files, p=self.pmf)) + 1
        return h, f

    def draw(self, rng):
        p = self.params
        u = rng.random()
        pair = None
        if self.history:
            if u < p.temporal_weight:
                pair = self._recent(rng)
            elif u < p.temporal_weight + p.geo_weight:
                h, f = self._recent(rng)
                near = self.neighbors[h]
                if near:
                    pair = (near[int(rng.integers(len(near)))], f)
            elif u < p.temporal_weight + p.geo_weight + p.spatial_weight:
                h, f = self._recent(rng)
                rel = self.related[f]
                if rel:
                    pair = (h, rel[int(rng.integers(len(rel)))])
        if pair is None:
            pair = self._background(rng)
        self.history.append(pair)
        return pair

    def generate_interval(self, interval):
        rng = interval_rng(self.seed, interval)
        return [Request(interval, h, f)
                for h, f in (self.draw(rng) for _ in range(self.params.requests_per_interval))]


def dump_requests(requests, path):
    with open(path, "w") as fh:
        for r in requests:
            fh.write(r.to_json() + "\n")


def load_requests(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                d = json.loads(line)
                out.append(Request(int(d["interval"]), int(d["requester"]), int(d["file"])))
    return out
