"""Simulator configuration: dataclasses, YAML loading and built-in scenarios.

A config file is a single YAML mapping; every key is optional. Top-level
sections are ``scenario``, ``fuzzy``, ``pfr``, ``thresholds`` and
``workload`` plus the scalars ``strategy``, ``intervals`` and ``seed``.
See README.md for the full schema.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .fuzzy import ConfigError, FuzzySystemConfig, FuzzyVariableSpec, TriangularMF
from .pfr import PfrParams
from .state import DependencyMatrix, FileMeta, GridState, RIMatrix
from .strategies import STRATEGY_KINDS, ThresholdParams
from .topology import build_tree, cluster_nodes, clusters_from_members, tune_alpha
from .workload import WorkloadParams

PAPER_S4 = "paper-s4"
WORKED_EXAMPLE = "worked-example"

# Worked example: six cluster headers (nodes 1..6), five files.
EXAMPLE_EDGES = {1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2}
EXAMPLE_RI = [
    [3.91, 3.96, 2.70, 4.71, 4.16],
    [3.20, 3.40, 2.78, 4.10, 5.00],
    [3.80, 3.90, 2.60, 4.60, 4.12],
    [3.60, 3.70, 2.40, 4.40, 3.90],
    [3.91, 3.96, 2.70, 4.70, 4.16],
    [4.90, 3.20, 5.10, 3.30, 4.30],
]
EXAMPLE_DEPENDENCY = [
    [1, 0.8, 0.2, 0.3, 0.8],
    [0, 1, 0.9, 0, 0],
    [0.7, 0.7, 1, 0.4, 0.4],
    [0.5, 0, 0.2, 1, 0.2],
    [0.4, 0.6, 0.3, 0.6, 1],
]


@dataclass
class ScenarioConfig:
    name: str = PAPER_S4
    fanouts: Optional[list] = field(default_factory=lambda: [3, 2, 3, 4])
    edges: Optional[dict] = None
    # per-tier node capacity; index 0 is ignored (the root master store is unbounded)
    capacities: list = field(default_factory=lambda: [0, 40, 20, 10, 5])
    file_count: int = 30
    file_sizes: Optional[list] = None
    file_size_range: list = field(default_factory=lambda: [1, 10])
    dependency: Optional[list] = None
    # generated dependency matrix: chance that a file gets a strong dependent
    strong_dependency_prob: float = 0.5
    alpha: Optional[float] = None
    target_clusters: int = 14
    cluster_tiers: Optional[list] = None
    clusters: Optional[list] = None
    injected_ri: Optional[list] = None
    injected_usage: Optional[dict] = None


@dataclass
class SimConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    fuzzy: FuzzySystemConfig = field(default_factory=FuzzySystemConfig)
    pfr: PfrParams = field(default_factory=PfrParams)
    thresholds: ThresholdParams = field(default_factory=ThresholdParams)
    workload: WorkloadParams = field(default_factory=WorkloadParams)
    strategy: str = "pfr"
    intervals: int = 50
    seed: int = 0

    def validate(self):
        if self.strategy not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.intervals < 1:
            raise ConfigError("intervals must be >= 1")
        self.fuzzy.validate()
        self.pfr.validate()
        self.thresholds.validate()
        self.workload.validate()
        return self

    def with_(self, **kw):
        return dataclasses.replace(self, **kw)


def worked_example_config(**overrides):
    """Scenario reproducing the worked example: injected RI, ample space."""
    scenario = ScenarioConfig(
        name=WORKED_EXAMPLE, fanouts=None, edges=dict(EXAMPLE_EDGES),
        capacities=[0, 100], file_count=5, file_sizes=[1] * 5,
        dependency=[row[:] for row in EXAMPLE_DEPENDENCY],
        clusters=[[i] for i in range(1, 7)],
        injected_ri=[row[:] for row in EXAMPLE_RI],
        injected_usage={"6,3": 2.0},
    )
    cfg = SimConfig(scenario=scenario, strategy="pfr", intervals=1,
                    workload=WorkloadParams(requests_per_interval=0))
    return cfg.with_(**overrides)


BUILTINS = {
    PAPER_S4: lambda: SimConfig(),
    WORKED_EXAMPLE: worked_example_config,
}


def _build(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return cls(**data)


def _mf(data, path):
    if isinstance(data, TriangularMF):
        return data
    if not isinstance(data, (list, tuple)) or len(data) != 3:
        raise ConfigError(f"{path}: membership function must be [left, peak, right]")
    return TriangularMF(*(float(v) for v in data))


def _variable(data, path):
    if data is None:
        return FuzzyVariableSpec()
    data = dict(data)
    for key in ("low", "high"):
        if key in data:
            data[key] = _mf(data[key], f"{path}.{key}")
    return _build(FuzzyVariableSpec, data, path)


def _fuzzy(data):
    if data is None:
        return FuzzySystemConfig()
    data = dict(data)
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    for var in ("level", "file_size", "usage_ratio", "node_size"):
        if var in data:
            data[var] = _variable(data[var], f"fuzzy.{var}")
    return _build(FuzzySystemConfig, data, "fuzzy")


def config_from_dict(data) -> SimConfig:
    data = dict(data or {})
    scen = dict(data.pop("scenario", None) or {})
    builtin = scen.pop("builtin", None)
    if builtin and builtin not in BUILTINS:
        raise ConfigError(f"unknown builtin scenario {builtin!r}")
    base = BUILTINS[builtin]() if builtin else SimConfig()
    scenario = dataclasses.replace(base.scenario, **_checked(scen, ScenarioConfig, "scenario"))
    sections = {
        "fuzzy": _fuzzy(data.pop("fuzzy")) if "fuzzy" in data else base.fuzzy,
        "pfr": _build(PfrParams, data.pop("pfr"), "pfr") if "pfr" in data else base.pfr,
        "thresholds": (_build(ThresholdParams, data.pop("thresholds"), "thresholds")
                       if "thresholds" in data else base.thresholds),
        "workload": (_build(WorkloadParams, data.pop("workload"), "workload")
                     if "workload" in data else base.workload),
    }
    top = _checked(data, SimConfig, "config")
    return dataclasses.replace(base, scenario=scenario, **sections, **top).validate()


def _checked(data, cls, path):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data


def load_config(path) -> SimConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return config_from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _rng(seed, tag):
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def generate_dependency(n, seed, strong_prob=0.5):
    """Random dependency matrix: unit diagonal, mostly weak links, and for
    roughly ``strong_prob`` of the files one partner above 0.5."""
    rng = _rng(seed, 0xDE9)
    m = rng.uniform(0.0, 0.45, size=(n, n)) * (rng.random((n, n)) < 0.3)
    for f in range(n):
        if n > 1 and rng.random() < strong_prob:
            g = int(rng.integers(n - 1))
            g = g + 1 if g >= f else g
            m[f, g] = rng.uniform(0.55, 0.95)
    np.fill_diagonal(m, 1.0)
    return m


def build_state(cfg: SimConfig):
    """Instantiate tree, clusters, files and dependencies for ``cfg``.

    Returns ``(state, injected_ri)``; the latter is None unless the scenario
    injects an RI matrix for the first interval.
    """
    sc = cfg.scenario
    seed = cfg.seed
    tree = build_tree(fanouts=sc.fanouts if sc.edges is None else None,
                      edges=sc.edges, capacities=sc.capacities, seed=seed)
    if sc.clusters is not None:
        clusters = clusters_from_members(tree, sc.clusters)
    else:
        alpha = sc.alpha if sc.alpha is not None else tune_alpha(tree, sc.target_clusters, sc.cluster_tiers)
        clusters = cluster_nodes(tree, alpha, sc.cluster_tiers)

    if sc.file_sizes is not None:
        sizes = [float(s) for s in sc.file_sizes]
        if len(sizes) != sc.file_count:
            raise ConfigError("file_sizes length must equal file_count")
    else:
        lo, hi = sc.file_size_range
        sizes = _rng(seed, 0xF11E).integers(int(lo), int(hi) + 1, size=sc.file_count).astype(float).tolist()
    files = [FileMeta(i + 1, s) for i, s in enumerate(sizes)]

    if sc.dependency is not None:
        dep = DependencyMatrix(sc.dependency)
    else:
        dep = DependencyMatrix(generate_dependency(sc.file_count, seed, sc.strong_dependency_prob))

    state = GridState(tree, clusters, files, dep, cfg.fuzzy)
    injected = None
    if sc.injected_ri is not None or sc.injected_usage:
        usage = {tuple(int(v) for v in str(k).split(",")): float(v)
                 for k, v in (sc.injected_usage or {}).items()}
        injected = inject_example_state(state, sc.injected_ri, usage=usage)
    return state, injected


def inject_example_state(state: GridState, ri=None, dependency=None, usage=None):
    """Load fixed matrices into ``state`` so the next PFR decision uses them.

    ``ri`` must be headers x files, ``dependency`` files x files; ``usage``
    maps (header, file) to a usage ratio. Returns the RIMatrix (or None).
    """
    n_h, n_f = len(state.headers), len(state.files)
    injected = None
    if ri is not None:
        arr = np.asarray(ri, dtype=float)
        if arr.shape != (n_h, n_f):
            raise ConfigError(f"injected RI matrix is {arr.shape}, expected {(n_h, n_f)}")
        injected = RIMatrix(state.headers, arr)
    if dependency is not None:
        dep = DependencyMatrix(dependency)
        if dep.n != n_f:
            raise ConfigError("injected dependency matrix does not match the file count")
        state.dep = dep
    for (h, f), value in (usage or {}).items():
        if h not in state.usage.row or not 1 <= f <= n_f:
            raise ConfigError(f"usage entry ({h}, {f}) is outside the scenario")
        state.usage.set_ratio(h, f, value)
    return injected


def config_to_dict(cfg: SimConfig):
    d = dataclasses.asdict(cfg)
    d["fuzzy"]["lambda"] = d["fuzzy"].pop("lam")
    for var in ("level", "file_size", "usage_ratio", "node_size"):
        for key in ("low", "high"):
            mf = d["fuzzy"][var][key]
            d["fuzzy"][var][key] = [mf["left"], mf["peak"], mf["right"]]
    return d
