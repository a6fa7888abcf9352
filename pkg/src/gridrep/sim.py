"""Interval loop, metrics and run artefacts.

The headline metric is ``avg_replica_usage``: cumulative requests served by a
non-root replica divided by cumulative replica placements (root master copies
excluded from both). A replica evicted and placed again counts twice.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

from .config import SimConfig, build_state
from .pfr import EVICTED, PLACED, ReplicationAction, apply_action
from .strategies import make_strategy, serve_request
from .workload import Request, WorkloadGenerator

CSV_COLUMNS = ("strategy", "interval", "replicas_created", "replica_hits",
               "avg_replica_usage", "mean_hops", "evictions", "storage_used_fraction")


@dataclass
class MetricsReport:
    strategy: str
    rows: list = field(default_factory=list)
    replicas_created: int = 0
    replica_hits: int = 0
    requests: int = 0
    total_hops: int = 0
    evictions: int = 0

    @property
    def avg_replica_usage(self):
        return self.replica_hits / max(1, self.replicas_created)

    @property
    def mean_hops(self):
        return self.total_hops / self.requests if self.requests else 0.0

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "cumulative": {
                "replicas_created": self.replicas_created,
                "replica_hits": self.replica_hits,
                "requests": self.requests,
                "total_hops": self.total_hops,
                "mean_hops": self.mean_hops,
                "evictions": self.evictions,
                "avg_replica_usage": self.avg_replica_usage,
            },
            "intervals": self.rows,
        }


@dataclass
class SimResult:
    report: MetricsReport
    actions: list  # dicts: interval, request index (or None), action fields
    requests: list
    final_state: object = None


class InvariantViolation(AssertionError):
    pass


def generate_requests(cfg: SimConfig, state=None):
    """Full request stream for ``cfg``; independent of the strategy."""
    if state is None:
        state, _ = build_state(cfg)
    coords = {h: state.tree.nodes[h].coord for h in state.headers}
    gen = WorkloadGenerator(cfg.workload, state.headers, coords, state.dep,
                            seed=cfg.seed, dependency_threshold=cfg.pfr.dependency_threshold)
    return [gen.generate_interval(t) for t in range(cfg.intervals)]


def _by_interval(requests, intervals):
    out = [[] for _ in range(intervals)]
    for r in requests:
        if 0 <= r.interval < intervals:
            out[r.interval].append(r)
    return out


def check_state(state):
    try:
        state.catalog.check_invariants()
    except AssertionError as exc:
        raise InvariantViolation(str(exc)) from exc
    for h in state.headers:
        frac = state.catalog.used_fraction(h)
        if not -1e-12 <= frac <= 1 + 1e-12:
            raise InvariantViolation(f"storage fraction {frac} out of range at {h}")


def _close_interval(report, t, n_requests, hits, hops_sum, placed, evicted, catalog):
    report.replicas_created += placed
    report.replica_hits += hits
    report.requests += n_requests
    report.total_hops += hops_sum
    report.evictions += evicted
    report.rows.append({
        "interval": t,
        "replicas_created": placed,
        "replica_hits": hits,
        "avg_replica_usage": report.avg_replica_usage,
        "mean_hops": hops_sum / n_requests if n_requests else 0.0,
        "evictions": evicted,
        "storage_used_fraction": catalog.used_fraction(),
        "requests": n_requests,
        "total_hops": hops_sum,
        "cumulative_replicas_created": report.replicas_created,
        "cumulative_replica_hits": report.replica_hits,
        "replica_count": catalog.replica_count(),
    })


def run_simulation(cfg: SimConfig, requests=None, strategy=None, check_invariants=False):
    """Run one strategy over ``cfg.intervals`` intervals.

    ``requests`` (a flat list of Request) replays a recorded stream; by
    default the stream is generated from the config seed. With
    ``check_invariants`` the catalog invariants and the action-log replay are
    verified after every interval.
    """
    cfg.validate()
    kind = strategy or cfg.strategy
    state, injected = build_state(cfg)
    if requests is None:
        per_interval = generate_requests(cfg, state)
    else:
        per_interval = _by_interval(requests, cfg.intervals)
    strat = make_strategy(kind, cfg.pfr, cfg.thresholds, injected)
    report = MetricsReport(kind)
    log = []
    tick = 0
    root = state.catalog.root

    for t in range(cfg.intervals):
        before = state.catalog.copy() if check_invariants else None
        interval_actions = []
        hits = hops_sum = 0
        reqs = per_interval[t]
        for i, req in enumerate(reqs):
            tick += 1
            hops, holder = serve_request(state, req.requester, req.file)
            hops_sum += hops
            if holder != root:
                hits += 1
                state.catalog.touch(holder, req.file, tick)
            state.usage.record(req.requester, req.file)
            for a in strat.on_request(state, req, holder, tick):
                interval_actions.append((i, a))
        for a in strat.on_interval_end(state, t, tick):
            interval_actions.append((None, a))

        placed = sum(a.kind == PLACED for _, a in interval_actions)
        evicted = sum(a.kind == EVICTED for _, a in interval_actions)
        _close_interval(report, t, len(reqs), hits, hops_sum, placed, evicted, state.catalog)
        for i, a in interval_actions:
            log.append({"interval": t, "request": i, **a.to_dict()})

        if check_invariants:
            check_state(state)
            for _, a in interval_actions:
                apply_action(before, a)
            if before.signature() != state.catalog.signature():
                raise InvariantViolation(f"action log does not replay interval {t}")

    flat = [r for reqs in per_interval for r in reqs]
    return SimResult(report, log, flat, state)


def compare_strategies(cfg: SimConfig, strategies, check_invariants=False):
    """Run every strategy on one shared, pre-generated request stream."""
    requests = [r for reqs in generate_requests(cfg) for r in reqs]
    results = {}
    for kind in strategies:
        if kind not in results:
            results[kind] = run_simulation(cfg, requests=requests, strategy=kind,
                                           check_invariants=check_invariants)
    return [(kind, results[kind]) for kind in strategies], requests


def replay_metrics(cfg: SimConfig, requests, actions, strategy):
    """Recompute a MetricsReport from saved request and action logs alone."""
    state, _ = build_state(cfg)
    per_interval = _by_interval(requests, cfg.intervals)
    by_key = {}
    for rec in actions:
        by_key.setdefault((rec["interval"], rec["request"]), []).append(
            ReplicationAction(rec["kind"], rec["file"], rec["node"], rec["trigger"], rec["parent"]))
    report = MetricsReport(strategy)
    root = state.catalog.root
    for t in range(cfg.intervals):
        reqs = per_interval[t]
        hits = hops_sum = placed = evicted = 0
        for i, req in enumerate(reqs):
            hops, holder = serve_request(state, req.requester, req.file)
            hops_sum += hops
            hits += holder != root
            for a in by_key.get((t, i), []):
                apply_action(state.catalog, a)
                placed += a.kind == PLACED
                evicted += a.kind == EVICTED
        for a in by_key.get((t, None), []):
            apply_action(state.catalog, a)
            placed += a.kind == PLACED
            evicted += a.kind == EVICTED
        _close_interval(report, t, len(reqs), hits, hops_sum, placed, evicted, state.catalog)
    return report


def metrics_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for row in rep.rows:
            w.writerow([rep.strategy] + [_fmt(row[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_outputs(out_dir, results, requests):
    """Write metrics.csv, report.json, actions.jsonl and requests.jsonl."""
    os.makedirs(out_dir, exist_ok=True)
    reports = [res.report for _, res in results]
    with open(os.path.join(out_dir, "metrics.csv"), "w") as fh:
        fh.write(metrics_csv(reports))
    payload = reports[0].to_dict() if len(reports) == 1 else {
        "strategies": [r.to_dict() for r in reports]}
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "actions.jsonl"), "w") as fh:
        for kind, res in results:
            for rec in res.actions:
                fh.write(json.dumps({"strategy": kind, **rec}, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "requests.jsonl"), "w") as fh:
        for r in requests:
            fh.write(r.to_json() + "\n")


GOLDEN_ACTIONS = (
    ReplicationAction(PLACED, 3, 2, "primary"),
    ReplicationAction(PLACED, 3, 6, "primary"),
    ReplicationAction(PLACED, 1, 2, "dependent", 3),
    ReplicationAction(PLACED, 1, 6, "dependent", 3),
    ReplicationAction(PLACED, 2, 2, "dependent", 3),
)


def run_golden():
    """Worked-example check. Returns (passed, actions, message)."""
    from .config import worked_example_config

    cfg = worked_example_config()
    result = run_simulation(cfg, check_invariants=True)
    got = tuple(ReplicationAction(r["kind"], r["file"], r["node"], r["trigger"], r["parent"])
                for r in result.actions)
    ok = got == GOLDEN_ACTIONS and result.report.evictions == 0
    msg = "golden worked example: " + ("PASS" if ok else f"FAIL, got {got}")
    return ok, got, msg
