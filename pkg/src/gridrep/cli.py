"""``gridrep`` command line: run, compare, golden.

Exit codes: 0 success, 1 configuration error, 2 golden-test failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import SimConfig, load_config
from .fuzzy import ConfigError
from .sim import compare_strategies, run_golden, run_simulation, write_outputs
from .strategies import STRATEGY_KINDS


def _load(args):
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "intervals", None) is not None:
        overrides["intervals"] = args.intervals
    if getattr(args, "strategy", None) is not None:
        overrides["strategy"] = args.strategy
    return cfg.with_(**overrides).validate()


def cmd_run(args):
    cfg = _load(args)
    result = run_simulation(cfg)
    write_outputs(args.out, [(cfg.strategy, result)], result.requests)
    with open(os.path.join(args.out, "topology.txt"), "w") as fh:
        fh.write(result.final_state.tree.dump_edges())
    with open(os.path.join(args.out, "catalog.json"), "w") as fh:
        fh.write(result.final_state.catalog.to_json() + "\n")
    rep = result.report
    print(f"{cfg.strategy}: replicas_created={rep.replicas_created} "
          f"replica_hits={rep.replica_hits} avg_replica_usage={rep.avg_replica_usage:.4f} "
          f"mean_hops={rep.mean_hops:.4f}")
    return 0


def cmd_compare(args):
    cfg = _load(args)
    kinds = [k.strip() for k in args.strategies.split(",") if k.strip()]
    bad = [k for k in kinds if k not in STRATEGY_KINDS]
    if bad or not kinds:
        raise ConfigError(f"unknown strategies {bad}; choose from {', '.join(STRATEGY_KINDS)}")
    results, requests = compare_strategies(cfg, kinds)
    write_outputs(args.out, results, requests)
    for kind, res in results:
        rep = res.report
        print(f"{kind:18s} avg_replica_usage={rep.avg_replica_usage:9.4f} "
              f"replicas_created={rep.replicas_created:6d} mean_hops={rep.mean_hops:.4f}")
    return 0


def cmd_golden(args):
    ok, _, msg = run_golden()
    print(msg)
    return 0 if ok else 2


def build_parser():
    p = argparse.ArgumentParser(prog="gridrep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one strategy")
    run.add_argument("--config", help="YAML config (defaults to the paper-s4 scenario)")
    run.add_argument("--strategy", choices=STRATEGY_KINDS)
    run.add_argument("--seed", type=int)
    run.add_argument("--intervals", type=int)
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run several strategies on one request stream")
    cmp_.add_argument("--config")
    cmp_.add_argument("--strategies", required=True, help="comma separated, e.g. cascading,pfr")
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--intervals", type=int)
    cmp_.add_argument("--out", required=True)
    cmp_.set_defaults(func=cmd_compare)

    golden = sub.add_parser("golden", help="check the built-in worked example")
    golden.set_defaults(func=cmd_golden)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
