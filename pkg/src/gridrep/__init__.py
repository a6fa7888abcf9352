"""Multi-tier data-grid replication simulator with fuzzy predictive replication."""

from .config import SimConfig, build_state, load_config, worked_example_config
from .fuzzy import ConfigError, FuzzySystemConfig, fuzzy_avg, infer_ri, tri_membership
from .pfr import PfrParams, ReplicationAction, run_interval
from .sim import compare_strategies, run_golden, run_simulation
from .strategies import STRATEGY_KINDS, ThresholdParams

__version__ = "0.1.0"
