"""Two-rule fuzzy system producing the Replica Indicator (RI) score.

Inputs are fuzzified with triangular LOW/HIGH membership functions, the four
antecedent degrees of each rule are combined with a fuzzy averaging operator
instead of a t-norm, and the crisp output is the centre-of-average of the two
output centres.

All functions accept scalars or numpy arrays and broadcast, so the same code
path scores a single (node, file) pair and a whole RI matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Raised for invalid simulator or fuzzy-system configuration."""


AVG_CONVEX = "convex"
AVG_SCALED_SUM = "scaled-sum"


@dataclass(frozen=True)
class TriangularMF:
    left: float
    peak: float
    right: float

    def validate(self, name="mf"):
        if not (self.left <= self.peak <= self.right):
            raise ConfigError(
                f"{name}: need left <= peak <= right, got "
                f"({self.left}, {self.peak}, {self.right})")
        if self.left == self.right:
            raise ConfigError(f"{name}: zero-width triangle")

    def __call__(self, x):
        return tri_membership(x, self)


def tri_membership(x, mf: TriangularMF):
    """Membership degree of ``x`` in a (possibly half-open) triangle."""
    x = np.asarray(x, dtype=float)
    left, peak, right = mf.left, mf.peak, mf.right
    if peak > left:
        rising = (x - left) / (peak - left)
    else:
        rising = np.ones_like(x)
    if right > peak:
        falling = (right - x) / (right - peak)
    else:
        falling = np.ones_like(x)
    out = np.where(x <= peak, rising, falling)
    out = np.where((x < left) | (x > right), 0.0, out)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FuzzyVariableSpec:
    domain_min: float = 0.0
    domain_max: float = 1.0
    low: TriangularMF = field(default_factory=lambda: TriangularMF(0.0, 0.0, 1.0))
    high: TriangularMF = field(default_factory=lambda: TriangularMF(0.0, 1.0, 1.0))

    def validate(self, name="variable"):
        if not self.domain_min < self.domain_max:
            raise ConfigError(f"{name}: domain_min must be < domain_max")
        for label, mf in (("low", self.low), ("high", self.high)):
            mf.validate(f"{name}.{label}")
            if mf.left < self.domain_min or mf.right > self.domain_max:
                raise ConfigError(f"{name}.{label}: support leaves the domain")
        # low + high is piecewise linear, so its minimum sits on a breakpoint
        pts = [self.domain_min, self.domain_max]
        for mf in (self.low, self.high):
            pts.extend(p for p in (mf.left, mf.peak, mf.right)
                       if self.domain_min <= p <= self.domain_max)
        pts = np.array(sorted(set(pts)))
        if np.any(self.low(pts) + self.high(pts) <= 0.0):
            raise ConfigError(f"{name}: LOW and HIGH leave a dead zone")

    def clamp(self, x):
        return np.clip(x, self.domain_min, self.domain_max)


@dataclass(frozen=True)
class FuzzySystemConfig:
    level: FuzzyVariableSpec = field(default_factory=FuzzyVariableSpec)
    file_size: FuzzyVariableSpec = field(default_factory=FuzzyVariableSpec)
    usage_ratio: FuzzyVariableSpec = field(default_factory=FuzzyVariableSpec)
    node_size: FuzzyVariableSpec = field(default_factory=FuzzyVariableSpec)
    output_low_center: float = 0.0
    output_high_center: float = 5.0
    lam: float = 0.5
    avg_mode: str = AVG_CONVEX
    # raw usage ratio that maps to the top of the usage domain
    usage_cap: float = 10.0

    def validate(self):
        for name in ("level", "file_size", "usage_ratio", "node_size"):
            getattr(self, name).validate(name)
        if not self.output_low_center < self.output_high_center:
            raise ConfigError("output_low_center must be < output_high_center")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lambda must lie in [0, 1]")
        if self.avg_mode not in (AVG_CONVEX, AVG_SCALED_SUM):
            raise ConfigError(f"unknown avg_mode {self.avg_mode!r}")
        if self.avg_mode == AVG_SCALED_SUM and self.lam == 0.0:
            raise ConfigError("scaled-sum averaging with lambda = 0 zeroes every rule")
        if self.usage_cap <= 0:
            raise ConfigError("usage_cap must be positive")
        return self

    def with_(self, **kw):
        return replace(self, **kw)


def fuzzy_avg(degrees, lam, mode=AVG_CONVEX):
    """Fuzzy averaging operator over the leading axis of ``degrees``.

    ``convex``: lam * max + (1 - lam) * min.  ``scaled-sum``: lam * (max + min),
    kept for comparison only since it is not bounded by max.
    """
    arr = np.asarray(degrees, dtype=float)
    if arr.ndim == 0 or arr.shape[0] == 0:
        raise ValueError("fuzzy_avg needs at least one degree")
    hi = arr.max(axis=0)
    lo = arr.min(axis=0)
    if mode == AVG_CONVEX:
        out = lam * hi + (1.0 - lam) * lo
    elif mode == AVG_SCALED_SUM:
        out = lam * (hi + lo)
    else:
        raise ValueError(f"unknown averaging mode {mode!r}")
    return out if np.ndim(out) else float(out)


def rule_weights(level, file_size, usage_ratio, node_size, cfg: FuzzySystemConfig):
    lv = cfg.level.clamp(np.asarray(level, dtype=float))
    fs = cfg.file_size.clamp(np.asarray(file_size, dtype=float))
    ur = cfg.usage_ratio.clamp(np.asarray(usage_ratio, dtype=float))
    ns = cfg.node_size.clamp(np.asarray(node_size, dtype=float))
    lv, fs, ur, ns = np.broadcast_arrays(lv, fs, ur, ns)
    # rule 1 -> RI high, rule 2 -> RI low
    w_high = fuzzy_avg(np.stack([
        np.asarray(cfg.level.low(lv)), np.asarray(cfg.file_size.low(fs)),
        np.asarray(cfg.usage_ratio.high(ur)), np.asarray(cfg.node_size.high(ns)),
    ]), cfg.lam, cfg.avg_mode)
    w_low = fuzzy_avg(np.stack([
        np.asarray(cfg.level.high(lv)), np.asarray(cfg.file_size.high(fs)),
        np.asarray(cfg.usage_ratio.low(ur)), np.asarray(cfg.node_size.low(ns)),
    ]), cfg.lam, cfg.avg_mode)
    return w_high, w_low


def infer_ri(level, file_size, usage_ratio, node_size, cfg: FuzzySystemConfig):
    """Centre-of-average defuzzified RI for already-normalised inputs.

    Any lam > 0 keeps the total rule weight positive. With lam = 0 (pure
    min) inputs that zero both rules raise ConfigError.
    """
    w_high, w_low = rule_weights(level, file_size, usage_ratio, node_size, cfg)
    total = np.asarray(w_high + w_low)
    if np.any(total <= 0.0):
        raise ConfigError("total rule weight is zero; membership functions leave a dead zone")
    out = (cfg.output_high_center * w_high + cfg.output_low_center * w_low) / total
    return out if np.ndim(out) else float(out)
