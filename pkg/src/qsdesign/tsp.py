"""Travelling salesman with deadlines, where each strategy is a QS input.

A strategy pairs a visiting order ``o`` with stay durations.  Stays are held
in visit order: ``stays[l]`` is the time spent in city ``order[l]``.  Use
:meth:`TspStrategy.from_city_stays` when the durations are indexed by city.

Completion time at the l-th stop is the running sum of travel legs and stays;
each city is penalised per day it finishes past its deadline.  Profit is

    m*a + e*sum(stays) - b*C_final - f*sum(delays)
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .core import QSDesign

__all__ = [
    "TspInstance",
    "TspStrategy",
    "completion_times",
    "delays",
    "profit",
    "six_city_instance",
    "random_baseline",
    "strategies_from_design",
]


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Cities 1..m; ``s[i, j-1]`` is the travel time from city i (0 = start) to city j."""

    a: float
    e: float
    b: float
    f: float
    d: np.ndarray
    s: np.ndarray
    stay_min: float | None = None
    stay_max: float | None = None

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=float)
        s = np.asarray(self.s, dtype=float)
        m = d.shape[0]
        if d.ndim != 1 or m < 1:
            raise ValueError("deadlines must be a non-empty vector")
        if s.shape != (m + 1, m):
            raise ValueError(f"travel matrix must be {(m + 1, m)}, got {s.shape}")
        if np.any(s < 0):
            raise ValueError("travel times must be non-negative")
        if np.any(d <= 0):
            raise ValueError("deadlines must be positive")
        if (self.stay_min is None) != (self.stay_max is None):
            raise ValueError("give both stay bounds or neither")
        if self.stay_min is not None and not self.stay_min <= self.stay_max:
            raise ValueError("stay_min must not exceed stay_max")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "s", s)

    @property
    def m(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class TspStrategy:
    order: np.ndarray
    stays: np.ndarray

    def __post_init__(self) -> None:
        order = np.asarray(self.order, dtype=np.int64)
        stays = np.asarray(self.stays, dtype=float)
        if order.ndim != 1 or sorted(order.tolist()) != list(range(1, order.size + 1)):
            raise ValueError(f"order {order.tolist()} is not a permutation of 1..{order.size}")
        if stays.shape != order.shape:
            raise ValueError("stays and order must have the same length")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "stays", stays)

    @classmethod
    def from_city_stays(cls, order, city_stays) -> "TspStrategy":
        """Build from stays indexed by city (``city_stays[c-1]`` is the stay in city c)."""
        order = np.asarray(order, dtype=np.int64)
        return cls(order, np.asarray(city_stays, dtype=float)[order - 1])

    def city_stays(self) -> np.ndarray:
        out = np.empty_like(self.stays)
        out[self.order - 1] = self.stays
        return out


def _check(inst: TspInstance, strat: TspStrategy) -> None:
    if strat.order.size != inst.m:
        raise ValueError(f"strategy visits {strat.order.size} cities, instance has {inst.m}")
    if inst.stay_min is not None:
        lo, hi = inst.stay_min, inst.stay_max
        if np.any(strat.stays < lo) or np.any(strat.stays > hi):
            raise ValueError(f"stays must lie in [{lo}, {hi}]")


def completion_times(inst: TspInstance, strat: TspStrategy) -> np.ndarray:
    """Completion time at each stop, in visit order."""
    _check(inst, strat)
    prev = np.concatenate([[0], strat.order[:-1]])
    legs = inst.s[prev, strat.order - 1]
    return np.cumsum(legs + strat.stays)


def delays(inst: TspInstance, strat: TspStrategy) -> np.ndarray:
    """Days past the deadline at each stop, in visit order."""
    c = completion_times(inst, strat)
    return np.maximum(0.0, c - inst.d[strat.order - 1])


def profit(inst: TspInstance, strat: TspStrategy) -> float:
    c = completion_times(inst, strat)
    late = np.maximum(0.0, c - inst.d[strat.order - 1])
    return float(inst.m * inst.a + inst.e * strat.stays.sum() - inst.b * c[-1] - inst.f * late.sum())


def six_city_instance() -> TspInstance:
    """Six-city benchmark with stays limited to [1, 4] days."""
    s = [
        [0.6, 2.2, 1.8, 2.6, 1.8, 1.7],
        [0.0, 0.8, 1.5, 1.4, 2.8, 1.1],
        [0.7, 0.0, 1.2, 2.4, 2.3, 1.4],
        [1.5, 1.2, 0.0, 1.8, 1.3, 1.5],
        [1.2, 2.4, 1.7, 0.0, 1.7, 2.1],
        [2.7, 2.4, 1.3, 1.7, 0.0, 0.9],
        [1.1, 1.3, 1.4, 2.3, 0.9, 0.0],
    ]
    return TspInstance(20, 10, 2, 15, np.array([26, 10, 23, 25, 12, 10]), np.array(s), 1.0, 4.0)


def _distinct_orders(m: int, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    seen: set[tuple[int, ...]] = set()
    out = []
    while len(out) < n:
        o = rng.permutation(m) + 1
        key = tuple(o.tolist())
        if key not in seen:
            seen.add(key)
            out.append(o)
    return out


def random_baseline(inst: TspInstance, n: int, seed: int = 0) -> tuple[float, np.ndarray]:
    """Profits of n strategies with distinct random orders and uniform stays in the stay box.

    Returns ``(best, profits)``.
    """
    m = inst.m
    if n < 1:
        raise ValueError("n must be positive")
    if n > factorial(m):
        raise ValueError(f"n={n} exceeds the {factorial(m)} distinct orders of {m} cities")
    if inst.stay_min is None:
        raise ValueError("random_baseline needs stay bounds on the instance")
    rng = np.random.default_rng(seed)
    orders = _distinct_orders(m, n, rng)
    stays = rng.uniform(inst.stay_min, inst.stay_max, size=(n, m))
    profits = np.array([profit(inst, TspStrategy(o, x)) for o, x in zip(orders, stays)])
    return float(profits.max()), profits


def strategies_from_design(design: QSDesign, inst: TspInstance) -> list[TspStrategy]:
    """One strategy per run: O row is the order, X column c (scaled into the stay box) is city c's stay."""
    n, m = design.n, design.m
    if m != inst.m:
        raise ValueError(f"design has {m} components, instance has {inst.m} cities")
    if inst.stay_min is None:
        raise ValueError("mapping a design needs stay bounds on the instance")
    x = design.x.values.astype(float)
    span = inst.stay_max - inst.stay_min
    scaled = inst.stay_min + (x - 1) * span / (n - 1) if n > 1 else np.full_like(x, inst.stay_min)
    return [TspStrategy.from_city_stays(design.o.values[i], scaled[i]) for i in range(n)]
