"""Vocal-participation mirror: activity smoothing and territory apportionment.

Per-seat speaking levels are smoothed with an exponential moving average
whose coefficient is expressed as a half-life in ticks, then a fixed pool of
territory cells is divided among seats in proportion to the smoothed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence


@dataclass(frozen=True)
class ReflectParams:
    half_life_ticks: int = 300  # 30 s at 10 Hz
    cell_count: int = 64
    activity_floor: float = 0.02

    def __post_init__(self):
        if self.half_life_ticks < 1 or self.cell_count < 1:
            raise ValueError("half_life_ticks and cell_count must be positive")
        if not 0 <= self.activity_floor < 1:
            raise ValueError("activity_floor must be in [0, 1)")

    @property
    def alpha(self) -> float:
        """Per-tick EMA coefficient: a constant level-0 input halves the value
        every half_life_ticks ticks."""
        return 1.0 - 2.0 ** (-1.0 / self.half_life_ticks)


@dataclass(frozen=True)
class TerritoryState:
    """Smoothed per-seat activity plus the current cell apportionment."""

    smoothed: tuple[float, ...]
    cells: tuple[int, ...]

    @classmethod
    def initial(cls, n_seats: int) -> "TerritoryState":
        return cls(smoothed=(0.0,) * n_seats, cells=(0,) * n_seats)

    def to_dict(self) -> dict:
        return {"smoothed": list(self.smoothed), "cells": list(self.cells)}


def ema_step(current: float, level: float, alpha: float) -> float:
    return (1.0 - alpha) * current + alpha * level


def smooth_activity(
    prev: TerritoryState,
    levels: Mapping[int, float] | Sequence[float],
    params: ReflectParams,
) -> list[float]:
    """One full smoothing step: every seat folds its level, missing seats fold 0."""
    alpha = params.alpha
    if isinstance(levels, Mapping):
        per_seat = [float(levels.get(i, 0.0)) for i in range(len(prev.smoothed))]
    else:
        per_seat = [float(v) for v in levels]
        per_seat += [0.0] * (len(prev.smoothed) - len(per_seat))
    for level in per_seat:
        if not 0.0 <= level <= 1.0:
            raise ValueError(f"activity level {level} outside [0, 1]")
    return [ema_step(s, level, alpha) for s, level in zip(prev.smoothed, per_seat)]


def allocate_territory(smoothed: Sequence[float], params: ReflectParams) -> list[int]:
    """Apportion the cell pool by largest remainder over smoothed shares.

    Returns all zeros when total activity is at or below the floor. Remainder
    ties break toward the lowest seat index.
    """
    if any(s < 0 for s in smoothed):
        raise ValueError("smoothed values must be non-negative")
    total = sum(smoothed)
    n = len(smoothed)
    if total <= params.activity_floor:
        return [0] * n
    quotas = [s / total * params.cell_count for s in smoothed]
    cells = [math.floor(q) for q in quotas]
    leftover = params.cell_count - sum(cells)
    by_remainder = sorted(range(n), key=lambda i: (-(quotas[i] - cells[i]), i))
    for i in by_remainder[:leftover]:
        cells[i] += 1
    return cells
