"""Cyclic evaluator assignment and pedal-driven feedback balls.

Each seat's pedal controls exactly one other seat's ball so that the control
edges form a single cycle over all seats, and control is never assigned to
oneself, a direct ring neighbor, or (for even seat counts) the seat directly
opposite. Ball size and brightness are linked: brightness rises from a
configurable floor linearly with size.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import NoValidAssignmentError, ValidationResult
from .seats import SeatId, check_seat, ring_neighbors, ring_opposite

DEFAULT_BRIGHTNESS_FLOOR = 0.2

# Rejection sampling over random cycles is expected to land within a few
# hundred draws for every feasible seat count; the cap only guards bugs.
_MAX_SAMPLE_ATTEMPTS = 1_000_000


@dataclass(frozen=True)
class AssignmentCycle:
    """sigma[i] is the seat whose ball seat i's pedal controls."""

    sigma: tuple[int, ...]

    @property
    def n_seats(self) -> int:
        return len(self.sigma)

    def target_of(self, seat: SeatId) -> SeatId:
        check_seat(seat, self.n_seats)
        return self.sigma[seat]

    def cycle_order(self) -> list[int]:
        """Seats in control order starting from seat 0."""
        order = [0]
        while True:
            nxt = self.sigma[order[-1]]
            if nxt == 0:
                return order
            order.append(nxt)

    def to_dict(self) -> dict:
        return {"sigma": list(self.sigma)}


def allowed_targets(seat: int, n_seats: int) -> list[int]:
    """Seats this seat may control: everyone except self, ring neighbors and
    the opposite seat (opposite is skipped for odd seat counts)."""
    forbidden = {seat, *ring_neighbors(seat, n_seats)}
    opposite = ring_opposite(seat, n_seats)
    if opposite is not None:
        forbidden.add(opposite)
    return [t for t in range(n_seats) if t not in forbidden]


def validate_assignment(sigma: Sequence[int], n_seats: int) -> ValidationResult:
    """Check the constraint rules in order; report the first violated rule.

    Local rules (self, neighbor, opposite) are diagnosed before the global
    single-cycle shape so a fixed point reports as "self", not as a broken
    cycle.
    """
    if len(sigma) != n_seats or sorted(sigma) != list(range(n_seats)):
        return ValidationResult.failed("not-a-permutation")
    for seat, target in enumerate(sigma):
        if target == seat:
            return ValidationResult.failed(f"self: {seat} controls itself")
    for seat, target in enumerate(sigma):
        if target in ring_neighbors(seat, n_seats):
            return ValidationResult.failed(f"neighbor: {seat} controls adjacent {target}")
    if n_seats % 2 == 0:
        for seat, target in enumerate(sigma):
            if target == ring_opposite(seat, n_seats):
                return ValidationResult.failed(f"opposite: {seat} controls facing {target}")
    seen = {0}
    cursor = sigma[0]
    while cursor not in seen:
        seen.add(cursor)
        cursor = sigma[cursor]
    if len(seen) != n_seats:
        return ValidationResult.failed("not-single-cycle")
    return ValidationResult.passed()


@lru_cache(maxsize=None)
def has_valid_assignment(n_seats: int) -> bool:
    """Exact feasibility check: backtracking search for one constrained cycle."""
    if n_seats < 2:
        return False
    targets = [allowed_targets(seat, n_seats) for seat in range(n_seats)]
    if any(not t for t in targets):
        return False

    path = [0]
    used = [False] * n_seats
    used[0] = True

    def extend() -> bool:
        if len(path) == n_seats:
            return 0 in targets[path[-1]]
        for nxt in targets[path[-1]]:
            if not used[nxt]:
                used[nxt] = True
                path.append(nxt)
                if extend():
                    return True
                path.pop()
                used[nxt] = False
        return False

    return extend()


def _cycle_from_order(order: Sequence[int]) -> tuple[int, ...]:
    sigma = [0] * len(order)
    for k, seat in enumerate(order):
        sigma[seat] = order[(k + 1) % len(order)]
    return tuple(sigma)


def generate_assignment(n_seats: int, seed: int) -> AssignmentCycle:
    """Draw a uniformly random valid cycle, deterministic per seed.

    Rejection sampling over uniformly random single cycles: every valid cycle
    is reachable with equal probability.
    """
    if n_seats < 2:
        raise ValueError("n_seats must be at least 2")
    if not has_valid_assignment(n_seats):
        raise NoValidAssignmentError(n_seats)
    rng = random.Random(seed)
    order = list(range(n_seats))
    for _ in range(_MAX_SAMPLE_ATTEMPTS):
        rng.shuffle(order)
        sigma = _cycle_from_order(order)
        if validate_assignment(sigma, n_seats).ok:
            return AssignmentCycle(sigma=sigma)
    raise RuntimeError(f"sampling cap exhausted for {n_seats} seats")  # pragma: no cover


@dataclass(frozen=True)
class PedalInput:
    """Absolute pedal position from one evaluator seat, clamped to [0, 1]."""

    seat: SeatId
    position: float

    def __post_init__(self):
        object.__setattr__(self, "position", min(1.0, max(0.0, float(self.position))))


@dataclass(frozen=True)
class BallState:
    """Per-seat ball size and brightness with the linked coupling
    brightness = floor + (1 - floor) * size."""

    sizes: tuple[float, ...]
    brightness: tuple[float, ...]
    floor: float = DEFAULT_BRIGHTNESS_FLOOR

    @classmethod
    def initial(cls, n_seats: int, floor: float = DEFAULT_BRIGHTNESS_FLOOR) -> "BallState":
        return cls(
            sizes=(0.0,) * n_seats,
            brightness=(linked_brightness(0.0, floor),) * n_seats,
            floor=floor,
        )

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "brightness": list(self.brightness),
            "floor": self.floor,
        }


def linked_brightness(size: float, floor: float = DEFAULT_BRIGHTNESS_FLOOR) -> float:
    return floor + (1.0 - floor) * size


def apply_pedal(state: BallState, cycle: AssignmentCycle, pedal: PedalInput) -> BallState:
    """Set the controlled ball's size to the pedal position; brightness follows
    the linked formula. Exactly one ball changes."""
    target = cycle.target_of(pedal.seat)
    sizes = list(state.sizes)
    brightness = list(state.brightness)
    sizes[target] = pedal.position
    brightness[target] = linked_brightness(pedal.position, state.floor)
    return BallState(sizes=tuple(sizes), brightness=tuple(brightness), floor=state.floor)


@dataclass(frozen=True)
class TicState:
    """Engine state for a cycle-assignment session: the cycle plus the balls."""

    cycle: AssignmentCycle
    balls: BallState

    @classmethod
    def initial(
        cls, n_seats: int, seed: int, floor: float = DEFAULT_BRIGHTNESS_FLOOR
    ) -> "TicState":
        return cls(
            cycle=generate_assignment(n_seats, seed),
            balls=BallState.initial(n_seats, floor),
        )

    def to_dict(self) -> dict:
        return {"cycle": self.cycle.to_dict(), "balls": self.balls.to_dict()}
