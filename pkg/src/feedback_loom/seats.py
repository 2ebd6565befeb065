"""Seat identifiers and ring geometry.

Seats sit on a ring: adjacency is index +/-1 modulo the seat count, and the
"opposite" seat (index + n/2) exists only for even seat counts.
"""

from __future__ import annotations

from .errors import UnknownSeatError

SeatId = int


def check_seat(seat: int, n_seats: int) -> int:
    if not isinstance(seat, int) or isinstance(seat, bool) or not 0 <= seat < n_seats:
        raise UnknownSeatError(f"seat {seat!r} out of range [0, {n_seats})")
    return seat


def ring_neighbors(seat: int, n_seats: int) -> tuple[int, int]:
    return ((seat - 1) % n_seats, (seat + 1) % n_seats)


def ring_opposite(seat: int, n_seats: int) -> int | None:
    """Opposite-facing seat, or None when the seat count is odd."""
    if n_seats % 2 != 0:
        return None
    return (seat + n_seats // 2) % n_seats
