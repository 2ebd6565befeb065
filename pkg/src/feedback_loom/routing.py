"""Channel routing for the listening-switchbox apparatus.

Every seat broadcasts on its own fixed channel (channel ids are seat ids)
and tunes exactly one listening channel. A speaker must never be able to
learn how many seats are tuned to their channel, so per-seat projections
contain only the seat's own routing row; listener sets are analysis-only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownChannelError
from .seats import SeatId, check_seat


@dataclass(frozen=True)
class RoutingState:
    """Complete routing table: one listen entry per seat, plus power LEDs."""

    listen: tuple[int, ...]
    powered: tuple[bool, ...]

    @classmethod
    def initial(cls, n_seats: int) -> "RoutingState":
        # Dials start on the seat's own channel; power LEDs off until the
        # intervention goes live.
        return cls(listen=tuple(range(n_seats)), powered=(False,) * n_seats)

    @property
    def n_seats(self) -> int:
        return len(self.listen)

    def to_dict(self) -> dict:
        return {"listen": list(self.listen), "powered": list(self.powered)}


@dataclass(frozen=True)
class SpeakerView:
    """What one seat may know: its own routing row and nothing derived from
    other seats' listen entries."""

    seat: SeatId
    own_channel: int
    tuned_to: int
    powered: bool

    def to_payload(self) -> dict:
        return {
            "seat": self.seat,
            "own_channel": self.own_channel,
            "tuned_to": self.tuned_to,
            "powered": self.powered,
        }


def set_listen(state: RoutingState, seat: SeatId, channel: int) -> RoutingState:
    """Tune one seat's dial; listening to your own channel is permitted."""
    check_seat(seat, state.n_seats)
    if not isinstance(channel, int) or isinstance(channel, bool) or not 0 <= channel < state.n_seats:
        raise UnknownChannelError(f"channel {channel!r} out of range [0, {state.n_seats})")
    listen = list(state.listen)
    listen[seat] = channel
    return RoutingState(listen=tuple(listen), powered=state.powered)


def set_powered(state: RoutingState, on: bool) -> RoutingState:
    return RoutingState(listen=state.listen, powered=(on,) * state.n_seats)


def audible_speaker(state: RoutingState, listener: SeatId) -> SeatId:
    """The seat whose channel the listener is currently tuned to."""
    check_seat(listener, state.n_seats)
    return state.listen[listener]


def listeners_of(state: RoutingState, speaker: SeatId) -> set[SeatId]:
    """All seats tuned to the speaker's channel. Analysis-only: never include
    this in any message addressed to a speaker role."""
    check_seat(speaker, state.n_seats)
    return {s for s, channel in enumerate(state.listen) if channel == speaker}


def mutual_pairs(state: RoutingState) -> set[tuple[SeatId, SeatId]]:
    """Unordered pairs {i, j} whose members listen to each other's channels.

    Self-loops are excluded; pairs are returned as sorted tuples.
    """
    pairs = set()
    for i, channel in enumerate(state.listen):
        j = channel
        if j != i and state.listen[j] == i:
            pairs.add((min(i, j), max(i, j)))
    return pairs


def speaker_view(state: RoutingState, seat: SeatId) -> SpeakerView:
    check_seat(seat, state.n_seats)
    return SpeakerView(
        seat=seat,
        own_channel=seat,
        tuned_to=state.listen[seat],
        powered=state.powered[seat],
    )
