"""Video-conference feedback dots: sliders, direction semantics, role context.

Each recipient seat owns a dot with three independently slider-controlled
axes (hue along the red-to-violet scale, size, intensity). Feedback comes
either from an external observer targeting every recipient or from
participant evaluators wired through the cyclic assignment, never from a
participant to themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping

from . import tic
from .errors import (
    EmptyWindowError,
    MalformedPayloadError,
    NotARecipientError,
    UnauthorizedSourceError,
)
from .eventlog import speaking_tick_counts
from .seats import SeatId

if TYPE_CHECKING:  # pragma: no cover
    from .eventlog import EventRecord

EXTERNAL_SOURCE_ID = "observer"


class SourceKind(str, Enum):
    EXTERNAL_OBSERVER = "external_observer"
    PARTICIPANT_EVALUATOR = "participant_evaluator"


class FeedbackSourceMode(str, Enum):
    """Session-level choice of where feedback comes from."""

    EXTERNAL_OBSERVER = "external_observer"
    PARTICIPANT_CYCLE = "participant_cycle"
    MIXED = "mixed"


class SliderAxis(str, Enum):
    HUE = "hue"
    SIZE = "size"
    INTENSITY = "intensity"


@dataclass(frozen=True)
class FeedbackDot:
    """Hue runs the red-to-violet axis (0 = red, 1 = violet); all three axes
    are independent in this mode."""

    hue: float = 0.5
    size: float = 0.0
    intensity: float = 0.0

    def to_dict(self) -> dict:
        return {"hue": self.hue, "size": self.size, "intensity": self.intensity}


@dataclass(frozen=True)
class FeedbackSource:
    source_id: str
    kind: SourceKind
    targets: frozenset[SeatId]
    seat: SeatId | None = None

    def __post_init__(self):
        if self.kind is SourceKind.PARTICIPANT_EVALUATOR:
            if self.seat is None:
                raise MalformedPayloadError("participant evaluator needs a seat")
            if self.seat in self.targets:
                raise MalformedPayloadError(
                    f"evaluator at seat {self.seat} may not target itself"
                )
        elif self.seat is not None:
            raise MalformedPayloadError("external observer has no seat")

    def to_dict(self) -> dict:
        doc = {
            "source_id": self.source_id,
            "kind": self.kind.value,
            "targets": sorted(self.targets),
        }
        if self.seat is not None:
            doc["seat"] = self.seat
        return doc


@dataclass(frozen=True)
class SliderInput:
    source_id: str
    target: SeatId
    axis: SliderAxis
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", min(1.0, max(0.0, float(self.value))))


@dataclass(frozen=True)
class VcState:
    """Dots per recipient seat plus the source registry."""

    dots: tuple[tuple[SeatId, FeedbackDot], ...]
    sources: tuple[FeedbackSource, ...]

    @classmethod
    def initial(cls, recipients: Iterable[SeatId], sources: Iterable[FeedbackSource]) -> "VcState":
        return cls(
            dots=tuple((seat, FeedbackDot()) for seat in sorted(recipients)),
            sources=tuple(sources),
        )

    def dot_of(self, seat: SeatId) -> FeedbackDot:
        for s, dot in self.dots:
            if s == seat:
                return dot
        raise NotARecipientError(f"seat {seat} receives no feedback dot")

    def source_registry(self) -> dict[str, FeedbackSource]:
        return {src.source_id: src for src in self.sources}

    def to_dict(self) -> dict:
        return {
            "dots": {str(seat): dot.to_dict() for seat, dot in self.dots},
            "sources": [src.to_dict() for src in self.sources],
        }


def apply_slider(
    state: VcState,
    sources: Mapping[str, FeedbackSource],
    slider: SliderInput,
    recipients: Iterable[SeatId],
) -> VcState:
    """Set one axis of one target's dot; every other axis and dot is untouched."""
    source = sources.get(slider.source_id)
    if source is None or slider.target not in source.targets:
        raise UnauthorizedSourceError(
            f"source {slider.source_id!r} is not assigned target {slider.target}"
        )
    if slider.target not in set(recipients):
        raise NotARecipientError(f"seat {slider.target} is not a configured recipient")
    dots = tuple(
        (seat, replace(dot, **{slider.axis.value: slider.value}) if seat == slider.target else dot)
        for seat, dot in state.dots
    )
    return VcState(dots=dots, sources=state.sources)


def semantic_direction(hue: float) -> float:
    """Map hue to a signed participation direction: red asks for less
    (-1), violet asks for more (+1), linear in between."""
    if not 0.0 <= hue <= 1.0:
        raise ValueError(f"hue {hue} outside [0, 1]")
    return 2.0 * hue - 1.0


def relative_participation(
    events: "Iterable[EventRecord]",
    window: tuple[int, int],
    seat: SeatId,
    expected_shares: Mapping[SeatId, float],
    n_seats: int,
    speaking_threshold: float = 0.5,
) -> float:
    """Speaking-time share in the window minus the seat's expected role share.

    A seat's share is its speaking-tick count over the total speaking ticks
    of all seats; expected shares default to an even split when undeclared.
    """
    start, end = window
    if start > end:
        raise EmptyWindowError(f"window ({start}, {end}) is empty")
    counts = speaking_tick_counts(events, window, n_seats, speaking_threshold)
    total = sum(counts)
    share = counts[seat] / total if total else 0.0
    expected = expected_shares.get(seat)
    if expected is None:
        expected = 1.0 / n_seats
    return share - expected


def assign_feedback_targets(
    n_seats: int,
    recipients: Iterable[SeatId],
    source_mode: FeedbackSourceMode,
    seed: int,
) -> list[FeedbackSource]:
    """Build the source registry for a session.

    The external observer targets every recipient. Participant evaluators are
    wired through the cyclic assignment over the full seat ring, keeping only
    targets that are configured recipients.
    """
    recipients = frozenset(recipients)
    registry: list[FeedbackSource] = []
    if source_mode in (FeedbackSourceMode.EXTERNAL_OBSERVER, FeedbackSourceMode.MIXED):
        registry.append(
            FeedbackSource(
                source_id=EXTERNAL_SOURCE_ID,
                kind=SourceKind.EXTERNAL_OBSERVER,
                targets=recipients,
            )
        )
    if source_mode in (FeedbackSourceMode.PARTICIPANT_CYCLE, FeedbackSourceMode.MIXED):
        cycle = tic.generate_assignment(n_seats, seed)
        for seat in range(n_seats):
            registry.append(
                FeedbackSource(
                    source_id=evaluator_source_id(seat),
                    kind=SourceKind.PARTICIPANT_EVALUATOR,
                    seat=seat,
                    targets=frozenset({cycle.target_of(seat)}) & recipients,
                )
            )
    return registry


def evaluator_source_id(seat: SeatId) -> str:
    return f"evaluator-{seat}"
