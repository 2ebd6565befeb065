"""Append-only JSONL session logs and coder annotations.

One :class:`EventRecord` per line with field names exactly
``seq``, ``tick``, ``kind``, ``payload``. Sequence numbers are strictly
consecutive from 1 within a log. Annotation sidecar files carry one
:class:`CodedValue` per line with field names exactly
``start``, ``end``, ``seat``, ``dimension``, ``value``, ``coder_id``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import EmptyInputError, MalformedPayloadError, SequenceGapError

# Closed set of event kinds that may appear in a session log. Mirrors the
# inbound half of the wire protocol; outbound-only message types
# (state_update, dot_update, error) never become events.
EVENT_KINDS = frozenset(
    {
        "configure",
        "join",
        "start_phase",
        "tick",
        "activity_sample",
        "set_listen",
        "pedal_input",
        "slider_input",
        "annotation",
        "end_session",
    }
)


def canonical_json(doc) -> str:
    """Deterministic JSON encoding used everywhere byte-equality matters."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class EventRecord:
    """One applied session event; the unit of replay and audit."""

    seq: int
    tick: int
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise MalformedPayloadError(f"unknown event kind {self.kind!r}")

    def to_json_line(self) -> str:
        return canonical_json(
            {"seq": self.seq, "tick": self.tick, "kind": self.kind, "payload": self.payload}
        )

    @classmethod
    def from_json_line(cls, line: str) -> "EventRecord":
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedPayloadError(f"invalid JSONL line: {exc}") from exc
        if not isinstance(doc, dict) or set(doc) != {"seq", "tick", "kind", "payload"}:
            raise MalformedPayloadError("event line must have exactly seq, tick, kind, payload")
        if not isinstance(doc["payload"], dict):
            raise MalformedPayloadError("event payload must be an object")
        return cls(seq=doc["seq"], tick=doc["tick"], kind=doc["kind"], payload=doc["payload"])


class LogWriter:
    """Append-only event log writer. Never seeks, never rewrites."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: IO[str] = open(self.path, "a", encoding="utf-8")

    def append(self, event: EventRecord) -> None:
        self._fh.write(event.to_json_line())
        self._fh.write("\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "LogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_log(path: str | os.PathLike, events: Iterable[EventRecord]) -> None:
    with LogWriter(path) as writer:
        for event in events:
            writer.append(event)


def iter_log(path: str | os.PathLike) -> Iterator[EventRecord]:
    """Yield events from a log file, stopping before any incomplete last line.

    A concurrent writer may leave a partial trailing line; readers only
    consume lines terminated by a newline.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            line = line.strip()
            if line:
                yield EventRecord.from_json_line(line)


def read_log(path: str | os.PathLike) -> list[EventRecord]:
    events = list(iter_log(path))
    check_consecutive(events)
    return events


def check_consecutive(events: Iterable[EventRecord]) -> None:
    """Raise SequenceGapError unless seq runs 1, 2, 3, ... without gaps."""
    expected = 1
    for event in events:
        if event.seq != expected:
            raise SequenceGapError(f"expected seq {expected}, found {event.seq}")
        expected += 1


def speaking_tick_counts(
    events: Iterable[EventRecord],
    window: tuple[int, int],
    n_seats: int,
    threshold: float = 0.5,
) -> list[int]:
    """Count ticks per seat where the activity level exceeded the threshold.

    The window is an inclusive tick range (start, end).
    """
    start, end = window
    counts = [0] * n_seats
    for event in events:
        if event.kind != "activity_sample":
            continue
        if not start <= event.tick <= end:
            continue
        seat = event.payload["seat"]
        if event.payload["level"] > threshold and 0 <= seat < n_seats:
            counts[seat] += 1
    return counts


class CodingDimension(str, Enum):
    """The four coded session dimensions."""

    INVOLVEMENT = "involvement"
    EMOTION = "emotion"
    BODY_LANGUAGE = "body_language"
    LEADERSHIP = "leadership"


@dataclass(frozen=True)
class CodedValue:
    """One coder judgment on a 1-5 scale over an inclusive tick range."""

    start: int
    end: int
    seat: int
    dimension: CodingDimension
    value: int
    coder_id: str

    def __post_init__(self):
        if self.start > self.end:
            raise MalformedPayloadError(f"coded range start {self.start} > end {self.end}")
        if not 1 <= self.value <= 5:
            raise MalformedPayloadError(f"coded value {self.value} outside 1..5")

    def to_json_line(self) -> str:
        return canonical_json(
            {
                "start": self.start,
                "end": self.end,
                "seat": self.seat,
                "dimension": self.dimension.value,
                "value": self.value,
                "coder_id": self.coder_id,
            }
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "CodedValue":
        expected = {"start", "end", "seat", "dimension", "value", "coder_id"}
        if set(doc) != expected:
            raise MalformedPayloadError(f"annotation must have exactly fields {sorted(expected)}")
        try:
            dimension = CodingDimension(doc["dimension"])
        except ValueError as exc:
            raise MalformedPayloadError(f"unknown dimension {doc['dimension']!r}") from exc
        return cls(
            start=doc["start"],
            end=doc["end"],
            seat=doc["seat"],
            dimension=dimension,
            value=doc["value"],
            coder_id=doc["coder_id"],
        )


def write_annotations(path: str | os.PathLike, coded: Iterable[CodedValue]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for value in coded:
            fh.write(value.to_json_line())
            fh.write("\n")


def read_annotations(path: str | os.PathLike) -> list[CodedValue]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(CodedValue.from_dict(json.loads(line)))
    if not out:
        raise EmptyInputError(f"no annotations in {path}")
    return out
