"""Deterministic replay and session metrics over recorded event logs.

Replay folds a recorded log back into a session state; metrics are pure
functions of logs and annotation files. The participation-equality figure is
descriptive only: it reports how speaking time was distributed, it is not a
target the engines optimize for.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

from .core import SessionConfig, SessionPhase, SessionState, apply_event, initial_state
from .errors import (
    ConfigMismatchError,
    EmptyInputError,
    EmptyWindowError,
    MalformedPayloadError,
)
from .eventlog import (
    CodedValue,
    EventRecord,
    check_consecutive,
    read_annotations,
    read_log,
    speaking_tick_counts,
)


def replay(events: Sequence[EventRecord], config: SessionConfig | None = None) -> SessionState:
    """Fold a recorded log back into its final state.

    The first record must be the setup event; when a config is supplied it
    must match the recorded one exactly.
    """
    events = list(events)
    if not events:
        if config is None:
            raise MalformedPayloadError("empty log needs an explicit config")
        return initial_state(config)
    if events[0].kind != "configure":
        raise MalformedPayloadError("log must start with a configure event")
    check_consecutive(events)
    recorded = SessionConfig.from_dict(events[0].payload["config"])
    if config is not None and config.to_dict() != recorded.to_dict():
        raise ConfigMismatchError("supplied config differs from the log's setup event")
    state = initial_state(recorded)
    for event in events[1:]:
        state = apply_event(state, event)
    return state


def replay_log(path: str | os.PathLike, config: SessionConfig | None = None) -> SessionState:
    return replay(read_log(path), config)


def session_config(events: Sequence[EventRecord]) -> SessionConfig:
    if not events or events[0].kind != "configure":
        raise MalformedPayloadError("log must start with a configure event")
    return SessionConfig.from_dict(events[0].payload["config"])


def last_tick(events: Iterable[EventRecord]) -> int:
    tick = 0
    for event in events:
        tick = max(tick, event.tick)
    return tick


def intervention_boundary(events: Iterable[EventRecord]) -> int | None:
    """Tick of the start_phase event that entered the intervention, if any."""
    for event in events:
        if (
            event.kind == "start_phase"
            and event.payload.get("phase") == SessionPhase.INTERVENTION.value
        ):
            return event.tick
    return None


def participation_shares(
    events: Sequence[EventRecord],
    window: tuple[int, int],
    n_seats: int | None = None,
    threshold: float | None = None,
) -> list[float]:
    """Per-seat share of speaking ticks inside the inclusive window.

    Shares sum to 1, or are all zero when nobody spoke. Seat count and
    speaking threshold default to the log's recorded config.
    """
    start, end = window
    if start > end:
        raise EmptyWindowError(f"window ({start}, {end}) is empty")
    if n_seats is None or threshold is None:
        config = session_config(events)
        n_seats = n_seats if n_seats is not None else config.n_seats
        threshold = threshold if threshold is not None else config.speaking_threshold
    counts = speaking_tick_counts(events, window, n_seats, threshold)
    total = sum(counts)
    if total == 0:
        return [0.0] * n_seats
    return [c / total for c in counts]


def equality_gini(shares: Sequence[float]) -> float:
    """Gini coefficient of the share distribution: 0 for perfect equality,
    (n-1)/n for one seat holding everything. All-zero input yields 0."""
    n = len(shares)
    total = sum(shares)
    if n == 0 or total == 0:
        return 0.0
    ordered = sorted(shares)
    weighted = sum((2 * (i + 1) - n - 1) * x for i, x in enumerate(ordered))
    return weighted / (n * total)


def extremity_index(coded: Sequence[CodedValue] | Sequence[int]) -> float:
    """Mean distance of coded values from the scale midpoint 3."""
    if len(coded) == 0:
        raise EmptyInputError("no coded values")
    values = [c.value if isinstance(c, CodedValue) else c for c in coded]
    return sum(abs(v - 3) for v in values) / len(values)


def split_annotations(
    coded: Iterable[CodedValue], boundary: int | None
) -> tuple[list[CodedValue], list[CodedValue], list[CodedValue]]:
    """Partition coded values at the intervention boundary tick.

    Pre values end at or before the boundary, post values start after it;
    ranges that straddle the boundary are excluded from both.
    """
    if boundary is None:
        return list(coded), [], []
    pre, post, straddling = [], [], []
    for value in coded:
        if value.end <= boundary:
            pre.append(value)
        elif value.start > boundary:
            post.append(value)
        else:
            straddling.append(value)
    return pre, post, straddling


def _extremity_or_none(coded: Sequence[CodedValue]) -> float | None:
    return extremity_index(coded) if coded else None


def feedback_intensity_series(events: Sequence[EventRecord]) -> dict[int, list[list[float]]]:
    """Per-seat (tick, value) series of the feedback intensity each seat
    received: slider intensity moves for dots, pedal-driven size for balls."""
    config = session_config(events)
    series: dict[int, list[list[float]]] = {}
    cycle = None
    if any(event.kind == "pedal_input" for event in events):
        cycle = initial_state(config).engine.cycle
    for event in events:
        if event.kind == "slider_input" and event.payload.get("axis") == "intensity":
            target = event.payload["target"]
            series.setdefault(target, []).append([event.tick, float(event.payload["value"])])
        elif event.kind == "pedal_input" and cycle is not None:
            target = cycle.target_of(event.payload["seat"])
            position = min(1.0, max(0.0, float(event.payload["position"])))
            series.setdefault(target, []).append([event.tick, position])
    return series


def build_report(
    events: Sequence[EventRecord],
    annotations: Sequence[CodedValue] = (),
) -> dict:
    """Assemble the session report: shares, equality, pre/post extremity
    split at the intervention boundary, and feedback-intensity series."""
    config = session_config(events)
    end = last_tick(events)
    boundary = intervention_boundary(events)
    window = (1, max(end, 1))
    shares = participation_shares(events, window)

    report = {
        "session": {
            "mode": config.mode.value,
            "n_seats": config.n_seats,
            "ticks": end,
            "intervention_boundary": boundary,
        },
        "shares": {"overall": shares},
        "gini": {"overall": equality_gini(shares)},
        "feedback_intensity": {
            str(seat): points for seat, points in sorted(feedback_intensity_series(events).items())
        },
    }
    if boundary is not None:
        pre_shares = participation_shares(events, (1, boundary))
        post_shares = participation_shares(events, (boundary + 1, max(end, boundary + 1)))
        report["shares"]["pre"] = pre_shares
        report["shares"]["post"] = post_shares
        report["gini"]["pre"] = equality_gini(pre_shares)
        report["gini"]["post"] = equality_gini(post_shares)

    pre, post, straddling = split_annotations(annotations, boundary)
    pre_x, post_x = _extremity_or_none(pre), _extremity_or_none(post)
    coders = sorted({c.coder_id for c in annotations})
    per_coder = {}
    for coder in coders:
        coder_pre = [c for c in pre if c.coder_id == coder]
        coder_post = [c for c in post if c.coder_id == coder]
        cpre, cpost = _extremity_or_none(coder_pre), _extremity_or_none(coder_post)
        per_coder[coder] = {
            "pre": cpre,
            "post": cpost,
            "contrast": (cpost - cpre) if cpre is not None and cpost is not None else None,
        }
    coder_contrasts = [v["contrast"] for v in per_coder.values() if v["contrast"] is not None]
    report["extremity"] = {
        "pre": pre_x,
        "post": post_x,
        "contrast": (post_x - pre_x) if pre_x is not None and post_x is not None else None,
        "per_coder": per_coder,
        "mean_coder_contrast": (
            sum(coder_contrasts) / len(coder_contrasts) if coder_contrasts else None
        ),
        "straddling": len(straddling),
    }
    return report


def build_report_from_files(log_path: str, annotations_path: str | None = None) -> dict:
    events = read_log(log_path)
    annotations: list[CodedValue] = []
    if annotations_path:
        annotations = read_annotations(annotations_path)
    return build_report(events, annotations)
