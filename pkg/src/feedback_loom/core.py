"""Session lifecycle, seat registry, and event-sourced state aggregation.

A session's state is a pure fold of its ordered event log over the initial
state derived from the config. There are no hidden clocks: time advances
only through tick events, and phase changes only through start_phase or
end_session events, so replaying a log always reproduces the live state
byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Mapping

from . import reflect, routing, tic, vc
from .errors import (
    AlreadyClosedError,
    MalformedPayloadError,
    PhaseViolationError,
    SequenceGapError,
    UnknownKindError,
    UnknownSeatError,
    ValidationResult,
)
from .eventlog import EVENT_KINDS, CodedValue, EventRecord, canonical_json
from .seats import SeatId, check_seat

ROLE_SHARE_TOLERANCE = 0.01


class SessionMode(str, Enum):
    REFLECT = "reflect"
    SIMULATION = "simulation"
    TIC = "tic"
    VC_FEEDBACK = "vc_feedback"


class SessionPhase(str, Enum):
    LOBBY = "lobby"
    PRE_INTERVENTION = "pre_intervention"
    INTERVENTION = "intervention"
    DEBRIEF = "debrief"
    CLOSED = "closed"


PHASE_CHAIN = (
    SessionPhase.LOBBY,
    SessionPhase.PRE_INTERVENTION,
    SessionPhase.INTERVENTION,
    SessionPhase.DEBRIEF,
    SessionPhase.CLOSED,
)

# Seat counts the apparatus was designed around, applied when a config omits
# n_seats: the switchbox table seats 12, the ball table seats 8.
DEFAULT_SEATS = {
    SessionMode.REFLECT: 8,
    SessionMode.SIMULATION: 12,
    SessionMode.TIC: 8,
    SessionMode.VC_FEEDBACK: 8,
}

DEFAULT_PHASE_PLAN = (
    (SessionPhase.PRE_INTERVENTION, 300),
    (SessionPhase.INTERVENTION, 300),
)

_PLANNABLE_PHASES = (
    SessionPhase.PRE_INTERVENTION,
    SessionPhase.INTERVENTION,
    SessionPhase.DEBRIEF,
)

_CONFIG_FIELDS = {
    "mode",
    "n_seats",
    "tick_hz",
    "phase_plan",
    "feedback_source",
    "recipients",
    "rng_seed",
    "half_life_ticks",
    "cell_count",
    "activity_floor",
    "brightness_floor",
    "speaking_threshold",
    "show_idle_feedback",
    "dot_visibility",
    "show_context_to_evaluator",
}


@dataclass(frozen=True)
class SessionConfig:
    mode: SessionMode
    n_seats: int
    tick_hz: int = 10
    phase_plan: tuple[tuple[SessionPhase, int], ...] = DEFAULT_PHASE_PLAN
    feedback_source: vc.FeedbackSourceMode = vc.FeedbackSourceMode.EXTERNAL_OBSERVER
    recipients: tuple[SeatId, ...] = ()
    rng_seed: int = 0
    half_life_ticks: int = 300
    cell_count: int = 64
    activity_floor: float = 0.02
    brightness_floor: float = 0.2
    speaking_threshold: float = 0.5
    show_idle_feedback: bool = False
    dot_visibility: str = "private"
    show_context_to_evaluator: bool = True

    def reflect_params(self) -> reflect.ReflectParams:
        return reflect.ReflectParams(
            half_life_ticks=self.half_life_ticks,
            cell_count=self.cell_count,
            activity_floor=self.activity_floor,
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_seats": self.n_seats,
            "tick_hz": self.tick_hz,
            "phase_plan": [[phase.value, ticks] for phase, ticks in self.phase_plan],
            "feedback_source": self.feedback_source.value,
            "recipients": list(self.recipients),
            "rng_seed": self.rng_seed,
            "half_life_ticks": self.half_life_ticks,
            "cell_count": self.cell_count,
            "activity_floor": self.activity_floor,
            "brightness_floor": self.brightness_floor,
            "speaking_threshold": self.speaking_threshold,
            "show_idle_feedback": self.show_idle_feedback,
            "dot_visibility": self.dot_visibility,
            "show_context_to_evaluator": self.show_context_to_evaluator,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SessionConfig":
        """Build a config from its JSON document form. Unknown fields are
        rejected rather than ignored."""
        if not isinstance(doc, Mapping):
            raise MalformedPayloadError("config must be a JSON object")
        unknown = set(doc) - _CONFIG_FIELDS
        if unknown:
            raise MalformedPayloadError(f"unknown config fields: {sorted(unknown)}")
        if "mode" not in doc:
            raise MalformedPayloadError("config requires a mode")
        try:
            mode = SessionMode(doc["mode"])
        except ValueError as exc:
            raise MalformedPayloadError(f"unknown mode {doc['mode']!r}") from exc
        n_seats = doc.get("n_seats", DEFAULT_SEATS[mode])
        if not isinstance(n_seats, int) or isinstance(n_seats, bool):
            raise MalformedPayloadError("n_seats must be an integer")

        phase_plan = []
        for entry in doc.get("phase_plan", [[p.value, t] for p, t in DEFAULT_PHASE_PLAN]):
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise MalformedPayloadError("phase_plan entries must be [phase, ticks] pairs")
            name, ticks = entry
            try:
                phase = SessionPhase(name)
            except ValueError as exc:
                raise MalformedPayloadError(f"unknown phase {name!r}") from exc
            if not isinstance(ticks, int) or isinstance(ticks, bool) or ticks < 0:
                raise MalformedPayloadError(f"phase duration must be a non-negative integer")
            phase_plan.append((phase, ticks))

        try:
            feedback_source = vc.FeedbackSourceMode(doc.get("feedback_source", "external_observer"))
        except ValueError as exc:
            raise MalformedPayloadError(
                f"unknown feedback_source {doc['feedback_source']!r}"
            ) from exc

        recipients = doc.get("recipients")
        if recipients is None:
            recipients = list(range(n_seats))
        if not isinstance(recipients, (list, tuple)) or not all(
            isinstance(r, int) and not isinstance(r, bool) for r in recipients
        ):
            raise MalformedPayloadError("recipients must be a list of seat indices")

        dot_visibility = doc.get("dot_visibility", "private")
        if dot_visibility not in ("private", "public"):
            raise MalformedPayloadError(f"dot_visibility must be private or public")

        return cls(
            mode=mode,
            n_seats=n_seats,
            tick_hz=doc.get("tick_hz", 10),
            phase_plan=tuple(phase_plan),
            feedback_source=feedback_source,
            recipients=tuple(sorted(set(recipients))),
            rng_seed=doc.get("rng_seed", 0),
            half_life_ticks=doc.get("half_life_ticks", 300),
            cell_count=doc.get("cell_count", 64),
            activity_floor=doc.get("activity_floor", 0.02),
            brightness_floor=doc.get("brightness_floor", 0.2),
            speaking_threshold=doc.get("speaking_threshold", 0.5),
            show_idle_feedback=bool(doc.get("show_idle_feedback", False)),
            dot_visibility=dot_visibility,
            show_context_to_evaluator=bool(doc.get("show_context_to_evaluator", True)),
        )


def load_config_file(path: str | os.PathLike) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return SessionConfig.from_dict(json.load(fh))


def validate_config(config: SessionConfig) -> ValidationResult:
    """Collect config violations instead of failing on the first one."""
    violations = []
    if config.n_seats < 2:
        violations.append(f"n_seats must be at least 2, got {config.n_seats}")
    if config.tick_hz < 1:
        violations.append(f"tick_hz must be at least 1, got {config.tick_hz}")

    if not config.phase_plan:
        violations.append("empty phase plan")
    else:
        positions = []
        for phase, ticks in config.phase_plan:
            if phase not in _PLANNABLE_PHASES:
                violations.append(f"phase plan may not schedule {phase.value}")
                continue
            positions.append(PHASE_CHAIN.index(phase))
        if positions != sorted(set(positions)):
            violations.append("phase plan must follow the phase chain without repeats")
        if config.mode in (SessionMode.TIC, SessionMode.VC_FEEDBACK):
            first = config.phase_plan[0][0]
            if first is not SessionPhase.PRE_INTERVENTION:
                violations.append(
                    f"{config.mode.value} sessions must start with a pre-intervention baseline"
                )

    out_of_range = [r for r in config.recipients if not 0 <= r < config.n_seats]
    if out_of_range:
        violations.append(f"recipients outside seat range: {sorted(out_of_range)}")

    needs_cycle = config.mode is SessionMode.TIC or (
        config.mode is SessionMode.VC_FEEDBACK
        and config.feedback_source is not vc.FeedbackSourceMode.EXTERNAL_OBSERVER
    )
    if needs_cycle and config.n_seats >= 2 and not tic.has_valid_assignment(config.n_seats):
        violations.append(f"no valid assignment exists for {config.n_seats} seats")

    if not 0 <= config.rng_seed < 2**64:
        violations.append("rng_seed must be an unsigned 64-bit integer")
    if config.half_life_ticks < 1:
        violations.append("half_life_ticks must be positive")
    if config.cell_count < 1:
        violations.append("cell_count must be positive")
    if not 0 <= config.activity_floor < 1:
        violations.append("activity_floor must be in [0, 1)")
    if not 0 <= config.brightness_floor < 1:
        violations.append("brightness_floor must be in [0, 1)")
    if not 0 <= config.speaking_threshold <= 1:
        violations.append("speaking_threshold must be in [0, 1]")

    if violations:
        return ValidationResult.failed(*violations)
    return ValidationResult.passed()


@dataclass(frozen=True)
class ParticipantProfile:
    seat: SeatId
    display_name: str
    role_expected_share: float | None = None

    def to_dict(self) -> dict:
        return {
            "seat": self.seat,
            "display_name": self.display_name,
            "role_expected_share": self.role_expected_share,
        }


EngineState = reflect.TerritoryState | routing.RoutingState | tic.TicState | vc.VcState


@dataclass(frozen=True)
class SessionState:
    config: SessionConfig
    phase: SessionPhase
    tick: int
    ticks_in_phase: int
    last_seq: int
    profiles: tuple[ParticipantProfile, ...]
    sampled: frozenset[SeatId]  # seats that reported activity this tick
    engine: EngineState

    def profile_for(self, seat: SeatId) -> ParticipantProfile | None:
        for profile in self.profiles:
            if profile.seat == seat:
                return profile
        return None

    def expected_shares(self) -> dict[SeatId, float]:
        return {
            p.seat: p.role_expected_share
            for p in self.profiles
            if p.role_expected_share is not None
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "phase": self.phase.value,
            "tick": self.tick,
            "ticks_in_phase": self.ticks_in_phase,
            "last_seq": self.last_seq,
            "profiles": [p.to_dict() for p in self.profiles],
            "sampled": sorted(self.sampled),
            "engine": {"type": type(self.engine).__name__, **self.engine.to_dict()},
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_dict())


def initial_state(config: SessionConfig) -> SessionState:
    """State after the setup event (seq 1): Lobby, tick 0, engine at rest."""
    n = config.n_seats
    engine: EngineState
    if config.mode is SessionMode.REFLECT:
        engine = reflect.TerritoryState.initial(n)
    elif config.mode is SessionMode.SIMULATION:
        engine = routing.RoutingState.initial(n)
    elif config.mode is SessionMode.TIC:
        engine = tic.TicState.initial(n, config.rng_seed, config.brightness_floor)
    else:
        sources = vc.assign_feedback_targets(
            n, config.recipients, config.feedback_source, config.rng_seed
        )
        engine = vc.VcState.initial(config.recipients, sources)
    return SessionState(
        config=config,
        phase=SessionPhase.LOBBY,
        tick=0,
        ticks_in_phase=0,
        last_seq=1,
        profiles=(),
        sampled=frozenset(),
        engine=engine,
    )


def setup_event(config: SessionConfig) -> EventRecord:
    return EventRecord(seq=1, tick=0, kind="configure", payload={"config": config.to_dict()})


def advance_phase(state: SessionState) -> SessionState:
    """Move one step along the phase chain; entering the intervention turns
    the feedback apparatus on."""
    if state.phase is SessionPhase.CLOSED:
        raise AlreadyClosedError("session is already closed")
    new_phase = PHASE_CHAIN[PHASE_CHAIN.index(state.phase) + 1]
    engine = state.engine
    if new_phase is SessionPhase.INTERVENTION and isinstance(engine, routing.RoutingState):
        engine = routing.set_powered(engine, True)
    return replace(state, phase=new_phase, ticks_in_phase=0, engine=engine)


def plan_action(state: SessionState) -> str:
    """What the session clock should do next: "hold", "advance", or "finish".

    The configured plan assigns tick budgets to phases; phases without a
    budget are skipped toward the next planned one. Leaving the lobby and
    closing the session are explicit operator actions, never clock actions.
    """
    if state.phase in (SessionPhase.LOBBY, SessionPhase.CLOSED):
        return "hold"
    planned = [phase for phase, _ in state.config.phase_plan]
    if state.phase in planned:
        index = planned.index(state.phase)
        if state.ticks_in_phase < state.config.phase_plan[index][1]:
            return "hold"
        if index + 1 < len(planned):
            return "advance"
        return "finish"
    position = PHASE_CHAIN.index(state.phase)
    if any(PHASE_CHAIN.index(phase) > position for phase in planned):
        return "advance"
    return "finish"


def _require(payload: Mapping, key: str):
    if key not in payload:
        raise MalformedPayloadError(f"payload missing required field {key!r}")
    return payload[key]


def _require_number(payload: Mapping, key: str) -> float:
    value = _require(payload, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedPayloadError(f"field {key!r} must be a number")
    return float(value)


def _require_int(payload: Mapping, key: str) -> int:
    value = _require(payload, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedPayloadError(f"field {key!r} must be an integer")
    return value


def apply_event(state: SessionState, event: EventRecord) -> SessionState:
    """Apply one event; identical inputs always produce identical states."""
    if event.seq != state.last_seq + 1:
        raise SequenceGapError(
            f"event seq {event.seq} does not follow last_seq {state.last_seq}"
        )
    if event.kind not in EVENT_KINDS:
        raise UnknownKindError(f"unknown event kind {event.kind!r}")
    handler = _HANDLERS[event.kind]
    new_state = handler(state, event.payload)
    return replace(new_state, last_seq=event.seq)


def _apply_configure(state: SessionState, payload: Mapping) -> SessionState:
    raise MalformedPayloadError("configure is only valid as the first event of a session")


def _apply_join(state: SessionState, payload: Mapping) -> SessionState:
    if state.phase is not SessionPhase.LOBBY:
        raise PhaseViolationError(f"join not permitted during {state.phase.value}")
    seat = check_seat(_require_int(payload, "seat"), state.config.n_seats)
    if state.profile_for(seat) is not None:
        raise MalformedPayloadError(f"seat {seat} is already occupied")
    share = payload.get("role_expected_share")
    if share is not None:
        if isinstance(share, bool) or not isinstance(share, (int, float)) or not 0 <= share <= 1:
            raise MalformedPayloadError("role_expected_share must be a fraction in [0, 1]")
        share = float(share)
    profile = ParticipantProfile(
        seat=seat,
        display_name=str(payload.get("display_name", f"seat-{seat}")),
        role_expected_share=share,
    )
    profiles = tuple(sorted(state.profiles + (profile,), key=lambda p: p.seat))
    if len(profiles) == state.config.n_seats and all(
        p.role_expected_share is not None for p in profiles
    ):
        total = sum(p.role_expected_share for p in profiles)
        if total > 1.0 + ROLE_SHARE_TOLERANCE:
            raise MalformedPayloadError(f"declared role shares sum to {total:.3f} > 1")
    return replace(state, profiles=profiles)


def _apply_start_phase(state: SessionState, payload: Mapping) -> SessionState:
    new_state = advance_phase(state)
    expected = payload.get("phase")
    if expected is not None and expected != new_state.phase.value:
        raise MalformedPayloadError(
            f"start_phase expected {expected!r} but the chain yields {new_state.phase.value!r}"
        )
    return new_state


def _apply_tick(state: SessionState, payload: Mapping) -> SessionState:
    if state.phase is SessionPhase.CLOSED:
        raise PhaseViolationError("tick after session close")
    engine = state.engine
    if isinstance(engine, reflect.TerritoryState):
        # Seats that reported activity this tick already folded their level;
        # the rest fold silence so territory decays at one step per tick.
        params = state.config.reflect_params()
        smoothed = tuple(
            s if seat in state.sampled else reflect.ema_step(s, 0.0, params.alpha)
            for seat, s in enumerate(engine.smoothed)
        )
        engine = reflect.TerritoryState(
            smoothed=smoothed, cells=tuple(reflect.allocate_territory(smoothed, params))
        )
    return replace(
        state,
        tick=state.tick + 1,
        ticks_in_phase=state.ticks_in_phase + 1,
        sampled=frozenset(),
        engine=engine,
    )


def _apply_activity_sample(state: SessionState, payload: Mapping) -> SessionState:
    if state.phase not in (SessionPhase.PRE_INTERVENTION, SessionPhase.INTERVENTION):
        raise PhaseViolationError(f"activity_sample not permitted during {state.phase.value}")
    seat = check_seat(_require_int(payload, "seat"), state.config.n_seats)
    level = _require_number(payload, "level")
    if not 0.0 <= level <= 1.0:
        raise MalformedPayloadError(f"activity level {level} outside [0, 1]")
    if "tick" in payload and payload["tick"] != state.tick:
        raise MalformedPayloadError(
            f"stale activity sample for tick {payload['tick']} at tick {state.tick}"
        )
    if seat in state.sampled:
        raise MalformedPayloadError(f"duplicate activity sample for seat {seat} this tick")
    engine = state.engine
    if isinstance(engine, reflect.TerritoryState):
        params = state.config.reflect_params()
        smoothed = list(engine.smoothed)
        smoothed[seat] = reflect.ema_step(smoothed[seat], level, params.alpha)
        engine = reflect.TerritoryState(
            smoothed=tuple(smoothed), cells=tuple(reflect.allocate_territory(smoothed, params))
        )
    return replace(state, sampled=state.sampled | {seat}, engine=engine)


def _apply_set_listen(state: SessionState, payload: Mapping) -> SessionState:
    if not isinstance(state.engine, routing.RoutingState):
        raise MalformedPayloadError(f"set_listen not valid in {state.config.mode.value} mode")
    if state.phase is not SessionPhase.INTERVENTION:
        raise PhaseViolationError(f"set_listen not permitted during {state.phase.value}")
    seat = _require_int(payload, "seat")
    channel = _require_int(payload, "channel")
    return replace(state, engine=routing.set_listen(state.engine, seat, channel))


def _apply_pedal_input(state: SessionState, payload: Mapping) -> SessionState:
    if not isinstance(state.engine, tic.TicState):
        raise MalformedPayloadError(f"pedal_input not valid in {state.config.mode.value} mode")
    if state.phase is not SessionPhase.INTERVENTION:
        raise PhaseViolationError(f"pedal_input not permitted during {state.phase.value}")
    seat = check_seat(_require_int(payload, "seat"), state.config.n_seats)
    pedal = tic.PedalInput(seat=seat, position=_require_number(payload, "position"))
    balls = tic.apply_pedal(state.engine.balls, state.engine.cycle, pedal)
    return replace(state, engine=tic.TicState(cycle=state.engine.cycle, balls=balls))


def _apply_slider_input(state: SessionState, payload: Mapping) -> SessionState:
    if not isinstance(state.engine, vc.VcState):
        raise MalformedPayloadError(f"slider_input not valid in {state.config.mode.value} mode")
    if state.phase is not SessionPhase.INTERVENTION:
        raise PhaseViolationError(f"slider_input not permitted during {state.phase.value}")
    source_id = str(_require(payload, "source_id"))
    target = check_seat(_require_int(payload, "target"), state.config.n_seats)
    try:
        axis = vc.SliderAxis(_require(payload, "axis"))
    except ValueError as exc:
        raise MalformedPayloadError(f"unknown slider axis {payload.get('axis')!r}") from exc
    slider = vc.SliderInput(
        source_id=source_id, target=target, axis=axis, value=_require_number(payload, "value")
    )
    engine = vc.apply_slider(
        state.engine, state.engine.source_registry(), slider, state.config.recipients
    )
    return replace(state, engine=engine)


def _apply_annotation(state: SessionState, payload: Mapping) -> SessionState:
    if state.phase is SessionPhase.CLOSED:
        raise PhaseViolationError("annotation after session close")
    coded = CodedValue.from_dict(dict(payload))
    check_seat(coded.seat, state.config.n_seats)
    return state  # recorded in the log and sidecar; no state effect


def _apply_end_session(state: SessionState, payload: Mapping) -> SessionState:
    if state.phase is SessionPhase.CLOSED:
        raise AlreadyClosedError("session is already closed")
    return replace(state, phase=SessionPhase.CLOSED, ticks_in_phase=0)


_HANDLERS = {
    "configure": _apply_configure,
    "join": _apply_join,
    "start_phase": _apply_start_phase,
    "tick": _apply_tick,
    "activity_sample": _apply_activity_sample,
    "set_listen": _apply_set_listen,
    "pedal_input": _apply_pedal_input,
    "slider_input": _apply_slider_input,
    "annotation": _apply_annotation,
    "end_session": _apply_end_session,
}
