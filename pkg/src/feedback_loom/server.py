"""Session orchestration over a bidirectional message channel.

Inbound messages are validated, sequenced into the session's single total
order, applied to the event-sourced state, persisted, and answered with
targeted outbound updates. Routing enforces the information-flow rules:
speakers never see listener counts, and private dots go only to their
target and controlling source.

The wire protocol is newline-delimited JSON over any reliable byte stream;
the WebSocket binding (one JSON message per text frame) is the reference
transport for the browser UI.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from . import routing, vc
from .core import (
    PHASE_CHAIN,
    SessionConfig,
    SessionMode,
    SessionPhase,
    SessionState,
    apply_event,
    initial_state,
    plan_action,
    setup_event,
    validate_config,
)
from .errors import (
    FeedbackLoomError,
    MalformedPayloadError,
    SequenceGapError,
    UnauthorizedSourceError,
)
from .eventlog import EVENT_KINDS, CodedValue, EventRecord, LogWriter, write_annotations

logger = logging.getLogger(__name__)

MESSAGE_TYPES = frozenset(
    {
        "join",
        "configure",
        "start_phase",
        "tick",
        "activity_sample",
        "set_listen",
        "pedal_input",
        "slider_input",
        "annotation",
        "state_update",
        "dot_update",
        "error",
        "end_session",
    }
)

OUTBOUND_TYPES = frozenset({"state_update", "dot_update", "error"})

# Ticks between participation-context updates sent to evaluators.
CONTEXT_INTERVAL = 50


class RoleKind(str, Enum):
    PARTICIPANT = "participant"
    OBSERVER = "observer"
    CODER = "coder"
    MONITOR = "monitor"


@dataclass(frozen=True)
class ClientRole:
    kind: RoleKind
    seat: int | None = None
    source_id: str | None = None


@dataclass(frozen=True)
class Audience:
    """Outbound routing selector, resolved against the client registry."""

    scope: str  # all | participants | participant | observers | monitors | coders | source
    seat: int | None = None
    source_id: str | None = None


@dataclass
class HostResult:
    event: EventRecord | None
    error: dict | None
    outbound: list[tuple[str, dict]] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.event is not None


def _feedback_live(state: SessionState) -> bool:
    if state.phase is SessionPhase.INTERVENTION:
        return True
    return state.config.show_idle_feedback and state.phase is SessionPhase.PRE_INTERVENTION


def _territory_message(state: SessionState) -> tuple[Audience, str, dict]:
    return (
        Audience("participants"),
        "state_update",
        {"event": "territory", "cells": list(state.engine.cells), "tick": state.tick},
    )


def _balls_message(state: SessionState) -> tuple[Audience, str, dict]:
    balls = state.engine.balls
    return (
        Audience("participants"),
        "state_update",
        {
            "event": "balls",
            "sizes": list(balls.sizes),
            "brightness": list(balls.brightness),
            "tick": state.tick,
        },
    )


def _routing_monitor_message(state: SessionState) -> tuple[Audience, str, dict]:
    engine = state.engine
    return (
        Audience("monitors"),
        "state_update",
        {
            "event": "routing",
            "listen": list(engine.listen),
            "powered": list(engine.powered),
            "mutual_pairs": [list(p) for p in sorted(routing.mutual_pairs(engine))],
            "tick": state.tick,
        },
    )


def _speaker_view_message(state: SessionState, seat: int) -> tuple[Audience, str, dict]:
    view = routing.speaker_view(state.engine, seat)
    return (
        Audience("participant", seat=seat),
        "state_update",
        {"event": "speaker_view", **view.to_payload()},
    )


def _dot_messages(state: SessionState, target: int) -> list[tuple[Audience, str, dict]]:
    dot = state.engine.dot_of(target)
    payload = {"seat": target, **dot.to_dict()}
    if state.config.dot_visibility == "public":
        return [(Audience("all"), "dot_update", payload)]
    out = [(Audience("participant", seat=target), "dot_update", payload)]
    return out


def _intervention_snapshot(state: SessionState) -> list[tuple[Audience, str, dict]]:
    """Visual state pushed when feedback outputs go live."""
    mode = state.config.mode
    if mode is SessionMode.REFLECT:
        return [_territory_message(state)]
    if mode is SessionMode.TIC:
        return [_balls_message(state)]
    if mode is SessionMode.SIMULATION:
        out = [_speaker_view_message(state, seat) for seat in range(state.config.n_seats)]
        out.append(_routing_monitor_message(state))
        return out
    out = []
    for seat, dot in state.engine.dots:
        payload = {"seat": seat, **dot.to_dict()}
        if state.config.dot_visibility == "public":
            out.append((Audience("all"), "dot_update", payload))
        else:
            out.append((Audience("participant", seat=seat), "dot_update", payload))
    if state.config.dot_visibility != "public":
        # each controlling source sees its targets' dots from the start
        dots = dict(state.engine.dots)
        for source in state.engine.sources:
            for target in sorted(source.targets):
                if target in dots:
                    payload = {"seat": target, **dots[target].to_dict()}
                    out.append(
                        (Audience("source", source_id=source.source_id), "dot_update", payload)
                    )
    return out


def route_outbound(state: SessionState, event: EventRecord) -> list[tuple[Audience, str, dict]]:
    """Targeted updates triggered by an already-applied event.

    Participants in a routing session receive only their own speaker view;
    listener sets and the full routing table go to monitors alone. Private
    dots go to the target's self panel and the controlling source.
    """
    kind = event.kind
    config = state.config

    if kind == "configure":
        return [
            (
                Audience("all"),
                "state_update",
                {
                    "event": "configured",
                    "mode": config.mode.value,
                    "n_seats": config.n_seats,
                    "phase": state.phase.value,
                },
            )
        ]

    if kind == "join":
        return [
            (
                Audience("all"),
                "state_update",
                {
                    "event": "join",
                    "seat": event.payload["seat"],
                    "display_name": event.payload.get("display_name", ""),
                    "phase": state.phase.value,
                },
            )
        ]

    if kind == "start_phase":
        out = [
            (
                Audience("all"),
                "state_update",
                {"event": "phase", "phase": state.phase.value, "tick": state.tick},
            )
        ]
        if _feedback_live(state):
            out.extend(_intervention_snapshot(state))
        return out

    if kind == "tick":
        out = []
        if config.mode is SessionMode.REFLECT and _feedback_live(state):
            out.append(_territory_message(state))
        if config.mode is SessionMode.SIMULATION and "heard" in event.payload:
            out.append(
                (
                    Audience("monitors"),
                    "state_update",
                    {"event": "heard", "edges": event.payload["heard"], "tick": state.tick},
                )
            )
        return out

    if kind == "activity_sample":
        out = [
            (
                Audience("monitors"),
                "state_update",
                {
                    "event": "activity",
                    "seat": event.payload["seat"],
                    "level": event.payload["level"],
                    "tick": state.tick,
                },
            )
        ]
        if config.mode is SessionMode.REFLECT and _feedback_live(state):
            out.append(_territory_message(state))
        return out

    if kind == "set_listen":
        return [
            _speaker_view_message(state, event.payload["seat"]),
            _routing_monitor_message(state),
        ]

    if kind == "pedal_input":
        return [_balls_message(state)]

    if kind == "slider_input":
        out = _dot_messages(state, event.payload["target"])
        if config.dot_visibility != "public":
            out.append(
                (
                    Audience("source", source_id=event.payload["source_id"]),
                    "dot_update",
                    out[0][2],
                )
            )
        return out

    if kind == "end_session":
        return [
            (
                Audience("all"),
                "state_update",
                {"event": "phase", "phase": state.phase.value, "tick": state.tick},
            )
        ]

    return []  # annotation


# Inbound types each role may send. The driver (server internals, simulator)
# bypasses this table.
_ROLE_PERMISSIONS = {
    RoleKind.PARTICIPANT: {"activity_sample", "set_listen", "pedal_input", "slider_input"},
    RoleKind.OBSERVER: {"start_phase", "end_session", "slider_input", "annotation"},
    RoleKind.CODER: {"annotation"},
    RoleKind.MONITOR: set(),
}


class SessionHost:
    """Transport-agnostic single-session pipeline.

    All events of the session pass through handle_message in one total
    order; transports only parse frames and fan out the returned messages.
    """

    def __init__(
        self,
        session_id: str,
        log_path: str | Path | None = None,
        annotations_path: str | Path | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self.session_id = session_id
        self.state: SessionState | None = None
        self.clients: dict[str, ClientRole] = {}
        self._writer = LogWriter(log_path) if log_path else None
        self._annotations_path = annotations_path
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._events: list[EventRecord] = []
        self._window_counts: list[int] = []

    @property
    def events(self) -> list[EventRecord]:
        return self._events

    def close(self) -> None:
        if self._writer:
            self._writer.close()

    # -- client registry -------------------------------------------------

    def attach_client(self, client_id: str, role: ClientRole) -> None:
        existing = self.clients.get(client_id)
        if existing is not None and existing != role:
            raise MalformedPayloadError(
                f"connection already registered as {existing.kind.value}"
            )
        if role.kind is RoleKind.MONITOR and any(
            other.kind is RoleKind.PARTICIPANT and cid == client_id
            for cid, other in self.clients.items()
        ):
            raise MalformedPayloadError("monitor may not share a participant identity")
        self.clients[client_id] = role

    def detach_client(self, client_id: str) -> None:
        self.clients.pop(client_id, None)

    def resolve_audience(self, audience: Audience) -> list[str]:
        """Client ids matching the selector, in stable order."""
        out = []
        for cid in sorted(self.clients):
            role = self.clients[cid]
            if audience.scope == "all":
                out.append(cid)
            elif audience.scope == "participants" and role.kind is RoleKind.PARTICIPANT:
                out.append(cid)
            elif (
                audience.scope == "participant"
                and role.kind is RoleKind.PARTICIPANT
                and role.seat == audience.seat
            ):
                out.append(cid)
            elif audience.scope == "observers" and role.kind is RoleKind.OBSERVER:
                out.append(cid)
            elif audience.scope == "monitors" and role.kind is RoleKind.MONITOR:
                out.append(cid)
            elif audience.scope == "coders" and role.kind is RoleKind.CODER:
                out.append(cid)
            elif audience.scope == "source" and self._is_source(role, audience.source_id):
                out.append(cid)
        return out

    def _is_source(self, role: ClientRole, source_id: str | None) -> bool:
        if source_id is None:
            return False
        if role.kind is RoleKind.OBSERVER:
            return role.source_id == source_id
        if role.kind is RoleKind.PARTICIPANT and isinstance(self.state.engine, vc.VcState):
            source = self.state.engine.source_registry().get(source_id)
            return source is not None and source.seat == role.seat
        return False

    # -- message pipeline -------------------------------------------------

    def handle_message(self, msg: dict, sender: str | None = None) -> HostResult:
        """Validate, sequence, apply, persist, and route one inbound message.

        ``sender=None`` is the driver: the server's own clock or the
        simulator, exempt from role checks.
        """
        try:
            msg_type, payload = self._parse(msg)
        except FeedbackLoomError as exc:
            return self._reject(sender, msg.get("type", "?"), exc)

        try:
            if msg_type == "configure":
                return self._handle_configure(payload, sender)
            if self.state is None:
                raise MalformedPayloadError("session is not configured")
            if msg_type == "join":
                return self._handle_join(payload, sender)
            self._authorize(msg_type, payload, sender)
            if msg_type == "tick":
                payload = self._tick_payload()
            elif msg_type == "activity_sample":
                payload = dict(payload)
                payload.setdefault("tick", self.state.tick)
            elif msg_type == "start_phase":
                # Record the entered phase so logs carry explicit boundaries.
                payload = dict(payload)
                payload.setdefault("phase", self._next_phase().value)
            event = EventRecord(
                seq=self.state.last_seq + 1,
                tick=self.state.tick,
                kind=msg_type,
                payload=payload,
            )
            new_state = apply_event(self.state, event)
        except SequenceGapError:
            raise  # server sequencing bug: fail loudly, never mask
        except FeedbackLoomError as exc:
            return self._reject(sender, msg_type, exc)

        self.state = new_state
        self._persist(event)
        outbound = self._fan_out(route_outbound(self.state, event), event.seq)
        outbound.extend(self._context_updates(event))
        return HostResult(event=event, error=None, outbound=outbound)

    def _parse(self, msg: dict) -> tuple[str, dict]:
        if not isinstance(msg, dict):
            raise MalformedPayloadError("message must be a JSON object")
        msg_type = msg.get("type")
        if msg_type not in MESSAGE_TYPES:
            raise MalformedPayloadError(f"unknown message type {msg_type!r}")
        if msg_type in OUTBOUND_TYPES:
            raise MalformedPayloadError(f"{msg_type} is outbound-only")
        if msg.get("session_id") != self.session_id:
            raise MalformedPayloadError(
                f"message for session {msg.get('session_id')!r} reached {self.session_id!r}"
            )
        payload = msg.get("payload", {})
        if not isinstance(payload, dict):
            raise MalformedPayloadError("payload must be an object")
        return msg_type, payload

    def _handle_configure(self, payload: dict, sender: str | None) -> HostResult:
        if self.state is not None:
            return self._reject(
                sender, "configure", MalformedPayloadError("session already configured")
            )
        try:
            config = SessionConfig.from_dict(payload.get("config", {}))
            check = validate_config(config)
            if not check.ok:
                raise MalformedPayloadError("invalid config: " + "; ".join(check.violations))
            state = initial_state(config)
        except FeedbackLoomError as exc:
            return self._reject(sender, "configure", exc)
        self.state = state
        self._window_counts = [0] * config.n_seats
        event = setup_event(config)
        self._persist(event)
        routed = route_outbound(self.state, event)
        outbound = self._fan_out(routed, event.seq)
        if sender is not None and all(cid != sender for cid, _ in outbound):
            # the configuring connection has no role yet; ack it directly
            outbound.append((sender, self._wrap("state_update", routed[0][2], seq=event.seq)))
        return HostResult(event=event, error=None, outbound=outbound)

    def _handle_join(self, payload: dict, sender: str | None) -> HostResult:
        role_name = payload.get("role", "participant")
        try:
            kind = RoleKind(role_name)
        except ValueError:
            return self._reject(
                sender, "join", MalformedPayloadError(f"unknown role {role_name!r}")
            )

        if kind is not RoleKind.PARTICIPANT:
            try:
                role = self._non_participant_role(kind, payload)
                if sender is not None:
                    self.attach_client(sender, role)
            except FeedbackLoomError as exc:
                return self._reject(sender, "join", exc)
            ack = self._wrap(
                "state_update",
                {"event": "joined", "role": kind.value, "phase": self.state.phase.value},
                seq=self.state.last_seq,
            )
            outbound = [(sender, ack)] if sender is not None else []
            return HostResult(event=None, error=None, outbound=outbound)

        event = EventRecord(
            seq=self.state.last_seq + 1,
            tick=self.state.tick,
            kind="join",
            payload={k: v for k, v in payload.items() if k != "role"},
        )
        try:
            new_state = apply_event(self.state, event)
            if sender is not None:
                self.attach_client(sender, ClientRole(RoleKind.PARTICIPANT, seat=payload.get("seat")))
        except SequenceGapError:
            raise
        except FeedbackLoomError as exc:
            return self._reject(sender, "join", exc)
        self.state = new_state
        self._persist(event)
        outbound = self._fan_out(route_outbound(self.state, event), event.seq)
        return HostResult(event=event, error=None, outbound=outbound)

    def _non_participant_role(self, kind: RoleKind, payload: dict) -> ClientRole:
        if kind is RoleKind.OBSERVER:
            source_id = payload.get("source_id")
            if source_id is None and isinstance(self.state.engine, vc.VcState):
                registry = self.state.engine.source_registry()
                if vc.EXTERNAL_SOURCE_ID in registry:
                    source_id = vc.EXTERNAL_SOURCE_ID
            return ClientRole(RoleKind.OBSERVER, source_id=source_id)
        return ClientRole(kind)

    def _authorize(self, msg_type: str, payload: dict, sender: str | None) -> None:
        if sender is None:
            return
        role = self.clients.get(sender)
        if role is None:
            raise UnauthorizedSourceError("connection has not joined the session")
        if msg_type not in _ROLE_PERMISSIONS[role.kind]:
            raise UnauthorizedSourceError(
                f"role {role.kind.value} may not send {msg_type}"
            )
        if role.kind is RoleKind.PARTICIPANT:
            if msg_type in ("activity_sample", "set_listen", "pedal_input"):
                if payload.get("seat") != role.seat:
                    raise UnauthorizedSourceError(
                        f"seat {role.seat} may not act for seat {payload.get('seat')}"
                    )
            elif msg_type == "slider_input":
                source = None
                if isinstance(self.state.engine, vc.VcState):
                    source = self.state.engine.source_registry().get(payload.get("source_id"))
                if source is None or source.seat != role.seat:
                    raise UnauthorizedSourceError(
                        f"seat {role.seat} does not control source {payload.get('source_id')!r}"
                    )
        elif role.kind is RoleKind.OBSERVER and msg_type == "slider_input":
            if payload.get("source_id") != role.source_id:
                raise UnauthorizedSourceError(
                    f"observer is bound to source {role.source_id!r}"
                )

    def _next_phase(self) -> SessionPhase:
        index = PHASE_CHAIN.index(self.state.phase)
        return PHASE_CHAIN[min(index + 1, len(PHASE_CHAIN) - 1)]

    def _tick_payload(self) -> dict:
        """Tick payloads carry the who-hears-whom edges while the switchboxes
        are powered; the edges are a routing fact, not audio."""
        state = self.state
        if isinstance(state.engine, routing.RoutingState) and any(state.engine.powered):
            return {"heard": [[seat, ch] for seat, ch in enumerate(state.engine.listen)]}
        return {}

    def _context_updates(self, event: EventRecord) -> list[tuple[str, dict]]:
        """Role-relative participation context pushed to evaluator sources."""
        state = self.state
        if event.kind == "activity_sample":
            if event.payload["level"] > state.config.speaking_threshold:
                self._window_counts[event.payload["seat"]] += 1
            return []
        if event.kind != "tick" or not isinstance(state.engine, vc.VcState):
            return []
        if not state.config.show_context_to_evaluator:
            return []
        if state.phase is not SessionPhase.INTERVENTION:
            return []
        if state.tick == 0 or state.tick % CONTEXT_INTERVAL != 0:
            return []
        total = sum(self._window_counts)
        expected = state.expected_shares()
        out = []
        for source in state.engine.sources:
            if source.kind is not vc.SourceKind.PARTICIPANT_EVALUATOR:
                continue
            for target in sorted(source.targets):
                share = self._window_counts[target] / total if total else 0.0
                relative = share - expected.get(target, 1.0 / state.config.n_seats)
                message = self._wrap(
                    "state_update",
                    {
                        "event": "participation_context",
                        "target": target,
                        "relative_participation": relative,
                        "tick": state.tick,
                    },
                    seq=state.last_seq,
                )
                for cid in self.resolve_audience(
                    Audience("source", source_id=source.source_id)
                ):
                    out.append((cid, message))
        self._window_counts = [0] * state.config.n_seats
        return out

    def _persist(self, event: EventRecord) -> None:
        self._events.append(event)
        if self._writer:
            self._writer.append(event)
        if event.kind == "annotation" and self._annotations_path:
            write_annotations(self._annotations_path, [CodedValue.from_dict(event.payload)])

    def _fan_out(
        self, routed: Iterable[tuple[Audience, str, dict]], seq: int
    ) -> list[tuple[str, dict]]:
        out = []
        for audience, msg_type, payload in routed:
            message = self._wrap(msg_type, payload, seq=seq)
            for cid in self.resolve_audience(audience):
                out.append((cid, message))
        return out

    def _wrap(self, msg_type: str, payload: dict, seq: int) -> dict:
        return {
            "type": msg_type,
            "session_id": self.session_id,
            "seq": seq,
            "ts": self._clock(),
            "payload": payload,
        }

    def _reject(self, sender: str | None, msg_type: str, exc: FeedbackLoomError) -> HostResult:
        error = self._wrap(
            "error",
            {"code": exc.code, "reason": str(exc), "request_type": msg_type},
            seq=0,
        )
        outbound = [(sender, error)] if sender is not None else []
        return HostResult(event=None, error=error, outbound=outbound)


class SessionServer:
    """Multi-session broker shared by the TCP and WebSocket transports."""

    def __init__(self, log_dir: str | Path, tick_interval: float | None = None):
        self.log_dir = Path(log_dir)
        self.tick_interval = tick_interval
        self.hosts: dict[str, SessionHost] = {}
        self._senders: dict[str, Callable[[str], "asyncio.Future | None"]] = {}
        self._clock_tasks: dict[str, asyncio.Task] = {}

    def register_connection(self, client_id: str, send: Callable[[str], None]) -> None:
        self._senders[client_id] = send

    def drop_connection(self, client_id: str) -> None:
        self._senders.pop(client_id, None)
        for host in self.hosts.values():
            host.detach_client(client_id)

    def host_for(self, session_id: str) -> SessionHost:
        if session_id not in self.hosts:
            self.hosts[session_id] = SessionHost(
                session_id,
                log_path=self.log_dir / f"{session_id}.jsonl",
                annotations_path=self.log_dir / f"{session_id}.annotations.jsonl",
            )
        return self.hosts[session_id]

    def handle_json(self, client_id: str | None, doc: dict) -> list[tuple[str, dict]]:
        session_id = doc.get("session_id") if isinstance(doc, dict) else None
        if not isinstance(session_id, str) or not session_id:
            error = {
                "type": "error",
                "session_id": session_id or "",
                "seq": 0,
                "ts": int(time.time() * 1000),
                "payload": {"code": "malformed_payload", "reason": "missing session_id"},
            }
            return [(client_id, error)] if client_id else []
        host = self.host_for(session_id)
        result = host.handle_message(doc, sender=client_id)
        if result.accepted and result.event.kind == "configure":
            self._ensure_clock(session_id)
        return result.outbound

    def _ensure_clock(self, session_id: str) -> None:
        try:
            loop = asyncio.get_running_loop()
        except RuntimeError:
            return  # no loop: caller drives ticks explicitly
        if session_id not in self._clock_tasks:
            self._clock_tasks[session_id] = loop.create_task(self._run_clock(session_id))

    async def _run_clock(self, session_id: str) -> None:
        host = self.hosts[session_id]
        while True:
            state = host.state
            if state is None or state.phase is SessionPhase.CLOSED:
                break
            interval = (
                self.tick_interval
                if self.tick_interval is not None
                else 1.0 / state.config.tick_hz
            )
            if state.phase is SessionPhase.LOBBY:
                await asyncio.sleep(max(interval, 0.01))
                continue
            await self._drive(host, {"type": "tick"})
            while plan_action(host.state) == "advance":
                await self._drive(host, {"type": "start_phase"})
            await asyncio.sleep(interval)

    async def _drive(self, host: SessionHost, stub: dict) -> None:
        msg = {**stub, "session_id": host.session_id, "payload": stub.get("payload", {})}
        result = host.handle_message(msg, sender=None)
        await self._send_all(result.outbound)

    async def _send_all(self, outbound: list[tuple[str, dict]]) -> None:
        for client_id, message in outbound:
            send = self._senders.get(client_id)
            if send is None:
                continue
            try:
                await send(json.dumps(message))
            except Exception:  # connection died mid-send; presence cleanup follows
                logger.exception("send to %s failed", client_id)

    async def serve_tcp(self, host: str, port: int) -> "asyncio.AbstractServer":
        counter = iter(range(1, 1 << 62))

        async def on_connect(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            client_id = f"tcp-{next(counter)}"

            async def send(text: str) -> None:
                writer.write(text.encode("utf-8") + b"\n")
                await writer.drain()

            self.register_connection(client_id, send)
            try:
                while True:
                    line = await reader.readline()
                    if not line:
                        break
                    try:
                        doc = json.loads(line)
                    except json.JSONDecodeError:
                        await send(
                            json.dumps(
                                {
                                    "type": "error",
                                    "session_id": "",
                                    "seq": 0,
                                    "ts": int(time.time() * 1000),
                                    "payload": {
                                        "code": "malformed_payload",
                                        "reason": "invalid JSON line",
                                    },
                                }
                            )
                        )
                        continue
                    await self._send_all(self.handle_json(client_id, doc))
            finally:
                self.drop_connection(client_id)
                writer.close()

        return await asyncio.start_server(on_connect, host, port)

    async def serve_websocket(self, host: str, port: int):
        import websockets

        counter = iter(range(1, 1 << 62))

        async def on_connect(websocket):
            client_id = f"ws-{next(counter)}"

            async def send(text: str) -> None:
                await websocket.send(text)

            self.register_connection(client_id, send)
            try:
                async for raw in websocket:
                    try:
                        doc = json.loads(raw)
                    except json.JSONDecodeError:
                        await send(
                            json.dumps(
                                {
                                    "type": "error",
                                    "session_id": "",
                                    "seq": 0,
                                    "ts": int(time.time() * 1000),
                                    "payload": {
                                        "code": "malformed_payload",
                                        "reason": "invalid JSON message",
                                    },
                                }
                            )
                        )
                        continue
                    await self._send_all(self.handle_json(client_id, doc))
            finally:
                self.drop_connection(client_id)

        return await websockets.serve(on_connect, host, port)


async def serve(
    port: int,
    log_dir: str | Path,
    transport: str = "ws",
    host: str = "127.0.0.1",
    tick_interval: float | None = None,
) -> None:
    """Run the session server until cancelled."""
    broker = SessionServer(log_dir, tick_interval=tick_interval)
    if transport == "tcp":
        server = await broker.serve_tcp(host, port)
        async with server:
            await server.serve_forever()
    else:
        server = await broker.serve_websocket(host, port)
        logger.info("websocket server on ws://%s:%d", host, port)
        await asyncio.Future()
