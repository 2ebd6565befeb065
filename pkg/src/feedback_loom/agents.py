"""Scripted participant agents for desk-scale experiments.

Each agent is a single speaking propensity plus a parameterized response to
received feedback: conforming agents shift their propensity along the
feedback direction, rebels shift against it, and rho = 0 ignores feedback
entirely. The model is deliberately minimal; scenario results are
properties of this model, not reproductions of any human session.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

from .core import SessionConfig, SessionMode, SessionPhase, plan_action, validate_config
from .errors import MalformedPayloadError
from .eventlog import EventRecord
from .server import ClientRole, HostResult, RoleKind, SessionHost
from .vc import EXTERNAL_SOURCE_ID, FeedbackDot, FeedbackSourceMode, semantic_direction

DEFAULT_LEARNING_RATE = 0.05
DEFAULT_REVIEW_INTERVAL = 50
DEFAULT_RETUNE_RATE = 0.02
DEFAULT_PEDAL_RATE = 0.05

# Review deviation is scaled by this gain before clamping into the slider's
# intensity range; a quarter-share imbalance maps to full intensity.
EQUALIZE_INTENSITY_GAIN = 4.0


class FeedbackPolicy(str, Enum):
    NONE = "none"
    EQUALIZE_SHARES = "equalize_shares"
    SCRIPT = "script"


@dataclass(frozen=True)
class AgentParams:
    """Behavioral knobs: talkativeness, feedback responsiveness (conform > 0,
    ignore = 0, rebel < 0), interruption aversion, and the nudge size."""

    talkativeness: float
    responsiveness: float = 0.0
    interruption_aversion: float = 0.0
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.talkativeness <= 1.0:
            raise MalformedPayloadError("talkativeness must be in [0, 1]")
        if not -1.0 <= self.responsiveness <= 1.0:
            raise MalformedPayloadError("responsiveness must be in [-1, 1]")
        if not 0.0 <= self.interruption_aversion <= 1.0:
            raise MalformedPayloadError("interruption_aversion must be in [0, 1]")


@dataclass
class AgentState:
    theta: float
    rng: random.Random

    @classmethod
    def initial(cls, params: AgentParams) -> "AgentState":
        return cls(theta=params.talkativeness, rng=random.Random(params.seed))


def step_agent(
    state: AgentState,
    params: AgentParams,
    feedback: tuple[float, float] | None,
    others_speaking_fraction: float,
) -> tuple[bool, AgentState]:
    """One tick: nudge the propensity if feedback arrived, then draw whether
    the agent speaks. Fully deterministic per seed."""
    theta = state.theta
    if feedback is not None:
        direction, intensity = feedback
        theta += params.responsiveness * params.learning_rate * intensity * direction
        theta = min(1.0, max(0.0, theta))
    p = theta * (1.0 - params.interruption_aversion * others_speaking_fraction)
    speaks = state.rng.random() < p
    return speaks, AgentState(theta=theta, rng=state.rng)


def agents_from_spec(
    doc: Any, n_seats: int, rng_seed: int
) -> list[AgentParams]:
    """Build per-seat agent params from a JSON document.

    Accepts a list of per-seat objects or a single object applied to every
    seat; omitted seeds derive deterministically from the session seed.
    """
    if doc is None:
        doc = {}
    if isinstance(doc, Mapping):
        doc = [dict(doc) for _ in range(n_seats)]
    if not isinstance(doc, list) or len(doc) != n_seats:
        raise MalformedPayloadError(f"agent spec must list {n_seats} entries")
    out = []
    for seat, entry in enumerate(doc):
        if not isinstance(entry, Mapping):
            raise MalformedPayloadError("agent entries must be objects")
        out.append(
            AgentParams(
                talkativeness=entry.get("talkativeness", 0.5),
                responsiveness=entry.get("responsiveness", 0.0),
                interruption_aversion=entry.get("interruption_aversion", 0.0),
                learning_rate=entry.get("learning_rate", DEFAULT_LEARNING_RATE),
                seed=entry.get("seed", rng_seed * 1_000_003 + seat),
            )
        )
    return out


@dataclass
class ScenarioResult:
    events: list[EventRecord]
    final_state: Any
    outbound: list[tuple[str, dict]] = field(default_factory=list)


class _Driver:
    """Feeds scenario messages through a session host, failing loudly on any
    rejection: a scenario only ever produces valid inputs."""

    def __init__(self, host: SessionHost, collect: bool):
        self.host = host
        self.collect = collect
        self.outbound: list[tuple[str, dict]] = []

    def send(self, msg_type: str, payload: dict) -> HostResult:
        result = self.host.handle_message(
            {"type": msg_type, "session_id": self.host.session_id, "payload": payload},
            sender=None,
        )
        if result.error is not None:
            raise RuntimeError(f"scenario message rejected: {result.error['payload']}")
        if self.collect:
            self.outbound.extend(result.outbound)
        return result


def run_scenario(
    config: SessionConfig,
    agents: Sequence[AgentParams],
    ticks: int,
    policy: FeedbackPolicy | str = FeedbackPolicy.NONE,
    *,
    review_interval: int = DEFAULT_REVIEW_INTERVAL,
    retune_rate: float = DEFAULT_RETUNE_RATE,
    pedal_rate: float = DEFAULT_PEDAL_RATE,
    script: Sequence[Mapping] | None = None,
    log_path: str | Path | None = None,
    collect_outbound: bool = False,
) -> ScenarioResult:
    """Run a fully scripted session and return its event log.

    The log replays through the core fold to the identical final state, so
    scenarios double as end-to-end fixtures for the analysis tooling.
    """
    policy = FeedbackPolicy(policy)
    check = validate_config(config)
    if not check.ok:
        raise MalformedPayloadError("invalid config: " + "; ".join(check.violations))
    if len(agents) != config.n_seats:
        raise MalformedPayloadError(
            f"need {config.n_seats} agent params, got {len(agents)}"
        )
    if policy is not FeedbackPolicy.NONE and config.mode is not SessionMode.VC_FEEDBACK:
        raise MalformedPayloadError(f"policy {policy.value} requires vc_feedback mode")
    if policy is FeedbackPolicy.EQUALIZE_SHARES and config.feedback_source is (
        FeedbackSourceMode.PARTICIPANT_CYCLE
    ):
        raise MalformedPayloadError("equalize_shares needs an external observer source")

    host = SessionHost(
        f"scenario-{config.mode.value}-{config.rng_seed}",
        log_path=log_path,
        clock=lambda: 0,
    )
    driver = _Driver(host, collect_outbound)
    if collect_outbound:
        for seat in range(config.n_seats):
            host.attach_client(f"seat-{seat:02d}", ClientRole(RoleKind.PARTICIPANT, seat=seat))
        host.attach_client("monitor", ClientRole(RoleKind.MONITOR))
        host.attach_client("observer", ClientRole(RoleKind.OBSERVER, source_id=EXTERNAL_SOURCE_ID))

    driver.send("configure", {"config": config.to_dict()})
    for seat in range(config.n_seats):
        driver.send("join", {"seat": seat, "display_name": f"agent-{seat}"})

    if ticks <= 0:
        return ScenarioResult(
            events=host.events, final_state=host.state, outbound=driver.outbound
        )

    n = config.n_seats
    states = [AgentState.initial(params) for params in agents]
    prev_speaks = [False] * n
    window_counts = [0] * n
    seen_dots: dict[int, FeedbackDot] = {}
    script_by_tick: dict[int, list[Mapping]] = {}
    for entry in script or ():
        script_by_tick.setdefault(int(entry["tick"]), []).append(entry)

    def advance_due() -> None:
        nonlocal window_counts
        while plan_action(host.state) == "advance":
            driver.send("start_phase", {})
            window_counts = [0] * n

    driver.send("start_phase", {})  # leave the lobby
    advance_due()

    for t in range(1, ticks + 1):
        driver.send("tick", {})

        speaks_now = []
        for seat in range(n):
            feedback = None
            if config.mode is SessionMode.VC_FEEDBACK:
                feedback = _dot_change(host.state, seat, seen_dots)
            others = (sum(prev_speaks) - prev_speaks[seat]) / (n - 1) if n > 1 else 0.0
            speaks, states[seat] = step_agent(states[seat], agents[seat], feedback, others)
            speaks_now.append(speaks)

        for seat in range(n):
            if speaks_now[seat]:
                driver.send(
                    "activity_sample", {"seat": seat, "level": 1.0, "tick": host.state.tick}
                )
                window_counts[seat] += 1

        in_intervention = host.state.phase is SessionPhase.INTERVENTION
        if in_intervention:
            if config.mode is SessionMode.SIMULATION:
                for seat in range(n):
                    rng = states[seat].rng
                    if rng.random() < retune_rate:
                        channel = (seat + 1 + rng.randrange(n - 1)) % n
                        driver.send("set_listen", {"seat": seat, "channel": channel})
            elif config.mode is SessionMode.TIC:
                for seat in range(n):
                    rng = states[seat].rng
                    if rng.random() < pedal_rate:
                        driver.send(
                            "pedal_input", {"seat": seat, "position": rng.random()}
                        )
            elif policy is FeedbackPolicy.EQUALIZE_SHARES and t % review_interval == 0:
                _emit_equalize_sliders(driver, config, window_counts)
                window_counts = [0] * n
            if policy is FeedbackPolicy.SCRIPT:
                for entry in script_by_tick.get(t, ()):
                    driver.send(
                        "slider_input",
                        {
                            "source_id": entry.get("source_id", EXTERNAL_SOURCE_ID),
                            "target": entry["target"],
                            "axis": entry["axis"],
                            "value": entry["value"],
                        },
                    )

        prev_speaks = speaks_now
        advance_due()

    driver.send("end_session", {})
    return ScenarioResult(events=host.events, final_state=host.state, outbound=driver.outbound)


def _dot_change(state, seat: int, seen: dict[int, FeedbackDot]) -> tuple[float, float] | None:
    """Feedback tuple (direction, intensity) if the seat's dot moved since the
    agent last looked; the nudge applies once per dot change."""
    engine = state.engine
    for s, dot in engine.dots:
        if s != seat:
            continue
        if seen.get(seat) != dot:
            seen[seat] = dot
            return (semantic_direction(dot.hue), dot.intensity)
        return None
    return None


def _emit_equalize_sliders(
    driver: _Driver, config: SessionConfig, window_counts: Sequence[int]
) -> None:
    """Push over-share seats toward red and under-share seats toward violet,
    with intensity proportional to the imbalance."""
    total = sum(window_counts)
    if total == 0:
        return
    target_share = 1.0 / config.n_seats
    for seat in sorted(config.recipients):
        deviation = window_counts[seat] / total - target_share
        hue = 0.0 if deviation > 0 else 1.0
        intensity = min(1.0, abs(deviation) * EQUALIZE_INTENSITY_GAIN)
        driver.send(
            "slider_input",
            {"source_id": EXTERNAL_SOURCE_ID, "target": seat, "axis": "hue", "value": hue},
        )
        driver.send(
            "slider_input",
            {
                "source_id": EXTERNAL_SOURCE_ID,
                "target": seat,
                "axis": "intensity",
                "value": intensity,
            },
        )
