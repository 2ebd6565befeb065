import json

import pytest

from feedback_loom.core import (
    PHASE_CHAIN,
    SessionConfig,
    SessionMode,
    SessionPhase,
    advance_phase,
    apply_event,
    initial_state,
    load_config_file,
    plan_action,
    setup_event,
    validate_config,
)
from feedback_loom.errors import (
    AlreadyClosedError,
    MalformedPayloadError,
    PhaseViolationError,
    SequenceGapError,
    UnknownSeatError,
)
from feedback_loom.eventlog import EventRecord

from conftest import make_config


def ev(seq, kind, payload=None, tick=0):
    return EventRecord(seq=seq, tick=tick, kind=kind, payload=payload or {})


def state_at_phase(config, phase):
    state = initial_state(config)
    seq = state.last_seq
    while state.phase is not phase:
        seq += 1
        state = apply_event(state, ev(seq, "start_phase"))
    return state


class TestConfigValidation:
    def test_eight_seat_tic_is_valid(self):
        assert validate_config(make_config("tic", n_seats=8)).ok

    def test_four_seat_tic_has_no_assignment(self):
        result = validate_config(make_config("tic", n_seats=4))
        assert not result.ok
        assert any("no valid assignment" in v for v in result.violations)

    def test_twelve_seat_simulation_is_valid(self):
        assert validate_config(make_config("simulation", n_seats=12)).ok

    def test_default_seat_counts(self):
        assert make_config("simulation").n_seats == 12
        assert make_config("tic").n_seats == 8

    def test_empty_phase_plan_rejected(self):
        result = validate_config(make_config("reflect", phase_plan=[]))
        assert "empty phase plan" in result.violations

    def test_recipients_outside_seat_range(self):
        result = validate_config(make_config("reflect", n_seats=4, recipients=[0, 9]))
        assert any("recipients outside seat range" in v for v in result.violations)

    def test_tic_plan_must_open_with_baseline(self):
        config = make_config("tic", phase_plan=[["intervention", 100]])
        result = validate_config(config)
        assert any("pre-intervention baseline" in v for v in result.violations)

    def test_reflect_plan_may_skip_baseline(self):
        config = make_config("reflect", phase_plan=[["intervention", 100]])
        assert validate_config(config).ok

    def test_plan_must_follow_the_chain(self):
        config = make_config(
            "reflect", phase_plan=[["intervention", 10], ["pre_intervention", 10]]
        )
        assert not validate_config(config).ok

    def test_unknown_config_field_rejected(self):
        with pytest.raises(MalformedPayloadError):
            SessionConfig.from_dict({"mode": "reflect", "swarm_size": 3})

    def test_unknown_mode_rejected(self):
        with pytest.raises(MalformedPayloadError):
            SessionConfig.from_dict({"mode": "karaoke"})

    def test_round_trip_through_dict(self):
        config = make_config("vc_feedback", n_seats=6, rng_seed=42, dot_visibility="public")
        assert SessionConfig.from_dict(config.to_dict()) == config

    def test_load_config_file_round_trip(self, tmp_path):
        config = make_config("simulation", rng_seed=5)
        path = tmp_path / "session.json"
        path.write_text(json.dumps(config.to_dict()))
        assert load_config_file(path) == config


class TestPhaseMachine:
    def test_chain_walk(self, reflect_config):
        state = initial_state(reflect_config)
        seen = [state.phase]
        for _ in range(4):
            state = advance_phase(state)
            seen.append(state.phase)
        assert tuple(seen) == PHASE_CHAIN

    def test_closed_is_terminal(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.CLOSED)
        with pytest.raises(AlreadyClosedError):
            advance_phase(state)

    def test_intervention_powers_the_switchboxes(self):
        config = make_config("simulation", n_seats=3)
        state = initial_state(config)
        assert not any(state.engine.powered)
        state = state_at_phase(config, SessionPhase.INTERVENTION)
        assert all(state.engine.powered)

    def test_plan_action_sequence(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        assert plan_action(state) == "hold"
        seq = state.last_seq
        for t in range(20):
            seq += 1
            state = apply_event(state, ev(seq, "tick"))
        assert plan_action(state) == "advance"
        state = apply_event(state, ev(seq + 1, "start_phase"))
        assert state.phase is SessionPhase.INTERVENTION
        assert plan_action(state) == "hold"

    def test_unplanned_phase_skips_forward(self):
        config = make_config("reflect", phase_plan=[["intervention", 10]])
        state = state_at_phase(config, SessionPhase.PRE_INTERVENTION)
        assert plan_action(state) == "advance"


class TestApplyEvent:
    def test_sequence_gap_detected(self, reflect_config):
        state = initial_state(reflect_config)
        with pytest.raises(SequenceGapError):
            apply_event(state, ev(43, "tick"))

    def test_pedal_during_baseline_is_a_phase_violation(self, tic_config):
        state = state_at_phase(tic_config, SessionPhase.PRE_INTERVENTION)
        with pytest.raises(PhaseViolationError):
            apply_event(
                state,
                ev(state.last_seq + 1, "pedal_input", {"seat": 0, "position": 0.5}),
            )

    def test_slider_during_baseline_is_a_phase_violation(self):
        config = make_config("vc_feedback", n_seats=4)
        state = state_at_phase(config, SessionPhase.PRE_INTERVENTION)
        with pytest.raises(PhaseViolationError):
            apply_event(
                state,
                ev(
                    state.last_seq + 1,
                    "slider_input",
                    {"source_id": "observer", "target": 1, "axis": "hue", "value": 0.0},
                ),
            )

    def test_join_registers_profile(self, reflect_config):
        state = initial_state(reflect_config)
        state = apply_event(
            state,
            ev(2, "join", {"seat": 2, "display_name": "ada", "role_expected_share": 0.25}),
        )
        assert state.last_seq == 2
        profile = state.profile_for(2)
        assert profile.display_name == "ada"
        assert profile.role_expected_share == 0.25

    def test_join_outside_lobby_rejected(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        with pytest.raises(PhaseViolationError):
            apply_event(state, ev(state.last_seq + 1, "join", {"seat": 0}))

    def test_join_occupied_seat_rejected(self, reflect_config):
        state = apply_event(initial_state(reflect_config), ev(2, "join", {"seat": 1}))
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(3, "join", {"seat": 1}))

    def test_join_unknown_seat_rejected(self, reflect_config):
        with pytest.raises(UnknownSeatError):
            apply_event(initial_state(reflect_config), ev(2, "join", {"seat": 99}))

    def test_declared_shares_over_one_rejected(self):
        config = make_config("reflect", n_seats=2)
        state = initial_state(config)
        state = apply_event(state, ev(2, "join", {"seat": 0, "role_expected_share": 0.8}))
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(3, "join", {"seat": 1, "role_expected_share": 0.4}))

    def test_declared_shares_within_tolerance_accepted(self):
        config = make_config("reflect", n_seats=2)
        state = initial_state(config)
        state = apply_event(state, ev(2, "join", {"seat": 0, "role_expected_share": 0.6}))
        state = apply_event(state, ev(3, "join", {"seat": 1, "role_expected_share": 0.405}))
        assert len(state.profiles) == 2

    def test_activity_sample_updates_territory(self):
        # short half-life so one loud sample clears the activity floor
        config = make_config("reflect", n_seats=4, half_life_ticks=1)
        state = state_at_phase(config, SessionPhase.PRE_INTERVENTION)
        seq = state.last_seq
        state = apply_event(state, ev(seq + 1, "tick"))
        state = apply_event(
            state, ev(seq + 2, "activity_sample", {"seat": 0, "level": 1.0}, tick=1)
        )
        assert state.engine.smoothed[0] == pytest.approx(0.5)
        assert state.engine.cells == (config.cell_count, 0, 0, 0)

    def test_duplicate_sample_in_one_tick_rejected(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        seq = state.last_seq
        state = apply_event(state, ev(seq + 1, "tick"))
        state = apply_event(state, ev(seq + 2, "activity_sample", {"seat": 0, "level": 0.5}))
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(seq + 3, "activity_sample", {"seat": 0, "level": 0.7}))

    def test_next_tick_clears_the_sample_guard(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        seq = state.last_seq
        state = apply_event(state, ev(seq + 1, "tick"))
        state = apply_event(state, ev(seq + 2, "activity_sample", {"seat": 0, "level": 0.5}))
        state = apply_event(state, ev(seq + 3, "tick"))
        state = apply_event(state, ev(seq + 4, "activity_sample", {"seat": 0, "level": 0.5}))
        assert state.tick == 2

    def test_stale_sample_tick_rejected(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        seq = state.last_seq
        state = apply_event(state, ev(seq + 1, "tick"))
        with pytest.raises(MalformedPayloadError):
            apply_event(
                state, ev(seq + 2, "activity_sample", {"seat": 0, "level": 0.5, "tick": 0})
            )

    def test_set_listen_wrong_mode_rejected(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.INTERVENTION)
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(state.last_seq + 1, "set_listen", {"seat": 0, "channel": 1}))

    def test_end_session_from_any_phase(self, reflect_config):
        state = state_at_phase(reflect_config, SessionPhase.PRE_INTERVENTION)
        state = apply_event(state, ev(state.last_seq + 1, "end_session"))
        assert state.phase is SessionPhase.CLOSED
        with pytest.raises(AlreadyClosedError):
            apply_event(state, ev(state.last_seq + 1, "end_session"))

    def test_configure_not_valid_mid_log(self, reflect_config):
        state = initial_state(reflect_config)
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(2, "configure", {"config": reflect_config.to_dict()}))

    def test_start_phase_payload_cross_checked(self, reflect_config):
        state = initial_state(reflect_config)
        with pytest.raises(MalformedPayloadError):
            apply_event(state, ev(2, "start_phase", {"phase": "intervention"}))
        state = apply_event(state, ev(2, "start_phase", {"phase": "pre_intervention"}))
        assert state.phase is SessionPhase.PRE_INTERVENTION


class TestDeterminism:
    def test_same_fold_serializes_identically(self, reflect_config):
        events = [
            ev(2, "join", {"seat": 0}),
            ev(3, "join", {"seat": 1}),
            ev(4, "start_phase"),
            ev(5, "tick"),
            ev(6, "activity_sample", {"seat": 0, "level": 0.9}, tick=1),
            ev(7, "tick", tick=1),
        ]

        def fold():
            state = initial_state(reflect_config)
            for event in events:
                state = apply_event(state, event)
            return state.to_canonical_json()

        assert fold() == fold()

    def test_phase_never_moves_backward(self, reflect_config):
        state = initial_state(reflect_config)
        order = {phase: i for i, phase in enumerate(PHASE_CHAIN)}
        events = [
            ev(2, "join", {"seat": 0}),
            ev(3, "start_phase"),
            ev(4, "tick"),
            ev(5, "start_phase"),
            ev(6, "tick", tick=1),
            ev(7, "end_session"),
        ]
        previous = order[state.phase]
        for event in events:
            state = apply_event(state, event)
            assert order[state.phase] >= previous
            previous = order[state.phase]

    def test_setup_event_matches_config(self, reflect_config):
        event = setup_event(reflect_config)
        assert event.seq == 1
        assert SessionConfig.from_dict(event.payload["config"]) == reflect_config
