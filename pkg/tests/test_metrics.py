import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from feedback_loom.agents import agents_from_spec, run_scenario
from feedback_loom.core import SessionPhase, initial_state, setup_event
from feedback_loom.errors import (
    ConfigMismatchError,
    EmptyInputError,
    EmptyWindowError,
    MalformedPayloadError,
    SequenceGapError,
)
from feedback_loom.eventlog import CodedValue, CodingDimension, EventRecord
from feedback_loom.metrics import (
    build_report,
    equality_gini,
    extremity_index,
    intervention_boundary,
    participation_shares,
    replay,
    replay_log,
    split_annotations,
)

from conftest import make_config


def ev(seq, kind, payload=None, tick=0):
    return EventRecord(seq=seq, tick=tick, kind=kind, payload=payload or {})


def tic_log(position=0.7):
    config = make_config("tic", rng_seed=7)
    return config, [
        setup_event(config),
        ev(2, "join", {"seat": 0}),
        ev(3, "start_phase", {"phase": "pre_intervention"}),
        ev(4, "start_phase", {"phase": "intervention"}),
        ev(5, "pedal_input", {"seat": 0, "position": position}),
    ]


class TestReplay:
    def test_empty_log_with_config_is_the_initial_state(self):
        config = make_config("reflect", n_seats=4)
        state = replay([], config)
        assert state.to_canonical_json() == initial_state(config).to_canonical_json()

    def test_empty_log_without_config_rejected(self):
        with pytest.raises(MalformedPayloadError):
            replay([])

    def test_join_advance_pedal_composition(self):
        config, events = tic_log(0.7)
        state = replay(events, config)
        target = state.engine.cycle.target_of(0)
        assert state.engine.balls.sizes[target] == 0.7
        assert state.phase is SessionPhase.INTERVENTION

    def test_config_mismatch_detected(self):
        _, events = tic_log()
        other = make_config("tic", rng_seed=8)
        with pytest.raises(ConfigMismatchError):
            replay(events, other)

    def test_sequence_gap_detected(self):
        config, events = tic_log()
        with pytest.raises(SequenceGapError):
            replay([events[0], events[2]], config)

    def test_simulator_log_replays_to_live_state(self, tmp_path):
        config = make_config(
            "simulation", rng_seed=11, phase_plan=[["pre_intervention", 20], ["intervention", 40]]
        )
        path = tmp_path / "sim.jsonl"
        result = run_scenario(
            config, agents_from_spec(None, config.n_seats, 11), 60, log_path=path
        )
        assert replay_log(path).to_canonical_json() == result.final_state.to_canonical_json()


class TestShares:
    def test_single_speaker_takes_the_whole_share(self):
        events = [
            ev(i + 1, "activity_sample", {"seat": 0, "level": 1.0}, tick=i + 1) for i in range(10)
        ]
        assert participation_shares(events, (1, 10), n_seats=3, threshold=0.5) == [1.0, 0.0, 0.0]

    def test_no_speech_gives_all_zeros(self):
        events = [ev(1, "activity_sample", {"seat": 0, "level": 0.2}, tick=1)]
        assert participation_shares(events, (1, 5), n_seats=3, threshold=0.5) == [0.0, 0.0, 0.0]

    def test_empty_window_rejected(self):
        with pytest.raises(EmptyWindowError):
            participation_shares([], (3, 2), n_seats=2, threshold=0.5)

    def test_matches_recount_oracle(self):
        rng = random.Random(4)
        rows = [
            (t, rng.randrange(4), rng.random()) for t in range(1, 101) for _ in range(rng.randrange(3))
        ]
        events = [
            ev(i + 1, "activity_sample", {"seat": s, "level": lv}, tick=t)
            for i, (t, s, lv) in enumerate(rows)
        ]
        counts = [0] * 4
        for t, s, lv in rows:
            if 20 <= t <= 80 and lv > 0.5:
                counts[s] += 1
        total = sum(counts)
        expected = [c / total for c in counts] if total else [0.0] * 4
        got = participation_shares(events, (20, 80), n_seats=4, threshold=0.5)
        assert got == pytest.approx(expected)


class TestGini:
    def test_perfect_equality(self):
        assert equality_gini([0.25, 0.25, 0.25, 0.25]) == 0.0

    def test_maximal_concentration(self):
        assert equality_gini([1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.75, abs=1e-12)

    def test_all_zero_input(self):
        assert equality_gini([0.0, 0.0, 0.0]) == 0.0

    def oracle(self, shares):
        n = len(shares)
        total = sum(shares)
        if not total:
            return 0.0
        return sum(abs(a - b) for a in shares for b in shares) / (2 * n * total)

    def test_matches_pairwise_oracle(self):
        rng = random.Random(5)
        for _ in range(200):
            n = rng.randint(1, 8)
            raw = [rng.random() for _ in range(n)]
            total = sum(raw)
            shares = [v / total for v in raw]
            assert equality_gini(shares) == pytest.approx(self.oracle(shares))

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8))
    def test_bounds(self, raw):
        n = len(raw)
        g = equality_gini(raw)
        assert 0.0 <= g <= (n - 1) / n + 1e-12


class TestExtremity:
    def test_midpoint_values_score_zero(self):
        assert extremity_index([3, 3, 3]) == 0.0

    def test_alternating_extremes(self):
        assert extremity_index([1, 5, 1, 5]) == 2.0

    def test_accepts_coded_values(self):
        coded = [CodedValue(0, 1, 0, CodingDimension.EMOTION, v, "c") for v in (1, 5)]
        assert extremity_index(coded) == 2.0

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyInputError):
            extremity_index([])


class TestReport:
    def scenario_events(self):
        config = make_config(
            "reflect", n_seats=4, rng_seed=9,
            phase_plan=[["pre_intervention", 30], ["intervention", 30]],
        )
        result = run_scenario(config, agents_from_spec(None, 4, 9), 60)
        return result.events

    def test_boundary_is_the_intervention_start_tick(self):
        events = self.scenario_events()
        assert intervention_boundary(events) == 30

    def test_split_excludes_straddlers(self):
        coded = [
            CodedValue(0, 30, 0, CodingDimension.INVOLVEMENT, 2, "a"),
            CodedValue(31, 60, 0, CodingDimension.INVOLVEMENT, 5, "a"),
            CodedValue(25, 35, 0, CodingDimension.INVOLVEMENT, 3, "a"),
        ]
        pre, post, straddling = split_annotations(coded, 30)
        assert [c.value for c in pre] == [2]
        assert [c.value for c in post] == [5]
        assert len(straddling) == 1

    def test_report_extremity_contrast(self):
        events = self.scenario_events()
        coded = [
            CodedValue(1, 30, s, CodingDimension.INVOLVEMENT, v, coder)
            for coder in ("a", "b")
            for s, v in [(0, 3), (1, 2), (2, 4), (3, 3)]
        ] + [
            CodedValue(31, 60, s, CodingDimension.INVOLVEMENT, v, coder)
            for coder in ("a", "b")
            for s, v in [(0, 1), (1, 5), (2, 5), (3, 1)]
        ]
        report = build_report(events, coded)
        assert report["extremity"]["pre"] == pytest.approx(0.5)
        assert report["extremity"]["post"] == pytest.approx(2.0)
        assert report["extremity"]["contrast"] == pytest.approx(1.5)
        assert report["extremity"]["per_coder"]["a"]["contrast"] == pytest.approx(1.5)
        assert report["extremity"]["mean_coder_contrast"] == pytest.approx(1.5)
        assert report["extremity"]["straddling"] == 0

    def test_report_shares_split_at_boundary(self):
        events = self.scenario_events()
        report = build_report(events)
        assert report["session"]["intervention_boundary"] == 30
        assert sum(report["shares"]["pre"]) == pytest.approx(1.0)
        assert sum(report["shares"]["post"]) == pytest.approx(1.0)
        assert 0.0 <= report["gini"]["overall"] < 1.0

    def test_feedback_intensity_series_from_sliders(self):
        config = make_config(
            "vc_feedback", n_seats=4, rng_seed=2,
            phase_plan=[["pre_intervention", 5], ["intervention", 20]],
        )
        script = [
            {"tick": 10, "target": 2, "axis": "intensity", "value": 0.9},
            {"tick": 12, "target": 2, "axis": "hue", "value": 0.0},
            {"tick": 15, "target": 2, "axis": "intensity", "value": 0.4},
        ]
        result = run_scenario(
            config, agents_from_spec(None, 4, 2), 25, policy="script", script=script
        )
        report = build_report(result.events)
        assert report["feedback_intensity"]["2"] == [[10, 0.9], [15, 0.4]]
