"""Operator entry points: serve, simulate, replay, metrics, gen-assignment.

Every subcommand is a thin wrapper over the importable modules. Exit codes:
0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

from . import agents as agents_mod
from . import metrics as metrics_mod
from . import server as server_mod
from . import tic
from .core import DEFAULT_SEATS, SessionConfig, SessionMode, SessionPhase, load_config_file, validate_config
from .errors import FeedbackLoomError
from .eventlog import canonical_json

LOG_DIR_ENV = "FEEDBACK_LOOM_LOG_DIR"


class _CliParser(argparse.ArgumentParser):
    """Argparse that reports usage problems as validation failures (exit 1)."""

    def error(self, message):
        raise FeedbackLoomError(message)


def _build_parser() -> _CliParser:
    parser = _CliParser(prog="feedback-loom")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-assignment", help="generate a constrained evaluator cycle")
    gen.add_argument("--seats", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--json", action="store_true")

    sim = sub.add_parser("simulate", help="run a scripted-agent scenario to a log file")
    sim.add_argument("--mode", choices=[m.value for m in SessionMode], default="reflect")
    sim.add_argument("--seats", type=int)
    sim.add_argument("--ticks", type=int, default=600)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--agents", metavar="JSON_FILE")
    sim.add_argument(
        "--policy",
        choices=[p.value for p in agents_mod.FeedbackPolicy],
        default="none",
    )
    sim.add_argument("--script", metavar="JSON_FILE", help="slider script for --policy script")
    sim.add_argument("--config", metavar="JSON_FILE", help="full session config (overrides flags)")
    sim.add_argument("--out", metavar="LOG_PATH")

    rep = sub.add_parser("replay", help="replay a recorded log and report the final state")
    rep.add_argument("--log", required=True)
    rep.add_argument("--json", action="store_true")

    met = sub.add_parser("metrics", help="emit the session metrics report")
    met.add_argument("--log", required=True)
    met.add_argument("--annotations")
    met.add_argument("--report", metavar="OUT_PATH")
    met.add_argument("--json", action="store_true")

    srv = sub.add_parser("serve", help="run the session server")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--log-dir", default=None)
    srv.add_argument("--transport", choices=["ws", "tcp"], default="ws")
    srv.add_argument("--host", default="127.0.0.1")

    return parser


def _cmd_gen_assignment(args) -> int:
    cycle = tic.generate_assignment(args.seats, args.seed)
    report = tic.validate_assignment(cycle.sigma, args.seats)
    if args.json:
        print(
            canonical_json(
                {
                    "sigma": list(cycle.sigma),
                    "cycle_order": cycle.cycle_order(),
                    "ok": report.ok,
                    "violations": list(report.violations),
                }
            )
        )
    else:
        order = cycle.cycle_order() + [0]
        print(" -> ".join(str(seat) for seat in order))
        print(f"validation: {'ok' if report.ok else '; '.join(report.violations)}")
    return 0


def _scenario_config(args) -> SessionConfig:
    if args.config:
        return load_config_file(args.config)
    mode = SessionMode(args.mode)
    n_seats = args.seats if args.seats is not None else DEFAULT_SEATS[mode]
    baseline = max(args.ticks // 2, 1)
    return SessionConfig.from_dict(
        {
            "mode": mode.value,
            "n_seats": n_seats,
            "rng_seed": args.seed,
            "phase_plan": [
                [SessionPhase.PRE_INTERVENTION.value, baseline],
                [SessionPhase.INTERVENTION.value, max(args.ticks - baseline, 0)],
            ],
        }
    )


def _cmd_simulate(args) -> int:
    config = _scenario_config(args)
    check = validate_config(config)
    if not check.ok:
        raise FeedbackLoomError("invalid config: " + "; ".join(check.violations))

    agent_doc = None
    if args.agents:
        with open(args.agents, "r", encoding="utf-8") as fh:
            agent_doc = json.load(fh)
    agent_params = agents_mod.agents_from_spec(agent_doc, config.n_seats, config.rng_seed)

    script = None
    if args.script:
        with open(args.script, "r", encoding="utf-8") as fh:
            script = json.load(fh)

    result = agents_mod.run_scenario(
        config,
        agent_params,
        args.ticks,
        policy=args.policy,
        script=script,
        log_path=args.out,
    )
    state = result.final_state
    print(
        f"simulated {len(result.events)} events over {state.tick} ticks "
        f"({config.mode.value}, {config.n_seats} seats); final phase {state.phase.value}"
    )
    if args.out:
        print(f"log written to {args.out}")
    return 0


def _cmd_replay(args) -> int:
    state = metrics_mod.replay_log(args.log)
    if args.json:
        print(state.to_canonical_json())
    else:
        print(
            f"replayed {state.last_seq} events: phase {state.phase.value}, "
            f"tick {state.tick}, mode {state.config.mode.value}"
        )
    return 0


def _cmd_metrics(args) -> int:
    report = metrics_mod.build_report_from_files(args.log, args.annotations)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text + "\n", encoding="utf-8")
        print(f"report written to {args.report}")
    if args.json or not args.report:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    log_dir = args.log_dir or os.environ.get(LOG_DIR_ENV) or "logs"
    try:
        asyncio.run(
            server_mod.serve(args.port, log_dir, transport=args.transport, host=args.host)
        )
    except KeyboardInterrupt:
        pass
    return 0


_COMMANDS = {
    "gen-assignment": _cmd_gen_assignment,
    "simulate": _cmd_simulate,
    "replay": _cmd_replay,
    "metrics": _cmd_metrics,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except FeedbackLoomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
