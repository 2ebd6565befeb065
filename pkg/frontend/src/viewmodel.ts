// Pure view state. The reducer folds server messages into a ViewModel and
// renders only what was addressed to this client's role: a participant
// client stores no listener-derived data at all, so there is no code path
// that could display listener counts.

import type { Phase, ProtocolMessage, Role, SessionMode } from "./protocol.js";

export interface Dot {
  hue: number;
  size: number;
  intensity: number;
}

export interface SpeakerView {
  ownChannel: number;
  tunedTo: number;
  powered: boolean;
}

export interface MonitorRouting {
  listen: number[];
  mutualPairs: [number, number][];
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ViewModel {
  sessionId: string;
  role: Role;
  seat: number | null;
  mode: SessionMode | null;
  nSeats: number;
  phase: Phase;
  connection: ConnectionStatus;
  roster: (string | null)[];
  territoryCells: number[] | null;
  ballSizes: number[] | null;
  ballBrightness: number[] | null;
  dots: Map<number, Dot>;
  speakerView: SpeakerView | null;
  // analysis stream, populated only for monitor clients
  monitorRouting: MonitorRouting | null;
  participationContext: { target: number; relative: number } | null;
  lastError: string | null;
  lastSeq: number;
}

export function initialViewModel(sessionId: string, role: Role, seat: number | null): ViewModel {
  return {
    sessionId,
    role,
    seat,
    mode: null,
    nSeats: 0,
    phase: "lobby",
    connection: "connecting",
    roster: [],
    territoryCells: null,
    ballSizes: null,
    ballBrightness: null,
    dots: new Map(),
    speakerView: null,
    monitorRouting: null,
    participationContext: null,
    lastError: null,
    lastSeq: 0,
  };
}

export function setConnection(vm: ViewModel, status: ConnectionStatus): ViewModel {
  return { ...vm, connection: status };
}

/** Fold one addressed server message into the view state. */
export function applyMessage(vm: ViewModel, msg: ProtocolMessage): ViewModel {
  if (msg.session_id !== vm.sessionId) return vm;
  switch (msg.type) {
    case "error":
      return { ...vm, lastError: String(msg.payload.reason ?? msg.payload.code ?? "error") };
    case "dot_update":
      return applyDotUpdate(vm, msg);
    case "state_update":
      return applyStateUpdate(vm, msg);
    default:
      return vm;
  }
}

function applyDotUpdate(vm: ViewModel, msg: ProtocolMessage): ViewModel {
  const seat = msg.payload.seat;
  if (typeof seat !== "number") return vm;
  const dot: Dot = {
    hue: num(msg.payload.hue, 0.5),
    size: num(msg.payload.size, 0),
    intensity: num(msg.payload.intensity, 0),
  };
  const dots = new Map(vm.dots);
  dots.set(seat, dot);
  return { ...vm, dots, lastSeq: msg.seq };
}

function applyStateUpdate(vm: ViewModel, msg: ProtocolMessage): ViewModel {
  const p = msg.payload;
  const next: ViewModel = { ...vm, lastSeq: msg.seq };
  switch (p.event) {
    case "configured":
      next.mode = p.mode as SessionMode;
      next.nSeats = num(p.n_seats, 0);
      next.phase = p.phase as Phase;
      next.roster = new Array(next.nSeats).fill(null);
      return next;
    case "join": {
      const seat = num(p.seat, -1);
      const roster = vm.roster.slice();
      if (seat >= 0) {
        while (roster.length <= seat) roster.push(null);
        roster[seat] = String(p.display_name ?? `seat-${seat}`);
      }
      next.roster = roster;
      next.phase = (p.phase as Phase) ?? vm.phase;
      return next;
    }
    case "joined":
      next.phase = (p.phase as Phase) ?? vm.phase;
      return next;
    case "phase":
      next.phase = p.phase as Phase;
      return next;
    case "territory":
      next.territoryCells = (p.cells as number[]).slice();
      return next;
    case "balls":
      next.ballSizes = (p.sizes as number[]).slice();
      next.ballBrightness = (p.brightness as number[]).slice();
      return next;
    case "speaker_view":
      next.speakerView = {
        ownChannel: num(p.own_channel, 0),
        tunedTo: num(p.tuned_to, 0),
        powered: Boolean(p.powered),
      };
      return next;
    case "routing":
      // analysis-only stream; never stored for non-monitor roles
      if (vm.role !== "monitor") return vm;
      next.monitorRouting = {
        listen: (p.listen as number[]).slice(),
        mutualPairs: (p.mutual_pairs as [number, number][]).map((pair) => [pair[0], pair[1]]),
      };
      return next;
    case "participation_context":
      next.participationContext = {
        target: num(p.target, 0),
        relative: num(p.relative_participation, 0),
      };
      return next;
    default:
      return vm;
  }
}

export function ownDot(vm: ViewModel): Dot | null {
  if (vm.seat === null) return null;
  return vm.dots.get(vm.seat) ?? null;
}

function num(value: unknown, fallback: number): number {
  return typeof value === "number" ? value : fallback;
}
