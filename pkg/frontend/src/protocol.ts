// Wire protocol: newline-delimited JSON over the server's WebSocket binding,
// one message per text frame. Field names are fixed by the server.

export type MessageType =
  | "join"
  | "configure"
  | "start_phase"
  | "tick"
  | "activity_sample"
  | "set_listen"
  | "pedal_input"
  | "slider_input"
  | "annotation"
  | "state_update"
  | "dot_update"
  | "error"
  | "end_session";

export const MESSAGE_TYPES: ReadonlySet<string> = new Set([
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
]);

export type SessionMode = "reflect" | "simulation" | "tic" | "vc_feedback";
export type Phase = "lobby" | "pre_intervention" | "intervention" | "debrief" | "closed";
export type Role = "participant" | "observer" | "coder" | "monitor";
export type SliderAxis = "hue" | "size" | "intensity";

export interface ProtocolMessage {
  type: MessageType;
  session_id: string;
  seq: number;
  ts: number;
  payload: Record<string, unknown>;
}

export class ProtocolError extends Error {}

export function parseMessage(raw: string): ProtocolMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not JSON");
  }
  if (typeof doc !== "object" || doc === null) {
    throw new ProtocolError("frame is not an object");
  }
  const msg = doc as Record<string, unknown>;
  if (typeof msg.type !== "string" || !MESSAGE_TYPES.has(msg.type)) {
    throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
  if (typeof msg.session_id !== "string") {
    throw new ProtocolError("missing session_id");
  }
  if (typeof msg.payload !== "object" || msg.payload === null) {
    throw new ProtocolError("missing payload");
  }
  return {
    type: msg.type as MessageType,
    session_id: msg.session_id,
    seq: typeof msg.seq === "number" ? msg.seq : 0,
    ts: typeof msg.ts === "number" ? msg.ts : 0,
    payload: msg.payload as Record<string, unknown>,
  };
}

// Outbound builders. The server assigns seq; ts is informational.

function outbound(
  type: MessageType,
  sessionId: string,
  payload: Record<string, unknown>,
): ProtocolMessage {
  return { type, session_id: sessionId, seq: 0, ts: Date.now(), payload };
}

export function joinMessage(
  sessionId: string,
  role: Role,
  opts: { seat?: number; displayName?: string; expectedShare?: number; sourceId?: string } = {},
): ProtocolMessage {
  const payload: Record<string, unknown> = { role };
  if (role === "participant") {
    payload.seat = opts.seat;
    if (opts.displayName) payload.display_name = opts.displayName;
    if (opts.expectedShare !== undefined) payload.role_expected_share = opts.expectedShare;
  } else if (opts.sourceId) {
    payload.source_id = opts.sourceId;
  }
  return outbound("join", sessionId, payload);
}

export function configureMessage(
  sessionId: string,
  config: Record<string, unknown>,
): ProtocolMessage {
  return outbound("configure", sessionId, { config });
}

export function startPhaseMessage(sessionId: string): ProtocolMessage {
  return outbound("start_phase", sessionId, {});
}

export function endSessionMessage(sessionId: string): ProtocolMessage {
  return outbound("end_session", sessionId, {});
}

export function activitySampleMessage(
  sessionId: string,
  seat: number,
  level: number,
): ProtocolMessage {
  return outbound("activity_sample", sessionId, { seat, level: clamp01(level) });
}

export function setListenMessage(
  sessionId: string,
  seat: number,
  channel: number,
): ProtocolMessage {
  return outbound("set_listen", sessionId, { seat, channel });
}

export function pedalInputMessage(
  sessionId: string,
  seat: number,
  position: number,
): ProtocolMessage {
  return outbound("pedal_input", sessionId, { seat, position: clamp01(position) });
}

export function sliderInputMessage(
  sessionId: string,
  sourceId: string,
  target: number,
  axis: SliderAxis,
  value: number,
): ProtocolMessage {
  return outbound("slider_input", sessionId, {
    source_id: sourceId,
    target,
    axis,
    value: clamp01(value),
  });
}

export function clamp01(value: number): number {
  return Math.min(1, Math.max(0, value));
}
