import { describe, expect, it } from "vitest";

import {
  activitySampleMessage,
  clamp01,
  joinMessage,
  parseMessage,
  pedalInputMessage,
  ProtocolError,
  setListenMessage,
  sliderInputMessage,
} from "../src/protocol.js";

describe("parseMessage", () => {
  it("round-trips a server frame", () => {
    const raw = JSON.stringify({
      type: "state_update",
      session_id: "s1",
      seq: 12,
      ts: 999,
      payload: { event: "phase", phase: "intervention" },
    });
    const msg = parseMessage(raw);
    expect(msg.type).toBe("state_update");
    expect(msg.seq).toBe(12);
    expect(msg.payload.phase).toBe("intervention");
  });

  it("rejects non-JSON frames", () => {
    expect(() => parseMessage("{nope")).toThrow(ProtocolError);
  });

  it("rejects unknown message types", () => {
    const raw = JSON.stringify({ type: "warp", session_id: "s1", payload: {} });
    expect(() => parseMessage(raw)).toThrow(ProtocolError);
  });

  it("rejects frames without payload", () => {
    const raw = JSON.stringify({ type: "error", session_id: "s1" });
    expect(() => parseMessage(raw)).toThrow(ProtocolError);
  });
});

describe("builders", () => {
  it("pedal input carries seat and clamped position", () => {
    const msg = pedalInputMessage("s1", 3, 1.4);
    expect(msg.type).toBe("pedal_input");
    expect(msg.payload).toMatchObject({ seat: 3, position: 1 });
  });

  it("dial change carries the chosen channel", () => {
    const msg = setListenMessage("s1", 2, 9);
    expect(msg.payload).toEqual({ seat: 2, channel: 9 });
  });

  it("slider input names source, target and axis", () => {
    const msg = sliderInputMessage("s1", "observer", 4, "hue", 0.25);
    expect(msg.payload).toEqual({ source_id: "observer", target: 4, axis: "hue", value: 0.25 });
  });

  it("participant join includes the seat", () => {
    const msg = joinMessage("s1", "participant", { seat: 5, displayName: "ada" });
    expect(msg.payload).toMatchObject({ role: "participant", seat: 5, display_name: "ada" });
  });

  it("activity level is clamped into the unit interval", () => {
    expect(activitySampleMessage("s1", 0, 7).payload.level).toBe(1);
    expect(clamp01(-3)).toBe(0);
  });
});
