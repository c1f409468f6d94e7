import { describe, expect, it } from "vitest";
import {
  applyMessage,
  initialConsoleState,
  isStale,
  onConnected,
  onDisconnected,
  sendAllowed,
  STALE_AFTER_MS,
} from "../src/state.js";
import { Envelope, ObsBody } from "../src/schemas.js";

const obsBody = (overrides: Partial<ObsBody> = {}): ObsBody => ({
  seq: 1,
  timestep: 1,
  eef_left: [0, 0, 0, 0, 0, 0],
  eef_right: [0, 0, 0, 0, 0, 0],
  arm_q_left: [0, 0, 0, 0, 0, 0],
  arm_q_right: [0, 0, 0, 0, 0, 0],
  hand_q_left: [0, 0, 0, 0, 0, 0],
  hand_q_right: [0, 0, 0, 0, 0, 0],
  touch: null,
  images: {},
  depths: {},
  ...overrides,
});

describe("console state reducer", () => {
  it("recording flag mirrors server acks, not local intent", () => {
    let s = initialConsoleState();
    expect(s.recording).toBe(false);
    s = applyMessage(
      s,
      { type: "ctrl", body: { kind: "recording", path: "r/ep.bmep" } },
      0,
    );
    expect(s.recording).toBe(true);
    s = applyMessage(
      s,
      { type: "ctrl", body: { kind: "saved", path: "r/ep.bmep" } },
      0,
    );
    expect(s.recording).toBe(false);
    expect(s.lastSavedPath).toBe("r/ep.bmep");
  });

  it("obs updates snapshot, engagement, and freshness", () => {
    let s = initialConsoleState();
    const env: Envelope = {
      type: "obs",
      body: obsBody({ engaged: { left: true, right: false }, recording: true }),
    };
    s = applyMessage(s, env, 500);
    expect(s.obs?.seq).toBe(1);
    expect(s.engaged).toEqual({ left: true, right: false });
    expect(s.recording).toBe(true);
    expect(isStale(s, 500)).toBe(false);
    expect(isStale(s, 500 + STALE_AFTER_MS + 1)).toBe(true);
  });

  it("no observation yet means stale", () => {
    expect(isStale(initialConsoleState(), 0)).toBe(true);
  });

  it("errors accumulate with a cap", () => {
    let s = initialConsoleState();
    for (let i = 0; i < 30; i++) {
      s = applyMessage(s, { type: "err", body: { message: `e${i}` } }, 0);
    }
    expect(s.errors.length).toBe(20);
    expect(s.errors.at(-1)).toBe("e29");
  });

  it("reconnect resumes with both arms disengaged", () => {
    let s = initialConsoleState();
    s = applyMessage(
      s,
      { type: "obs", body: obsBody({ engaged: { left: true, right: true } }) },
      0,
    );
    s = onDisconnected(s);
    expect(s.connection).toBe("disconnected");
    s = onConnected(s);
    expect(s.connection).toBe("connected");
    expect(s.engaged).toEqual({ left: false, right: false });
  });

  it("stray chunk messages are ignored", () => {
    const s = initialConsoleState();
    const env: Envelope = {
      type: "chunk",
      body: {
        based_on_timestep: 0,
        chunk: Array.from({ length: 16 }, () => [0]),
      },
    };
    expect(applyMessage(s, env, 0)).toEqual(s);
  });
});

describe("send throttle", () => {
  it("caps the outgoing rate at 30 Hz", () => {
    expect(sendAllowed(null, 0)).toBe(true);
    expect(sendAllowed(0, 10)).toBe(false);
    expect(sendAllowed(0, 34)).toBe(true);
    // a full simulated second never exceeds 30 sends
    let last: number | null = null;
    let sent = 0;
    for (let now = 0; now < 1000; now += 1) {
      if (sendAllowed(last, now)) {
        last = now;
        sent += 1;
      }
    }
    expect(sent).toBeLessThanOrEqual(30);
  });
});
