/**
 * Console session state and the reducer applied to every incoming
 * message. Network handlers only ever call applyMessage; the render loop
 * reads the returned state. The recording flag mirrors the server's
 * acknowledgments, never the local button press.
 */
import { Envelope, ObsBody } from "./schemas.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface ConsoleState {
  connection: ConnectionStatus;
  /** latest observation snapshot from the simulator */
  obs: ObsBody | null;
  /** wall-clock ms of the last obs, for the stale-data banner */
  obsReceivedAt: number | null;
  /** recording flag as acknowledged by the server */
  recording: boolean;
  /** path of the last saved episode, from the server's saved ack */
  lastSavedPath: string | null;
  /** per-arm engagement as reported by the server (clutch indicator) */
  engaged: { left: boolean; right: boolean };
  /** single-gamepad mode: which hand the device drives */
  activeHand: "left" | "right";
  errors: string[];
}

export function initialConsoleState(): ConsoleState {
  return {
    connection: "disconnected",
    obs: null,
    obsReceivedAt: null,
    recording: false,
    lastSavedPath: null,
    engaged: { left: false, right: false },
    activeHand: "left",
    errors: [],
  };
}

const MAX_ERRORS = 20;

export function applyMessage(
  state: ConsoleState,
  env: Envelope,
  nowMs: number,
): ConsoleState {
  switch (env.type) {
    case "obs": {
      const engaged = env.body.engaged ?? state.engaged;
      const recording = env.body.recording ?? state.recording;
      return { ...state, obs: env.body, obsReceivedAt: nowMs, engaged, recording };
    }
    case "ctrl": {
      switch (env.body.kind) {
        case "recording":
          return { ...state, recording: true };
        case "saved":
          return { ...state, recording: false, lastSavedPath: env.body.path };
        default:
          return state;
      }
    }
    case "err": {
      const errors = [...state.errors, env.body.message].slice(-MAX_ERRORS);
      return { ...state, errors };
    }
    case "chunk":
      // the console never executes actions; ignore stray chunks
      return state;
  }
}

export function onConnected(state: ConsoleState): ConsoleState {
  // a (re)connect always starts with both arms disengaged: the server's
  // teleop sessions are fresh and must be re-engaged explicitly
  return {
    ...state,
    connection: "connected",
    engaged: { left: false, right: false },
  };
}

export function onDisconnected(state: ConsoleState): ConsoleState {
  return { ...state, connection: "disconnected" };
}

/** Data older than this is flagged stale in the view. */
export const STALE_AFTER_MS = 1000;

export function isStale(state: ConsoleState, nowMs: number): boolean {
  return (
    state.obsReceivedAt === null || nowMs - state.obsReceivedAt > STALE_AFTER_MS
  );
}

/** Outgoing messages are throttled to at most this rate. */
export const MAX_SEND_HZ = 30;

/** Returns whether a send is allowed at nowMs given the last send time. */
export function sendAllowed(lastSendMs: number | null, nowMs: number): boolean {
  return lastSendMs === null || nowMs - lastSendMs >= 1000 / MAX_SEND_HZ;
}
