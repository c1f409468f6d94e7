/**
 * Browser entry point: keyboard (and, when present, gamepad) input is
 * sampled at up to 30 Hz, integrated into virtual controller poses, and
 * streamed to the recording server; incoming observations drive the
 * canvas view.
 *
 * Keyboard map (left hand; hold Shift for the right hand, or press Tab
 * to switch the active hand):
 *   W/S A/D Q/E  translate   I/K J/L U/O  rotate
 *   G            grip        arrows       thumbstick
 *   Space        engage/pause toggle
 *   R / T        start / stop recording
 */
import { RecordClient } from "./client.js";
import {
  DEFAULT_BINDING,
  HandInput,
  idleHandInput,
  initialInputState,
  InputSnapshot,
  pollInput,
} from "./input.js";
import { render } from "./render.js";
import {
  applyMessage,
  initialConsoleState,
  onConnected,
  onDisconnected,
  sendAllowed,
} from "./state.js";

const keys = new Set<string>();
let consoleState = initialConsoleState();
let inputState = initialInputState();
let lastSendMs: number | null = null;
let pendingTrigger: { left: boolean; right: boolean } = {
  left: false,
  right: false,
};

function keyboardHand(active: boolean): HandInput {
  if (!active) return idleHandInput();
  const axis = (neg: string, pos: string) =>
    (keys.has(pos) ? 1 : 0) - (keys.has(neg) ? 1 : 0);
  return {
    move: [axis("s", "w"), axis("d", "a"), axis("q", "e")],
    rotate: [axis("k", "i"), axis("l", "j"), axis("o", "u")],
    grip: keys.has("g") ? 1 : 0,
    thumbstick: [
      axis("arrowleft", "arrowright"),
      axis("arrowdown", "arrowup"),
    ],
    trigger: false,
  };
}

function snapshot(): InputSnapshot {
  const shifted = keys.has("shift");
  const hand = shifted ? "right" : consoleState.activeHand;
  const snap: InputSnapshot = {
    left: keyboardHand(hand === "left"),
    right: keyboardHand(hand === "right"),
  };
  snap.left.trigger = pendingTrigger.left;
  snap.right.trigger = pendingTrigger.right;
  pendingTrigger = { left: false, right: false };
  return snap;
}

async function start() {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const url =
    new URLSearchParams(location.search).get("server") ??
    "ws://127.0.0.1:8766";

  const client = new RecordClient();
  client.onMessage = (env) => {
    consoleState = applyMessage(consoleState, env, performance.now());
  };
  client.onClose = () => {
    consoleState = onDisconnected(consoleState);
  };
  consoleState = { ...consoleState, connection: "connecting" };
  await client.connect(url);
  consoleState = onConnected(consoleState);

  window.addEventListener("keydown", (ev) => {
    const k = ev.key.toLowerCase();
    if (k === "tab") {
      ev.preventDefault();
      consoleState = {
        ...consoleState,
        activeHand: consoleState.activeHand === "left" ? "right" : "left",
      };
      return;
    }
    if (k === " ") {
      pendingTrigger[consoleState.activeHand] = true;
      return;
    }
    if (k === "r") void client.startRecording(`console_${Date.now()}`);
    if (k === "t") void client.stopRecording();
    keys.add(k);
  });
  window.addEventListener("keyup", (ev) => keys.delete(ev.key.toLowerCase()));

  let lastFrame = performance.now();
  const loop = (now: number) => {
    const dt = Math.min(0.1, (now - lastFrame) / 1000);
    lastFrame = now;
    if (consoleState.connection === "connected" && sendAllowed(lastSendMs, now)) {
      lastSendMs = now;
      const { left, right, next } = pollInput(
        snapshot(),
        inputState,
        DEFAULT_BINDING,
        dt,
      );
      inputState = next;
      void client.tick(left, right).catch(() => {});
    }
    render(ctx, consoleState, now);
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

void start();
