/**
 * Console round trip against the real recording server: a scripted input
 * trace streamed over the websocket must produce an episode file that is
 * byte-identical to feeding the same ControllerState trace directly to
 * the teleop recorder. The console adds transport, not semantics.
 */
import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";

const TEST_DIR = dirname(fileURLToPath(import.meta.url));
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { RecordClient } from "../src/client.js";
import {
  DEFAULT_BINDING,
  idleHandInput,
  initialInputState,
  InputSnapshot,
  pollInput,
} from "../src/input.js";
import { ControllerStateMsg, obsBodySchema } from "../src/schemas.js";

const HEIGHT = 12;
const WIDTH = 16;
const TICKS = 25;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address();
      if (addr && typeof addr === "object") {
        const port = addr.port;
        srv.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

/** Deterministic scripted session: engage, move, grip, pause, resume. */
function scriptedTrace(): { left: ControllerStateMsg; right: ControllerStateMsg }[] {
  let state = initialInputState();
  const out = [];
  for (let i = 0; i < TICKS; i++) {
    const snap: InputSnapshot = {
      left: idleHandInput(),
      right: idleHandInput(),
    };
    snap.left.trigger = i === 1 || i === 12 || i === 15; // engage, pause, resume
    snap.right.trigger = i === 1;
    snap.left.move = [Math.sin(i / 4) * 0.5, 0.2, i < 10 ? 0.4 : -0.2];
    snap.right.move = [0.3, -0.1, 0.2];
    snap.left.grip = i >= 8 && i < 14 ? 1.0 : 0.0;
    snap.right.grip = i >= 10 ? 0.6 : 0.0;
    snap.left.thumbstick = [0.5, -0.5];
    const { left, right, next } = pollInput(snap, state, DEFAULT_BINDING, 0.1);
    state = next;
    out.push({ left, right });
  }
  return out;
}

describe("console round trip", () => {
  let server: ChildProcess;
  let port: number;
  const consoleDir = mkdtempSync(join(tmpdir(), "console-rec-"));
  const directDir = mkdtempSync(join(tmpdir(), "direct-rec-"));

  beforeAll(async () => {
    port = await freePort();
    server = spawn(
      "python3",
      [
        "-m", "bimanu.cli", "--seed", "0", "record",
        "--task", "handover", "--out", consoleDir,
        "--bind", `127.0.0.1:${port}`, "--lockstep", "--no-depth",
        "--height", String(HEIGHT), "--width", String(WIDTH),
      ],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("record server never came up")),
        30000,
      );
      server.stdout!.on("data", (d: Buffer) => {
        if (d.toString().includes("listening")) {
          clearTimeout(timer);
          resolve();
        }
      });
      server.on("exit", (code) =>
        reject(new Error(`record server exited early: ${code}`)),
      );
    });
  }, 40000);

  afterAll(() => {
    server?.kill();
  });

  it("episode equals direct ControllerState injection, byte for byte", async () => {
    const trace = scriptedTrace();

    // path 1: through the websocket console client
    const client = new RecordClient();
    await client.connect(`ws://127.0.0.1:${port}`);
    await client.heartbeat();
    const consolePath = await client.startRecording("roundtrip");
    let sawEngaged = false;
    for (const { left, right } of trace) {
      const obs = await client.tick(left, right);
      expect(() => obsBodySchema.parse(obs)).not.toThrow();
      expect(obs.recording).toBe(true);
      if (obs.engaged?.left) sawEngaged = true;
    }
    expect(sawEngaged).toBe(true);
    const savedPath = await client.stopRecording();
    expect(savedPath).toBe(consolePath);
    client.close();

    // path 2: the same trace fed directly to the teleop recorder
    const specFile = join(directDir, "trace.json");
    writeFileSync(
      specFile,
      JSON.stringify({
        task: "handover",
        seed: 0,
        height: HEIGHT,
        width: WIDTH,
        with_depth: false,
        out_dir: directDir,
        name: "roundtrip",
        trace,
      }),
    );
    const res = spawnSync(
      "python3",
      [join(TEST_DIR, "replay_trace.py"), specFile],
      { encoding: "utf8", timeout: 120000 },
    );
    expect(res.status, res.stderr).toBe(0);
    const directPath = res.stdout.trim().split("\n").at(-1)!;

    const a = readFileSync(savedPath);
    const b = readFileSync(directPath);
    expect(a.equals(b)).toBe(true);
  }, 120000);

  it("malformed messages get an err frame and the connection survives", async () => {
    const ws = new WebSocket(`ws://127.0.0.1:${port}`);
    await new Promise<void>((resolve) => ws.on("open", () => resolve()));
    const nextMessage = () =>
      new Promise<any>((resolve) =>
        ws.once("message", (d) => resolve(JSON.parse(d.toString()))),
      );
    ws.send("not json at all");
    const err = await nextMessage();
    expect(err.type).toBe("err");
    expect(typeof err.body.message).toBe("string");
    // connection still works afterwards
    ws.send(JSON.stringify({ type: "ctrl", body: { kind: "heartbeat" } }));
    const ack = await nextMessage();
    expect(ack).toEqual({ type: "ctrl", body: { kind: "ack" } });
    ws.close();
  }, 30000);
});
