/**
 * Websocket client for the recording endpoint. In lockstep mode every
 * controller_state message advances the simulator one tick and the
 * server replies with the resulting observation, so a scripted trace is
 * bit-reproducible.
 *
 * Works in node (the `ws` package) and in browsers (native WebSocket).
 */
import {
  ControllerStateMsg,
  CtrlBody,
  decodeEnvelope,
  encodeEnvelope,
  Envelope,
  ObsBody,
} from "./schemas.js";

interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, fn: (ev: any) => void): void;
}

async function openSocket(url: string): Promise<SocketLike> {
  let sock: SocketLike;
  if (typeof WebSocket !== "undefined") {
    sock = new WebSocket(url) as unknown as SocketLike;
  } else {
    const { default: NodeWebSocket } = await import("ws");
    sock = new NodeWebSocket(url) as unknown as SocketLike;
  }
  await new Promise<void>((resolve, reject) => {
    sock.addEventListener("open", () => resolve());
    sock.addEventListener("error", (ev) =>
      reject(ev instanceof Error ? ev : new Error("websocket error")),
    );
  });
  return sock;
}

export class RecordClient {
  private sock: SocketLike | null = null;
  private pending: {
    resolve: (env: Envelope) => void;
    reject: (err: Error) => void;
  }[] = [];
  onMessage: ((env: Envelope) => void) | null = null;
  onClose: (() => void) | null = null;

  async connect(url: string): Promise<void> {
    const sock = await openSocket(url);
    sock.addEventListener("message", (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : ev.data.toString();
      let env: Envelope;
      try {
        env = decodeEnvelope(raw);
      } catch (e) {
        this.pending.shift()?.reject(e as Error);
        return;
      }
      this.onMessage?.(env);
      this.pending.shift()?.resolve(env);
    });
    sock.addEventListener("close", () => {
      for (const p of this.pending.splice(0)) {
        p.reject(new Error("connection closed"));
      }
      this.onClose?.();
    });
    this.sock = sock;
  }

  close(): void {
    this.sock?.close();
    this.sock = null;
  }

  /** Send a ctrl body and resolve with the server's next reply. */
  request(body: CtrlBody): Promise<Envelope> {
    if (!this.sock) return Promise.reject(new Error("not connected"));
    const reply = new Promise<Envelope>((resolve, reject) => {
      this.pending.push({ resolve, reject });
    });
    this.sock.send(encodeEnvelope({ type: "ctrl", body }));
    return reply;
  }

  async heartbeat(): Promise<void> {
    const env = await this.request({ kind: "heartbeat" });
    if (env.type !== "ctrl" || env.body.kind !== "ack") {
      throw new Error(`expected ack, got ${JSON.stringify(env)}`);
    }
  }

  async startRecording(name: string): Promise<string> {
    const env = await this.request({ kind: "start_record", name });
    if (env.type !== "ctrl" || env.body.kind !== "recording") {
      throw new Error(`expected recording ack, got ${JSON.stringify(env)}`);
    }
    return env.body.path;
  }

  async stopRecording(): Promise<string> {
    const env = await this.request({ kind: "stop_record" });
    if (env.type !== "ctrl" || env.body.kind !== "saved") {
      throw new Error(`expected saved ack, got ${JSON.stringify(env)}`);
    }
    return env.body.path;
  }

  /** One lockstep tick: send both controllers, get the observation. */
  async tick(
    left: ControllerStateMsg,
    right: ControllerStateMsg,
  ): Promise<ObsBody> {
    const env = await this.request({ kind: "controller_state", left, right });
    if (env.type === "err") {
      throw new Error(`server rejected tick: ${env.body.message}`);
    }
    if (env.type !== "obs") {
      throw new Error(`expected obs, got ${env.type}`);
    }
    return env.body;
  }
}
