/**
 * Zod mirrors of the JSON wire protocol (schemas/ at the repo root).
 *
 * Envelope: {"type": "obs" | "chunk" | "ctrl" | "err", "body": {...}}.
 * Every message the console sends is validated against these before it
 * goes on the wire, and every received message before it touches state.
 */
import { z } from "zod";

export const vec6 = z.array(z.number()).length(6);
export type Vec6 = z.infer<typeof vec6>;

export const controllerStateSchema = z
  .object({
    pose: vec6,
    grip: z.number().min(0).max(1),
    thumbstick: z.array(z.number().min(-1).max(1)).length(2),
    trigger: z.boolean(),
    timestamp: z.number().optional(),
  })
  .strict();
export type ControllerStateMsg = z.infer<typeof controllerStateSchema>;

/** Binary array payload: base64 of the raw bytes with declared shape. */
export const arraySchema = z
  .object({
    shape: z.array(z.number().int().nonnegative()),
    dtype: z.enum(["uint8", "uint16", "float32", "float64"]),
    data: z.string(),
  })
  .strict();
export type ArrayMsg = z.infer<typeof arraySchema>;

export const obsBodySchema = z
  .object({
    seq: z.number().int().nonnegative(),
    timestep: z.number().int().nonnegative(),
    eef_left: vec6,
    eef_right: vec6,
    arm_q_left: vec6,
    arm_q_right: vec6,
    hand_q_left: vec6,
    hand_q_right: vec6,
    touch: z.union([z.null(), z.array(z.number()).length(60)]),
    images: z.record(z.union([z.null(), arraySchema])),
    depths: z.record(z.union([z.null(), arraySchema])),
    engaged: z.object({ left: z.boolean(), right: z.boolean() }).optional(),
    recording: z.boolean().optional(),
  })
  .strict();
export type ObsBody = z.infer<typeof obsBodySchema>;

export const chunkBodySchema = z
  .object({
    based_on_timestep: z.number().int().nonnegative(),
    chunk: z.array(z.array(z.number()).min(1)).length(16),
    model_seq: z.number().int().nonnegative().optional(),
  })
  .strict();
export type ChunkBody = z.infer<typeof chunkBodySchema>;

export const ctrlBodySchema = z.discriminatedUnion("kind", [
  z.object({ kind: z.literal("heartbeat") }).strict(),
  z.object({ kind: z.literal("ack") }).strict(),
  z.object({ kind: z.literal("start_record"), name: z.string() }).strict(),
  z.object({ kind: z.literal("recording"), path: z.string() }).strict(),
  z.object({ kind: z.literal("stop_record") }).strict(),
  z.object({ kind: z.literal("saved"), path: z.string() }).strict(),
  z
    .object({
      kind: z.literal("controller_state"),
      left: controllerStateSchema,
      right: controllerStateSchema,
    })
    .strict(),
]);
export type CtrlBody = z.infer<typeof ctrlBodySchema>;

export const errBodySchema = z.object({ message: z.string() }).strict();
export type ErrBody = z.infer<typeof errBodySchema>;

export const envelopeSchema = z.discriminatedUnion("type", [
  z.object({ type: z.literal("obs"), body: obsBodySchema }).strict(),
  z.object({ type: z.literal("chunk"), body: chunkBodySchema }).strict(),
  z.object({ type: z.literal("ctrl"), body: ctrlBodySchema }).strict(),
  z.object({ type: z.literal("err"), body: errBodySchema }).strict(),
]);
export type Envelope = z.infer<typeof envelopeSchema>;

export function encodeEnvelope(env: Envelope): string {
  return JSON.stringify(envelopeSchema.parse(env));
}

export function decodeEnvelope(raw: string): Envelope {
  return envelopeSchema.parse(JSON.parse(raw));
}
