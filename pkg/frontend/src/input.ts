/**
 * Input mapping: integrates gamepad/keyboard rates into virtual
 * controller poses and produces one ControllerState message pair per
 * poll. The virtual pose is rate-integrated (sticks command translation
 * and rotation velocities); grip is an analog passthrough in [0, 1].
 *
 * pollInput is a pure function of (snapshot, state, dt) so a scripted
 * input trace gives a deterministic pose trace.
 */
import {
  identityPose,
  poseToVec6,
  quatFromAxisAngle,
  quatMultiply,
  VirtualPose,
} from "./geometry.js";
import { ControllerStateMsg } from "./schemas.js";

export type Hand = "left" | "right";

/** One sampled state of the physical input device, per virtual controller. */
export interface HandInput {
  /** translation rate command in [-1, 1] per axis (x, y, z) */
  move: [number, number, number];
  /** rotation rate command in [-1, 1] per axis (roll, pitch, yaw) */
  rotate: [number, number, number];
  /** analog grip in [0, 1] */
  grip: number;
  /** thumb joint command in [-1, 1]^2 */
  thumbstick: [number, number];
  /** engage/pause toggle button */
  trigger: boolean;
}

export interface InputSnapshot {
  left: HandInput;
  right: HandInput;
}

export interface InputBinding {
  /** full stick deflection moves this fast, m/s */
  translationRate: number;
  /** full stick deflection rotates this fast, rad/s */
  rotationRate: number;
}

export const DEFAULT_BINDING: InputBinding = {
  translationRate: 0.25,
  rotationRate: 1.0,
};

export function idleHandInput(): HandInput {
  return {
    move: [0, 0, 0],
    rotate: [0, 0, 0],
    grip: 0,
    thumbstick: [0, 0],
    trigger: false,
  };
}

export interface InputState {
  poses: { left: VirtualPose; right: VirtualPose };
  time: number;
}

export function initialInputState(): InputState {
  return { poses: { left: identityPose(), right: identityPose() }, time: 0 };
}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

function integrateHand(
  pose: VirtualPose,
  input: HandInput,
  binding: InputBinding,
  dt: number,
): VirtualPose {
  const t = pose.translation;
  const translation: [number, number, number] = [
    t[0] + clamp(input.move[0], -1, 1) * binding.translationRate * dt,
    t[1] + clamp(input.move[1], -1, 1) * binding.translationRate * dt,
    t[2] + clamp(input.move[2], -1, 1) * binding.translationRate * dt,
  ];
  const delta = quatFromAxisAngle([
    clamp(input.rotate[0], -1, 1) * binding.rotationRate * dt,
    clamp(input.rotate[1], -1, 1) * binding.rotationRate * dt,
    clamp(input.rotate[2], -1, 1) * binding.rotationRate * dt,
  ]);
  return { translation, rotation: quatMultiply(delta, pose.rotation) };
}

function toMessage(pose: VirtualPose, input: HandInput, time: number): ControllerStateMsg {
  return {
    pose: poseToVec6(pose),
    grip: clamp(input.grip, 0, 1),
    thumbstick: [
      clamp(input.thumbstick[0], -1, 1),
      clamp(input.thumbstick[1], -1, 1),
    ],
    trigger: input.trigger,
    timestamp: time,
  };
}

/**
 * Advance both virtual controllers by dt and emit the message pair.
 * Mutates nothing: returns the next state alongside the messages.
 */
export function pollInput(
  snapshot: InputSnapshot,
  state: InputState,
  binding: InputBinding,
  dt: number,
): { left: ControllerStateMsg; right: ControllerStateMsg; next: InputState } {
  const nextPoses = {
    left: integrateHand(state.poses.left, snapshot.left, binding, dt),
    right: integrateHand(state.poses.right, snapshot.right, binding, dt),
  };
  const time = state.time + dt;
  return {
    left: toMessage(nextPoses.left, snapshot.left, time),
    right: toMessage(nextPoses.right, snapshot.right, time),
    next: { poses: nextPoses, time },
  };
}
