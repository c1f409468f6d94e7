/**
 * Minimal quaternion / axis-angle helpers for the virtual controller
 * pose. Poses travel on the wire as a 6-vector: translation (m)
 * concatenated with axis-angle (axis * angle, canonical angle in [0, pi]).
 */

export type Quat = [number, number, number, number]; // (w, x, y, z)

export const QUAT_IDENTITY: Quat = [1, 0, 0, 0];

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatFromAxisAngle(v: [number, number, number]): Quat {
  const angle = Math.hypot(v[0], v[1], v[2]);
  if (angle < 1e-12) return [1, 0, 0, 0];
  const s = Math.sin(angle / 2) / angle;
  return [Math.cos(angle / 2), v[0] * s, v[1] * s, v[2] * s];
}

/** Canonical axis-angle (angle in [0, pi]) of a unit quaternion. */
export function quatToAxisAngle(q: Quat): [number, number, number] {
  let [w, x, y, z] = q;
  if (w < 0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  const norm = Math.hypot(x, y, z);
  if (norm < 1e-12) return [0, 0, 0];
  const angle = 2 * Math.atan2(norm, w);
  return [(x / norm) * angle, (y / norm) * angle, (z / norm) * angle];
}

export interface VirtualPose {
  translation: [number, number, number];
  rotation: Quat;
}

export function identityPose(): VirtualPose {
  return { translation: [0, 0, 0], rotation: [...QUAT_IDENTITY] };
}

export function poseToVec6(p: VirtualPose): number[] {
  return [...p.translation, ...quatToAxisAngle(p.rotation)];
}
