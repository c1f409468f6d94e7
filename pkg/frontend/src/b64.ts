/** Base64 <-> typed array helpers that work in both node and browsers. */
import { ArrayMsg } from "./schemas.js";

export function b64ToBytes(data: string): Uint8Array {
  if (typeof Buffer !== "undefined") {
    return new Uint8Array(Buffer.from(data, "base64"));
  }
  const bin = atob(data);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export type DecodedArray = {
  shape: number[];
  data: Uint8Array | Uint16Array | Float32Array | Float64Array;
};

/** Decode a wire array message ({shape, dtype, base64 data}). */
export function decodeArray(msg: ArrayMsg): DecodedArray {
  const bytes = b64ToBytes(msg.data);
  const buf = bytes.buffer.slice(
    bytes.byteOffset,
    bytes.byteOffset + bytes.byteLength,
  );
  const data =
    msg.dtype === "uint8"
      ? new Uint8Array(buf)
      : msg.dtype === "uint16"
        ? new Uint16Array(buf)
        : msg.dtype === "float32"
          ? new Float32Array(buf)
          : new Float64Array(buf);
  const expected = msg.shape.reduce((a, b) => a * b, 1);
  if (data.length !== expected) {
    throw new Error(
      `array payload has ${data.length} elements, shape wants ${expected}`,
    );
  }
  return { shape: msg.shape, data };
}
