import { describe, expect, it } from "vitest";

import { decodeGrayPng, encodeGrayPng } from "../src/png.js";

function randomBytes(n: number, seed: number): Uint8Array {
  // xorshift32, good enough to fill test buffers deterministically
  const out = new Uint8Array(n);
  let x = seed || 1;
  for (let i = 0; i < n; i++) {
    x ^= x << 13;
    x ^= x >>> 17;
    x ^= x << 5;
    out[i] = x & 0xff;
  }
  return out;
}

describe("encodeGrayPng", () => {
  it("starts with the PNG signature and a valid grayscale IHDR", () => {
    const png = encodeGrayPng(3, 2, new Uint8Array([0, 1, 2, 3, 4, 5]));
    expect(Array.from(png.subarray(0, 8))).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
    const view = new DataView(png.buffer);
    expect(view.getUint32(8)).toBe(13); // IHDR length
    expect(view.getUint32(16)).toBe(3); // width
    expect(view.getUint32(20)).toBe(2); // height
    expect(png[24]).toBe(8); // bit depth
    expect(png[25]).toBe(0); // grayscale
  });

  it("rejects a buffer that does not match the size", () => {
    expect(() => encodeGrayPng(4, 4, new Uint8Array(15))).toThrow(/expected 16/);
    expect(() => encodeGrayPng(0, 4, new Uint8Array(0))).toThrow(/positive/);
  });
});

describe("decodeGrayPng", () => {
  it("round-trips small images exactly", () => {
    const data = new Uint8Array([0, 1, 2, 255, 7, 130]);
    const decoded = decodeGrayPng(encodeGrayPng(2, 3, data));
    expect(decoded.width).toBe(2);
    expect(decoded.height).toBe(3);
    expect(Array.from(decoded.data)).toEqual(Array.from(data));
  });

  it("round-trips images larger than one stored deflate block", () => {
    // 260 * 260 + filter bytes > 65535, so the stream needs two blocks
    const data = randomBytes(260 * 260, 42);
    const decoded = decodeGrayPng(encodeGrayPng(260, 260, data));
    expect(decoded.data).toEqual(data);
  });

  it("rejects non-PNG bytes", () => {
    expect(() => decodeGrayPng(new Uint8Array([1, 2, 3, 4, 5, 6, 7, 8, 9]))).toThrow(
      /not a PNG/,
    );
  });

  it("rejects corrupted chunks", () => {
    const png = encodeGrayPng(4, 4, randomBytes(16, 7));
    png[20] ^= 0xff; // flip a byte inside IHDR
    expect(() => decodeGrayPng(png)).toThrow(/CRC/);
  });
});
