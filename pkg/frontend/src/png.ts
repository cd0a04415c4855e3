/** Minimal 8-bit grayscale PNG codec.
 *
 * The encoder writes zlib stored (uncompressed) deflate blocks, which every
 * PNG reader accepts; scribble maps are tiny so compression buys nothing.
 * The decoder handles exactly that subset and exists for tests and tooling;
 * the browser UI reads server PNGs through a canvas instead.
 */

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];
const MAX_STORED = 0xffff;

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(value: number): Uint8Array {
  return new Uint8Array([
    (value >>> 24) & 0xff,
    (value >>> 16) & 0xff,
    (value >>> 8) & 0xff,
    value & 0xff,
  ]);
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const body = new Uint8Array(4 + data.length);
  for (let i = 0; i < 4; i++) body[i] = type.charCodeAt(i);
  body.set(data, 4);
  const out = new Uint8Array(8 + data.length + 4);
  out.set(u32be(data.length), 0);
  out.set(body, 4);
  out.set(u32be(crc32(body)), 8 + data.length);
  return out;
}

function zlibStored(raw: Uint8Array): Uint8Array {
  const blocks = Math.max(1, Math.ceil(raw.length / MAX_STORED));
  const out = new Uint8Array(2 + blocks * 5 + raw.length + 4);
  out[0] = 0x78; // deflate, 32k window
  out[1] = 0x01;
  let pos = 2;
  for (let i = 0; i < blocks; i++) {
    const start = i * MAX_STORED;
    const len = Math.min(MAX_STORED, raw.length - start);
    out[pos++] = i === blocks - 1 ? 1 : 0;
    out[pos++] = len & 0xff;
    out[pos++] = (len >>> 8) & 0xff;
    out[pos++] = ~len & 0xff;
    out[pos++] = (~len >>> 8) & 0xff;
    out.set(raw.subarray(start, start + len), pos);
    pos += len;
  }
  out.set(u32be(adler32(raw)), pos);
  return out;
}

/** Encode a row-major width*height grayscale buffer as a PNG. */
export function encodeGrayPng(width: number, height: number, data: Uint8Array): Uint8Array {
  if (width < 1 || height < 1) {
    throw new Error(`image size must be positive, got ${width}x${height}`);
  }
  if (data.length !== width * height) {
    throw new Error(`buffer has ${data.length} bytes, expected ${width * height}`);
  }
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: none
    raw.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(u32be(width), 0);
  ihdr.set(u32be(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // grayscale
  const parts = [
    new Uint8Array(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const p of parts) {
    out.set(p, pos);
    pos += p.length;
  }
  return out;
}

export interface GrayImage {
  width: number;
  height: number;
  data: Uint8Array;
}

/** Decode a PNG produced by encodeGrayPng (8-bit gray, stored blocks). */
export function decodeGrayPng(bytes: Uint8Array): GrayImage {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 8;
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  while (pos < bytes.length) {
    const len = view.getUint32(pos);
    const type = String.fromCharCode(...bytes.subarray(pos + 4, pos + 8));
    const body = bytes.subarray(pos + 4, pos + 8 + len);
    if (crc32(body) !== view.getUint32(pos + 8 + len)) {
      throw new Error(`bad CRC in ${type} chunk`);
    }
    const data = bytes.subarray(pos + 8, pos + 8 + len);
    if (type === "IHDR") {
      width = view.getUint32(pos + 8);
      height = view.getUint32(pos + 12);
      if (data[8] !== 8 || data[9] !== 0) {
        throw new Error("only 8-bit grayscale is supported");
      }
      if (data[12] !== 0) throw new Error("interlaced PNGs are not supported");
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (width === 0 || idat.length === 0) throw new Error("missing IHDR or IDAT");

  const z = new Uint8Array(idat.reduce((n, p) => n + p.length, 0));
  let zpos = 0;
  for (const p of idat) {
    z.set(p, zpos);
    zpos += p.length;
  }
  if ((z[0] & 0x0f) !== 8) throw new Error("not a zlib stream");

  const raw = new Uint8Array(height * (width + 1));
  let rpos = 0;
  let bpos = 2;
  for (;;) {
    const header = z[bpos];
    if ((header & 0x06) !== 0) throw new Error("only stored deflate blocks are supported");
    const len = z[bpos + 1] | (z[bpos + 2] << 8);
    raw.set(z.subarray(bpos + 5, bpos + 5 + len), rpos);
    rpos += len;
    bpos += 5 + len;
    if (header & 1) break;
  }
  if (rpos !== raw.length) {
    throw new Error(`decoded ${rpos} bytes, expected ${raw.length}`);
  }

  const data = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (width + 1)] !== 0) throw new Error("filtered rows are not supported");
    data.set(raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1)), y * width);
  }
  return { width, height, data };
}
