// Minimal 8-bit grayscale PNG codec.
//
// The encoder emits stored (uncompressed) deflate blocks, so it needs no
// compression library and its output is deterministic byte for byte. The
// decoder handles any spec-compliant grayscale file but delegates the
// zlib stream to an injected inflate function: node:zlib in tests,
// DecompressionStream in the browser.

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

export type Inflate = (zlibStream: Uint8Array) => Uint8Array;

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c;
  }
  return table;
})();

export function crc32(bytes: Uint8Array): number {
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

class ByteWriter {
  private parts: Uint8Array[] = [];

  push(bytes: Uint8Array | number[]): void {
    this.parts.push(bytes instanceof Uint8Array ? bytes : Uint8Array.from(bytes));
  }

  pushU32(value: number): void {
    this.push([(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff]);
  }

  concat(): Uint8Array {
    const total = this.parts.reduce((n, p) => n + p.length, 0);
    const out = new Uint8Array(total);
    let at = 0;
    for (const part of this.parts) {
      out.set(part, at);
      at += part.length;
    }
    return out;
  }
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const w = new ByteWriter();
  w.pushU32(data.length);
  const body = new Uint8Array(4 + data.length);
  for (let i = 0; i < 4; i++) {
    body[i] = type.charCodeAt(i);
  }
  body.set(data, 4);
  w.push(body);
  w.pushU32(crc32(body));
  return w.concat();
}

/** Wrap raw bytes in a zlib stream of stored deflate blocks. */
function storedZlib(raw: Uint8Array): Uint8Array {
  const w = new ByteWriter();
  w.push([0x78, 0x01]);
  const blockMax = 0xffff;
  const blocks = Math.max(1, Math.ceil(raw.length / blockMax));
  for (let b = 0; b < blocks; b++) {
    const slice = raw.subarray(b * blockMax, Math.min((b + 1) * blockMax, raw.length));
    const final = b === blocks - 1 ? 1 : 0;
    w.push([final, slice.length & 0xff, slice.length >>> 8, ~slice.length & 0xff, (~slice.length >>> 8) & 0xff]);
    w.push(slice);
  }
  w.pushU32(adler32(raw));
  return w.concat();
}

export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  if (width <= 0 || height <= 0 || pixels.length !== width * height) {
    throw new RangeError(`pixel buffer length ${pixels.length} does not match ${width}x${height}`);
  }
  const ihdr = new ByteWriter();
  ihdr.pushU32(width);
  ihdr.pushU32(height);
  ihdr.push([8, 0, 0, 0, 0]); // bit depth 8, grayscale, deflate, adaptive, no interlace

  // filter byte 0 (None) before every scanline
  const raw = new Uint8Array((width + 1) * height);
  for (let row = 0; row < height; row++) {
    raw.set(pixels.subarray(row * width, (row + 1) * width), row * (width + 1) + 1);
  }

  const out = new ByteWriter();
  out.push(SIGNATURE);
  out.push(chunk("IHDR", ihdr.concat()));
  out.push(chunk("IDAT", storedZlib(raw)));
  out.push(chunk("IEND", new Uint8Array(0)));
  return out.concat();
}

function readU32(bytes: Uint8Array, at: number): number {
  return ((bytes[at] << 24) | (bytes[at + 1] << 16) | (bytes[at + 2] << 8) | bytes[at + 3]) >>> 0;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

/** Undo per-row PNG filtering in place for 1-byte-per-pixel scanlines. */
function unfilter(raw: Uint8Array, width: number, height: number): Uint8Array {
  const stride = width + 1;
  if (raw.length < stride * height) {
    throw new Error("PNG pixel data is truncated");
  }
  const pixels = new Uint8Array(width * height);
  for (let row = 0; row < height; row++) {
    const filter = raw[row * stride];
    const line = raw.subarray(row * stride + 1, row * stride + 1 + width);
    const out = pixels.subarray(row * width, (row + 1) * width);
    const above = row > 0 ? pixels.subarray((row - 1) * width, row * width) : null;
    for (let x = 0; x < width; x++) {
      const left = x > 0 ? out[x - 1] : 0;
      const up = above ? above[x] : 0;
      const corner = x > 0 && above ? above[x - 1] : 0;
      let value: number;
      switch (filter) {
        case 0: value = line[x]; break;
        case 1: value = line[x] + left; break;
        case 2: value = line[x] + up; break;
        case 3: value = line[x] + ((left + up) >> 1); break;
        case 4: value = line[x] + paeth(left, up, corner); break;
        default: throw new Error(`unsupported PNG filter type ${filter}`);
      }
      out[x] = value & 0xff;
    }
  }
  return pixels;
}

export function decodeGrayPng(bytes: Uint8Array, inflate: Inflate): GrayImage {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) {
      throw new Error("not a PNG file");
    }
  }
  let at = SIGNATURE.length;
  let width = 0;
  let height = 0;
  let sawHeader = false;
  const idat: Uint8Array[] = [];
  while (at + 8 <= bytes.length) {
    const length = readU32(bytes, at);
    const type = String.fromCharCode(bytes[at + 4], bytes[at + 5], bytes[at + 6], bytes[at + 7]);
    const data = bytes.subarray(at + 8, at + 8 + length);
    if (type === "IHDR") {
      width = readU32(data, 0);
      height = readU32(data, 4);
      const [depth, color, , , interlace] = [data[8], data[9], data[10], data[11], data[12]];
      if (depth !== 8 || color !== 0) {
        throw new Error(`expected 8-bit grayscale, got depth ${depth} color type ${color}`);
      }
      if (interlace !== 0) {
        throw new Error("interlaced PNGs are not supported");
      }
      sawHeader = true;
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    at += 12 + length;
  }
  if (!sawHeader || idat.length === 0) {
    throw new Error("PNG is missing IHDR or IDAT");
  }
  const stream = new Uint8Array(idat.reduce((n, p) => n + p.length, 0));
  let cursor = 0;
  for (const part of idat) {
    stream.set(part, cursor);
    cursor += part.length;
  }
  return { width, height, pixels: unfilter(inflate(stream), width, height) };
}
