import { describe, expect, it } from "vitest";
import * as zlib from "node:zlib";

import { crc32, decodeGrayPng, encodeGrayPng } from "../src/png.js";

const inflate = (data: Uint8Array) => new Uint8Array(zlib.inflateSync(data));

function randomPixels(n: number, seed: number): Uint8Array {
  // small LCG so tests are reproducible without a dependency
  const out = new Uint8Array(n);
  let state = seed >>> 0;
  for (let i = 0; i < n; i++) {
    state = (state * 1664525 + 1013904223) >>> 0;
    out[i] = state >>> 24;
  }
  return out;
}

describe("encodeGrayPng", () => {
  it("round trips through our own decoder", () => {
    const pixels = randomPixels(24 * 16, 1);
    const image = decodeGrayPng(encodeGrayPng(16, 24, pixels), inflate);
    expect(image.width).toBe(16);
    expect(image.height).toBe(24);
    expect(image.pixels).toEqual(pixels);
  });

  it("zlib stream is valid for a standard inflater", () => {
    const pixels = randomPixels(9, 2);
    const bytes = encodeGrayPng(3, 3, pixels);
    // IDAT is the second chunk: signature(8) + IHDR(25)
    const idatLength = (bytes[33] << 24) | (bytes[34] << 16) | (bytes[35] << 8) | bytes[36];
    const idat = bytes.subarray(41, 41 + idatLength);
    const raw = new Uint8Array(zlib.inflateSync(idat));
    expect(raw.length).toBe((3 + 1) * 3);
    expect(raw[0]).toBe(0); // filter byte None
    expect(Array.from(raw.subarray(1, 4))).toEqual(Array.from(pixels.subarray(0, 3)));
  });

  it("handles images larger than one stored deflate block", () => {
    const pixels = randomPixels(300 * 300, 3);
    const image = decodeGrayPng(encodeGrayPng(300, 300, pixels), inflate);
    expect(image.pixels).toEqual(pixels);
  });

  it("is deterministic", () => {
    const pixels = randomPixels(64, 4);
    expect(encodeGrayPng(8, 8, pixels)).toEqual(encodeGrayPng(8, 8, pixels));
  });

  it("rejects a mismatched buffer", () => {
    expect(() => encodeGrayPng(4, 4, new Uint8Array(15))).toThrow(RangeError);
  });
});

describe("crc32", () => {
  it("matches the reference value for the check string", () => {
    const data = new TextEncoder().encode("123456789");
    expect(crc32(data)).toBe(0xcbf43926);
  });

  it("matches node's implementation on random data", () => {
    for (const seed of [5, 6, 7]) {
      const data = randomPixels(1000 + seed, seed);
      expect(crc32(data)).toBe(Number(zlib.crc32(data)));
    }
  });
});

describe("decodeGrayPng", () => {
  function buildPng(width: number, height: number, filtered: Uint8Array): Uint8Array {
    // assemble a PNG whose IDAT is zlib-compressed (as a server would emit)
    const header = new Uint8Array(13);
    const view = new DataView(header.buffer);
    view.setUint32(0, width);
    view.setUint32(4, height);
    header.set([8, 0, 0, 0, 0], 8);
    const chunks: Uint8Array[] = [Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10])];
    for (const [type, data] of [["IHDR", header], ["IDAT", new Uint8Array(zlib.deflateSync(filtered))], ["IEND", new Uint8Array(0)]] as const) {
      const body = new Uint8Array(4 + data.length);
      body.set(new TextEncoder().encode(type), 0);
      body.set(data, 4);
      const len = new Uint8Array(4);
      new DataView(len.buffer).setUint32(0, data.length);
      const crc = new Uint8Array(4);
      new DataView(crc.buffer).setUint32(0, crc32(body));
      chunks.push(len, body, crc);
    }
    const total = chunks.reduce((n, c) => n + c.length, 0);
    const out = new Uint8Array(total);
    let at = 0;
    for (const c of chunks) {
      out.set(c, at);
      at += c.length;
    }
    return out;
  }

  function filterRow(filter: number, row: Uint8Array, prev: Uint8Array | null): Uint8Array {
    // reference implementation of the PNG filters, applied forward
    const out = new Uint8Array(row.length + 1);
    out[0] = filter;
    for (let x = 0; x < row.length; x++) {
      const left = x > 0 ? row[x - 1] : 0;
      const up = prev ? prev[x] : 0;
      const corner = x > 0 && prev ? prev[x - 1] : 0;
      let predictor = 0;
      if (filter === 1) predictor = left;
      else if (filter === 2) predictor = up;
      else if (filter === 3) predictor = (left + up) >> 1;
      else if (filter === 4) {
        const p = left + up - corner;
        const pa = Math.abs(p - left);
        const pb = Math.abs(p - up);
        const pc = Math.abs(p - corner);
        predictor = pa <= pb && pa <= pc ? left : pb <= pc ? up : corner;
      }
      out[x + 1] = (row[x] - predictor) & 0xff;
    }
    return out;
  }

  it("unfilters every filter type", () => {
    const width = 11;
    const height = 5;
    const pixels = randomPixels(width * height, 8);
    for (const filter of [0, 1, 2, 3, 4]) {
      const filtered = new Uint8Array((width + 1) * height);
      for (let row = 0; row < height; row++) {
        const cur = pixels.subarray(row * width, (row + 1) * width);
        const prev = row > 0 ? pixels.subarray((row - 1) * width, row * width) : null;
        filtered.set(filterRow(filter, cur, prev), row * (width + 1));
      }
      const image = decodeGrayPng(buildPng(width, height, filtered), inflate);
      expect(image.pixels, `filter ${filter}`).toEqual(pixels);
    }
  });

  it("handles mixed filters per row", () => {
    const width = 7;
    const height = 5;
    const pixels = randomPixels(width * height, 9);
    const filtered = new Uint8Array((width + 1) * height);
    const mix = [0, 1, 4, 2, 3];
    for (let row = 0; row < height; row++) {
      const cur = pixels.subarray(row * width, (row + 1) * width);
      const prev = row > 0 ? pixels.subarray((row - 1) * width, row * width) : null;
      filtered.set(filterRow(mix[row], cur, prev), row * (width + 1));
    }
    expect(decodeGrayPng(buildPng(width, height, filtered), inflate).pixels).toEqual(pixels);
  });

  it("rejects non-PNG bytes and non-grayscale files", () => {
    expect(() => decodeGrayPng(new Uint8Array([1, 2, 3]), inflate)).toThrow("not a PNG");
    const rgbHeader = new Uint8Array(13);
    new DataView(rgbHeader.buffer).setUint32(0, 2);
    new DataView(rgbHeader.buffer).setUint32(4, 2);
    rgbHeader.set([8, 2, 0, 0, 0], 8); // color type 2 = RGB
    const png = buildPng(2, 2, new Uint8Array(6));
    png.set(rgbHeader, 16); // overwrite IHDR payload
    expect(() => decodeGrayPng(png, inflate)).toThrow("grayscale");
  });
});
