// Client-side rasterization of painted regions into a per-pixel strength
// field. Mirrors the server's painting rule: regions land in paint order,
// so overlapping strokes resolve to the last one painted.

export interface Region {
  mask: Uint8Array; // length width*height, nonzero marks painted pixels
  alpha: number;
}

export interface RegionEntry {
  alpha: number;
  pixels: number;
}

export interface RasterizedField {
  width: number;
  height: number;
  bytes: Uint8Array; // quantized strengths, one byte per pixel
  table: RegionEntry[];
}

/** The PNG carrier holds alpha at 1/255 granularity. */
export function quantizeAlpha(alpha: number): number {
  return Math.round(alpha * 255);
}

export function isEmptyMask(mask: Uint8Array): boolean {
  return !mask.some((v) => v !== 0);
}

export function rasterizeField(
  regions: readonly Region[],
  defaultAlpha: number,
  width: number,
  height: number,
): RasterizedField {
  if (defaultAlpha < 0 || defaultAlpha > 1) {
    throw new RangeError(`default alpha must lie in [0, 1], got ${defaultAlpha}`);
  }
  const bytes = new Uint8Array(width * height).fill(quantizeAlpha(defaultAlpha));
  const table: RegionEntry[] = [];
  regions.forEach((region, k) => {
    if (region.alpha < 0 || region.alpha > 1) {
      throw new RangeError(`region ${k} alpha must lie in [0, 1], got ${region.alpha}`);
    }
    if (region.mask.length !== width * height) {
      throw new RangeError(
        `region ${k} mask length ${region.mask.length} does not match ${width}x${height}`,
      );
    }
    const value = quantizeAlpha(region.alpha);
    let pixels = 0;
    for (let i = 0; i < region.mask.length; i++) {
      if (region.mask[i] !== 0) {
        bytes[i] = value;
        pixels++;
      }
    }
    table.push({ alpha: region.alpha, pixels });
  });
  return { width, height, bytes, table };
}
