// Interaction logic behind the page, kept free of DOM so it can be tested
// against a fake server: slider moves throttle into /enhance calls, painted
// regions build an alpha-field payload, stale responses never overwrite
// newer ones, and a failed call leaves the last good output in place.

import type { ApiClient, EnhanceResult, PlaneKind } from "./api.js";
import { isEmptyMask, rasterizeField, type Region } from "./alphaField.js";
import { encodeGrayPng } from "./png.js";
import { SequenceGate, TrailingThrottle } from "./scheduler.js";

export type CompareMode = "side-by-side" | "toggle" | "split-wipe";

export interface ViewerState {
  volumeId: string | null;
  planeKind: PlaneKind;
  sliceIndex: number;
  globalAlpha: number;
  regions: Region[];
  compareMode: CompareMode;
}

export interface InputImage {
  png: Uint8Array;
  width: number;
  height: number;
}

export interface ViewerHooks {
  onOutput(result: EnhanceResult): void;
  onError(message: string): void;
  onBusy(inFlight: boolean): void;
}

export const MAX_REQUESTS_PER_SECOND = 4;

export class ViewerController {
  readonly state: ViewerState = {
    volumeId: null,
    planeKind: "A",
    sliceIndex: 0,
    globalAlpha: 0,
    regions: [],
    compareMode: "side-by-side",
  };

  private input: InputImage | null = null;
  private readonly throttle: TrailingThrottle;
  private readonly gate = new SequenceGate();
  private inFlight = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly hooks: ViewerHooks,
  ) {
    this.throttle = new TrailingThrottle(1000 / MAX_REQUESTS_PER_SECOND);
  }

  get inputImage(): InputImage | null {
    return this.input;
  }

  loadInput(image: InputImage): void {
    this.input = image;
    this.state.regions = [];
    this.throttle.cancel();
  }

  setAlpha(alpha: number): void {
    if (alpha < 0 || alpha > 1) {
      throw new RangeError(`alpha must lie in [0, 1], got ${alpha}`);
    }
    this.state.globalAlpha = alpha;
    if (this.input === null) {
      return;
    }
    this.throttle.schedule(() => {
      void this.fire({ alpha: this.state.globalAlpha });
    });
  }

  /** Record one painted stroke; an empty mask is dropped. */
  paintRegion(mask: Uint8Array, alpha: number): boolean {
    if (isEmptyMask(mask)) {
      return false;
    }
    this.state.regions.push({ mask: mask.slice(), alpha });
    return true;
  }

  clearRegions(): void {
    this.state.regions = [];
  }

  /** Send all painted regions as one alpha-field request. */
  commitRegions(): void {
    if (this.input === null || this.state.regions.length === 0) {
      return;
    }
    const { width, height } = this.input;
    const field = rasterizeField(this.state.regions, 0, width, height);
    const png = encodeGrayPng(width, height, field.bytes);
    this.throttle.schedule(() => {
      void this.fire({ alphaField: { png, regions: field.table } });
    });
  }

  private async fire(control: { alpha?: number; alphaField?: { png: Uint8Array; regions: { alpha: number; pixels: number }[] } }): Promise<void> {
    if (this.input === null) {
      return;
    }
    const seq = this.gate.claim();
    this.inFlight++;
    this.hooks.onBusy(true);
    try {
      const result = await this.api.enhance({ imagePng: this.input.png, ...control });
      if (this.gate.accept(seq)) {
        this.hooks.onOutput(result);
      }
    } catch (err) {
      this.hooks.onError(err instanceof Error ? err.message : String(err));
    } finally {
      this.inFlight--;
      this.hooks.onBusy(this.inFlight > 0);
    }
  }
}
