// Page assembly: wires DOM controls to the ViewerController and renders
// input/output panes in the three compare modes.

import { ApiClient, type EnhanceResult } from "./api.js";
import { bytesToBase64 } from "./base64.js";
import { ViewerController, type CompareMode } from "./viewer.js";

const REGION_COLORS = ["#2e9e4f", "#8e44ad", "#2e6da4", "#e08a1e"];
const BUSY_DELAY_MS = 150;

function el<K extends keyof HTMLElementTagNameMap>(tag: K, attrs: Record<string, string> = {}, text = ""): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function pngUrl(bytes: Uint8Array): string {
  return `data:image/png;base64,${bytesToBase64(bytes)}`;
}

class Toast {
  private readonly node = el("div", { class: "toast hidden" });
  private timer: ReturnType<typeof setTimeout> | null = null;

  mount(parent: HTMLElement): void {
    parent.appendChild(this.node);
  }

  show(message: string): void {
    this.node.textContent = message;
    this.node.classList.remove("hidden");
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => this.node.classList.add("hidden"), 4000);
  }
}

class App {
  private readonly api = new ApiClient("");
  private readonly toast = new Toast();
  private controller: ViewerController;

  private readonly inputPane = el("img", { class: "pane", alt: "input plane" });
  private readonly outputPane = el("img", { class: "pane", alt: "enhanced output" });
  private readonly overlay = el("canvas", { class: "overlay" });
  private readonly latencyLabel = el("span", { class: "muted" });
  private readonly statusLabel = el("span", { class: "muted" });
  private readonly busyDot = el("span", { class: "busy hidden" }, "working…");
  private readonly compareRoot = el("div", { class: "panes side-by-side" });
  private readonly wipeRange = el("input", { type: "range", min: "0", max: "100", value: "50", class: "hidden" });

  private volumeShape: [number, number, number] | null = null;
  private mask: Uint8Array | null = null;
  private painting = false;
  private busyTimer: ReturnType<typeof setTimeout> | null = null;
  private toggleShowsOutput = true;
  private regionCount = 0;
  private syncIndexBound: (() => void) | null = null;

  constructor(private readonly root: HTMLElement) {
    this.controller = new ViewerController(this.api, {
      onOutput: (result) => this.renderOutput(result),
      onError: (message) => this.toast.show(message),
      onBusy: (inFlight) => this.renderBusy(inFlight),
    });
    this.build();
    void this.refreshHealth();
  }

  private build(): void {
    const sidebar = el("div", { class: "sidebar" });

    const upload = el("input", { type: "file", accept: ".zip" });
    upload.addEventListener("change", () => void this.onUpload(upload));
    sidebar.append(el("label", {}, "Volume archive"), upload);

    const kind = el("select", {});
    for (const k of ["A", "B", "C"]) {
      kind.appendChild(el("option", { value: k }, `${k}-plane`));
    }
    const index = el("input", { type: "number", min: "0", value: "0" });
    // A planes index elevation, B lateral, C axial; cap the spinner accordingly.
    this.syncIndexBound = () => {
      if (!this.volumeShape) {
        return;
      }
      const axis = { A: 2, B: 1, C: 0 }[kind.value as "A" | "B" | "C"];
      const top = this.volumeShape[axis] - 1;
      index.max = String(top);
      if (Number(index.value) > top) {
        index.value = String(top);
      }
    };
    kind.addEventListener("change", () => this.syncIndexBound?.());
    const loadPlane = el("button", {}, "Load plane");
    loadPlane.addEventListener("click", () => void this.onLoadPlane(kind.value as "A" | "B" | "C", Number(index.value)));
    sidebar.append(el("label", {}, "Plane"), kind, index, loadPlane);

    const alpha = el("input", { type: "range", min: "0", max: "1", step: "0.01", value: "0" });
    const alphaValue = el("span", {}, "0.00");
    alpha.addEventListener("input", () => {
      alphaValue.textContent = Number(alpha.value).toFixed(2);
      try {
        this.controller.setAlpha(Number(alpha.value));
      } catch (err) {
        this.toast.show(String(err));
      }
    });
    sidebar.append(el("label", {}, "Strength α"), alpha, alphaValue);

    const regionAlpha = el("input", { type: "number", min: "0", max: "1", step: "0.05", value: "0.8" });
    const brush = el("input", { type: "range", min: "2", max: "40", value: "12" });
    const apply = el("button", {}, "Apply regions");
    const clear = el("button", {}, "Clear regions");
    apply.addEventListener("click", () => this.controller.commitRegions());
    clear.addEventListener("click", () => {
      this.controller.clearRegions();
      this.regionCount = 0;
      this.clearOverlay();
    });
    sidebar.append(el("label", {}, "Region α"), regionAlpha, el("label", {}, "Brush size"), brush, apply, clear);

    const compare = el("select", {});
    for (const mode of ["side-by-side", "toggle", "split-wipe"]) {
      compare.appendChild(el("option", { value: mode }, mode));
    }
    compare.addEventListener("change", () => this.setCompareMode(compare.value as CompareMode));
    sidebar.append(el("label", {}, "Compare"), compare, this.wipeRange);
    this.wipeRange.addEventListener("input", () => this.applyWipe());

    const header = el("div", { class: "header" });
    header.append(el("strong", {}, "Enhancement viewer"), this.statusLabel, this.busyDot, this.latencyLabel);

    const inputWrap = el("div", { class: "pane-wrap" });
    inputWrap.append(el("div", { class: "pane-title" }, "input"), this.inputPane, this.overlay);
    const outputWrap = el("div", { class: "pane-wrap" });
    outputWrap.append(el("div", { class: "pane-title" }, "output"), this.outputPane);
    this.compareRoot.append(inputWrap, outputWrap);
    this.compareRoot.addEventListener("click", () => this.onPaneClick());

    this.bindPainting(regionAlpha, brush);

    const layout = el("div", { class: "layout" });
    layout.append(sidebar, this.compareRoot);
    this.root.append(header, layout);
    this.toast.mount(this.root);
  }

  private async refreshHealth(): Promise<void> {
    try {
      const health = await this.api.health();
      this.statusLabel.textContent = health.status === "ok"
        ? `model ${health.checkpointId}` : "no model loaded";
    } catch {
      this.statusLabel.textContent = "server unreachable";
    }
  }

  private async onUpload(input: HTMLInputElement): Promise<void> {
    const file = input.files?.[0];
    if (!file) {
      return;
    }
    try {
      const info = await this.api.uploadVolume(file, file.name);
      this.controller.state.volumeId = info.id;
      this.volumeShape = info.shape;
      this.syncIndexBound?.();
      this.toast.show(`volume ${info.id} (${info.shape.join("×")})`);
    } catch (err) {
      this.toast.show(String(err));
    }
  }

  private async onLoadPlane(kind: "A" | "B" | "C", index: number): Promise<void> {
    const id = this.controller.state.volumeId;
    if (!id) {
      this.toast.show("upload a volume first");
      return;
    }
    try {
      const png = await this.api.fetchPlane(id, kind, index);
      this.controller.state.planeKind = kind;
      this.controller.state.sliceIndex = index;
      await this.showInput(png);
    } catch (err) {
      this.toast.show(String(err));
    }
  }

  private showInput(png: Uint8Array): Promise<void> {
    return new Promise((resolve) => {
      this.inputPane.onload = () => {
        const width = this.inputPane.naturalWidth;
        const height = this.inputPane.naturalHeight;
        this.controller.loadInput({ png, width, height });
        this.overlay.width = width;
        this.overlay.height = height;
        this.regionCount = 0;
        this.clearOverlay();
        this.outputPane.src = this.inputPane.src;
        resolve();
      };
      this.inputPane.src = pngUrl(png);
    });
  }

  private bindPainting(regionAlpha: HTMLInputElement, brush: HTMLInputElement): void {
    const stamp = (event: PointerEvent): void => {
      if (!this.mask) {
        return;
      }
      const rect = this.overlay.getBoundingClientRect();
      const x = ((event.clientX - rect.left) / rect.width) * this.overlay.width;
      const y = ((event.clientY - rect.top) / rect.height) * this.overlay.height;
      const radius = Number(brush.value);
      const ctx = this.overlay.getContext("2d")!;
      ctx.fillStyle = REGION_COLORS[this.regionCount % REGION_COLORS.length] + "66";
      ctx.beginPath();
      ctx.arc(x, y, radius, 0, Math.PI * 2);
      ctx.fill();
      const w = this.overlay.width;
      for (let dy = -radius; dy <= radius; dy++) {
        for (let dx = -radius; dx <= radius; dx++) {
          if (dx * dx + dy * dy > radius * radius) {
            continue;
          }
          const px = Math.round(x + dx);
          const py = Math.round(y + dy);
          if (px >= 0 && px < w && py >= 0 && py < this.overlay.height) {
            this.mask[py * w + px] = 1;
          }
        }
      }
    };
    this.overlay.addEventListener("pointerdown", (event) => {
      if (!this.controller.inputImage) {
        return;
      }
      this.painting = true;
      this.mask = new Uint8Array(this.overlay.width * this.overlay.height);
      this.overlay.setPointerCapture(event.pointerId);
      stamp(event);
    });
    this.overlay.addEventListener("pointermove", (event) => {
      if (this.painting) {
        stamp(event);
      }
    });
    this.overlay.addEventListener("pointerup", () => {
      this.painting = false;
      if (this.mask && this.controller.paintRegion(this.mask, Number(regionAlpha.value))) {
        this.regionCount++;
      }
      this.mask = null;
    });
  }

  private clearOverlay(): void {
    this.overlay.getContext("2d")?.clearRect(0, 0, this.overlay.width, this.overlay.height);
  }

  private renderOutput(result: EnhanceResult): void {
    this.outputPane.src = pngUrl(result.imagePng);
    this.latencyLabel.textContent = `${result.latencyMs.toFixed(0)} ms`;
  }

  private renderBusy(inFlight: boolean): void {
    if (inFlight) {
      if (this.busyTimer === null) {
        this.busyTimer = setTimeout(() => this.busyDot.classList.remove("hidden"), BUSY_DELAY_MS);
      }
    } else {
      if (this.busyTimer !== null) {
        clearTimeout(this.busyTimer);
        this.busyTimer = null;
      }
      this.busyDot.classList.add("hidden");
    }
  }

  private setCompareMode(mode: CompareMode): void {
    this.controller.state.compareMode = mode;
    this.compareRoot.className = `panes ${mode}`;
    this.wipeRange.classList.toggle("hidden", mode !== "split-wipe");
    if (mode === "toggle") {
      this.toggleShowsOutput = true;
      this.applyToggle();
    } else {
      this.outputPane.parentElement?.classList.remove("hidden");
      this.inputPane.parentElement?.classList.remove("hidden");
      this.outputPane.style.clipPath = "";
    }
    if (mode === "split-wipe") {
      this.applyWipe();
    }
  }

  private onPaneClick(): void {
    if (this.controller.state.compareMode === "toggle") {
      this.toggleShowsOutput = !this.toggleShowsOutput;
      this.applyToggle();
    }
  }

  private applyToggle(): void {
    this.outputPane.parentElement?.classList.toggle("hidden", !this.toggleShowsOutput);
    this.inputPane.parentElement?.classList.toggle("hidden", this.toggleShowsOutput);
  }

  private applyWipe(): void {
    const percent = Number(this.wipeRange.value);
    this.outputPane.style.clipPath = `inset(0 ${100 - percent}% 0 0)`;
  }
}

new App(document.getElementById("app")!);
