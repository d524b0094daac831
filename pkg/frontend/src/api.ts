// Typed client for the enhancement service. All transport goes through an
// injected fetch, so tests can stand in a fake server.

import { base64ToBytes, bytesToBase64 } from "./base64.js";
import type { RegionEntry } from "./alphaField.js";

export interface HealthInfo {
  status: string;
  checkpointId: string | null;
  uptimeS: number;
}

export interface VolumeInfo {
  id: string;
  shape: [number, number, number];
  spacing: number[];
}

export interface FieldPayload {
  png: Uint8Array;
  regions: RegionEntry[] | null;
}

export interface EnhanceRequest {
  imagePng: Uint8Array;
  alpha?: number;
  alphaField?: FieldPayload;
}

export interface EnhanceResult {
  imagePng: Uint8Array;
  latencyMs: number;
  alphaEcho: number | FieldPayload;
}

export type PlaneKind = "A" | "B" | "C";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail?: unknown,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFromResponse(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(response.status, body.code ?? "internal", body.message ?? response.statusText, body.detail);
  } catch {
    return new ApiError(response.status, "internal", response.statusText);
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as T;
  }

  async health(): Promise<HealthInfo> {
    const body = await this.json<{ status: string; checkpoint_id: string | null; uptime_s: number }>("/health");
    return { status: body.status, checkpointId: body.checkpoint_id, uptimeS: body.uptime_s };
  }

  async enhance(request: EnhanceRequest): Promise<EnhanceResult> {
    const payload: Record<string, unknown> = { image: bytesToBase64(request.imagePng) };
    if (request.alpha !== undefined) {
      payload.alpha = request.alpha;
    }
    if (request.alphaField !== undefined) {
      payload.alpha_field = {
        png: bytesToBase64(request.alphaField.png),
        regions: request.alphaField.regions,
      };
    }
    const body = await this.json<{ image: string; latency_ms: number; alpha_echo: unknown }>("/enhance", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    const echo = body.alpha_echo;
    const alphaEcho: number | FieldPayload =
      typeof echo === "number"
        ? echo
        : {
            png: base64ToBytes((echo as { png: string }).png),
            regions: (echo as { regions: RegionEntry[] | null }).regions,
          };
    return { imagePng: base64ToBytes(body.image), latencyMs: body.latency_ms, alphaEcho };
  }

  async uploadVolume(archive: Uint8Array | Blob, filename = "volume.zip"): Promise<VolumeInfo> {
    const form = new FormData();
    const blob = archive instanceof Blob ? archive : new Blob([archive.slice().buffer], { type: "application/zip" });
    form.append("archive", blob, filename);
    return this.json<VolumeInfo>("/volumes", { method: "POST", body: form });
  }

  async fetchPlane(volumeId: string, kind: PlaneKind, index: number): Promise<Uint8Array> {
    const response = await this.fetchFn(this.url(`/volumes/${volumeId}/planes?kind=${kind}&index=${index}`));
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  async swapCheckpoint(path: string): Promise<string> {
    const body = await this.json<{ checkpoint_id: string }>("/admin/checkpoint", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ path }),
    });
    return body.checkpoint_id;
  }
}
