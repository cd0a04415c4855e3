/** HTTP client for the annotation service. All state lives server-side;
 * the UI only ever talks through these calls. */

import type { ImageInfo, TimingEntry, TimingLog } from "./types.js";

async function checkOk(res: Response, what: string): Promise<Response> {
  if (!res.ok) {
    const detail = await res.text().catch(() => "");
    throw new Error(`${what} failed: ${res.status} ${detail}`.trim());
  }
  return res;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  imageUrl(id: string): string {
    return `${this.baseUrl}/api/image/${encodeURIComponent(id)}`;
  }

  scribbleUrl(id: string): string {
    return `${this.baseUrl}/api/scribble/${encodeURIComponent(id)}`;
  }

  async listImages(): Promise<ImageInfo[]> {
    const res = await checkOk(await fetch(`${this.baseUrl}/api/images`), "listing images");
    return (await res.json()) as ImageInfo[];
  }

  /** Raw scribble PNG bytes, or null when the image has none yet. */
  async fetchScribble(id: string): Promise<Uint8Array | null> {
    const res = await fetch(this.scribbleUrl(id));
    if (res.status === 404) return null;
    await checkOk(res, `fetching scribble ${id}`);
    return new Uint8Array(await res.arrayBuffer());
  }

  async uploadScribble(id: string, png: Uint8Array): Promise<void> {
    const res = await fetch(this.scribbleUrl(id), {
      method: "PUT",
      headers: { "Content-Type": "image/png" },
      body: png as BodyInit,
    });
    await checkOk(res, `uploading scribble ${id}`);
  }

  async reportTiming(id: string, elapsedMs: number): Promise<void> {
    const res = await fetch(`${this.baseUrl}/api/timing/${encodeURIComponent(id)}`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ elapsed_ms: Math.round(elapsedMs) }),
    });
    await checkOk(res, `reporting timing for ${id}`);
  }

  async fetchTiming(): Promise<TimingLog> {
    const res = await checkOk(await fetch(`${this.baseUrl}/api/timing`), "fetching timing");
    return (await res.json()) as TimingLog;
  }
}

export interface TimingSummary {
  meanSeconds: number;
  perImage: { id: string; seconds: number }[];
}

/** Mean annotation time in seconds, or null when the log is empty. */
export function timingSummary(entries: readonly TimingEntry[]): TimingSummary | null {
  if (entries.length === 0) return null;
  const perImage = entries.map((e) => ({ id: e.id, seconds: e.elapsed_ms / 1000 }));
  const meanSeconds = perImage.reduce((s, e) => s + e.seconds, 0) / perImage.length;
  return { meanSeconds, perImage };
}
