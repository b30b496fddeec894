/** Debounced render scheduler: one in-flight request per session view, newer
 * edits supersede anything queued, and a request byte-identical to the last
 * completed (or in-flight) one is skipped entirely. */

import type { RenderBody } from "./api.js";

export type RenderFn = (body: RenderBody) => Promise<Uint8Array>;

export interface RenderResult {
  bytes: Uint8Array;
  body: RenderBody;
  key: string;
}

interface QueueOptions {
  debounceMs?: number;
  onRender?: (result: RenderResult) => void;
  onError?: (error: unknown) => void;
}

/** Stable serialization so structurally equal requests dedupe regardless of
 * property insertion order. */
export function requestKey(body: RenderBody): string {
  const canonical = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(canonical);
    if (v !== null && typeof v === "object") {
      const out: Record<string, unknown> = {};
      for (const k of Object.keys(v as Record<string, unknown>).sort()) {
        out[k] = canonical((v as Record<string, unknown>)[k]);
      }
      return out;
    }
    return v;
  };
  return JSON.stringify(canonical(body));
}

export class RenderQueue {
  private readonly debounceMs: number;
  private readonly onRender?: (result: RenderResult) => void;
  private readonly onError?: (error: unknown) => void;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: RenderBody | null = null;
  private queued = false;
  private inFlightKey: string | null = null;
  private disposed = false;
  lastRender: RenderResult | null = null;

  constructor(private readonly renderFn: RenderFn, options: QueueOptions = {}) {
    this.debounceMs = options.debounceMs ?? 150;
    this.onRender = options.onRender;
    this.onError = options.onError;
  }

  /** Record the latest desired render; it fires after the debounce window
   * unless superseded by a newer request first. */
  request(body: RenderBody): void {
    if (this.disposed) return;
    this.pending = body;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  get busy(): boolean {
    return this.inFlightKey !== null;
  }

  /** The exact bytes of the last preview — export must not re-encode. */
  exportCurrent(): Uint8Array | null {
    return this.lastRender ? this.lastRender.bytes : null;
  }

  dispose(): void {
    this.disposed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.pending = null;
    this.queued = false;
  }

  private async fire(): Promise<void> {
    if (this.disposed) return;
    if (this.inFlightKey !== null) {
      this.queued = true;
      return;
    }
    const body = this.pending;
    if (body === null) return;
    const key = requestKey(body);
    if (key === this.lastRender?.key) {
      // byte-identical to what is already displayed: no-op
      this.pending = null;
      return;
    }
    this.pending = null;
    this.inFlightKey = key;
    try {
      const bytes = await this.renderFn(body);
      this.lastRender = { bytes, body, key };
      this.onRender?.(this.lastRender);
    } catch (err) {
      this.onError?.(err);
    } finally {
      this.inFlightKey = null;
      if (this.queued) {
        this.queued = false;
        void this.fire();
      }
    }
  }
}
