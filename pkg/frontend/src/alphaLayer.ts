/** The per-pixel style-degree buffer — the single source of truth for every
 * tool (global slider, brush, region fill, gradient). All tools edit this
 * buffer; the wire format is always the map spec. */

import type { AlphaSpecJson } from "./api.js";
import { encodeGrayPng, toBase64 } from "./png.js";

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

export class AlphaLayer {
  readonly width: number;
  readonly height: number;
  readonly data: Float32Array;

  constructor(width: number, height: number, fill = 1) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
      throw new Error(`layer dims must be positive integers, got ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Float32Array(width * height).fill(clamp01(fill));
  }

  static from(values: number[][]): AlphaLayer {
    const h = values.length;
    const w = h > 0 ? values[0].length : 0;
    const layer = new AlphaLayer(w, h);
    for (let y = 0; y < h; y++) {
      if (values[y].length !== w) {
        throw new Error(`ragged rows: row ${y} has ${values[y].length} values, expected ${w}`);
      }
      for (let x = 0; x < w; x++) layer.data[y * w + x] = clamp01(values[y][x]);
    }
    return layer;
  }

  get(x: number, y: number): number {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) {
      throw new Error(`(${x}, ${y}) outside ${this.width}x${this.height}`);
    }
    return this.data[y * this.width + x];
  }

  fillAll(alpha: number): void {
    this.data.fill(clamp01(alpha));
  }

  /** Circular brush stamp; parts outside the canvas are silently clipped. */
  paintBrush(cx: number, cy: number, radius: number, alpha: number): void {
    if (radius <= 0) return;
    const a = clamp01(alpha);
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius));
    const y0 = Math.max(0, Math.floor(cy - radius));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) this.data[y * this.width + x] = a;
      }
    }
  }

  /** Axis-aligned region fill; silently clipped at the canvas edge. */
  fillRect(x: number, y: number, w: number, h: number, alpha: number): void {
    const a = clamp01(alpha);
    const x0 = Math.max(0, Math.floor(x));
    const y0 = Math.max(0, Math.floor(y));
    const x1 = Math.min(this.width, Math.ceil(x + w));
    const y1 = Math.min(this.height, Math.ceil(y + h));
    for (let yy = y0; yy < y1; yy++) {
      for (let xx = x0; xx < x1; xx++) this.data[yy * this.width + xx] = a;
    }
  }

  /** Linear ramp along 'x' (left to right) or 'y' (top to bottom); a
   * single-pixel axis collapses to `start`. */
  applyGradient(axis: "x" | "y", start: number, stop: number): void {
    const s = clamp01(start);
    const e = clamp01(stop);
    const n = axis === "x" ? this.width : this.height;
    const ramp = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      ramp[i] = n === 1 ? s : s + ((e - s) * i) / (n - 1);
    }
    for (let y = 0; y < this.height; y++) {
      for (let x = 0; x < this.width; x++) {
        this.data[y * this.width + x] = ramp[axis === "x" ? x : y];
      }
    }
  }

  /** Bilinear resample preserving corner values (uniform stays uniform,
   * gradients keep their endpoints). */
  resample(width: number, height: number): AlphaLayer {
    const out = new AlphaLayer(width, height);
    for (let y = 0; y < height; y++) {
      const sy = height === 1 ? 0 : (y * (this.height - 1)) / (height - 1);
      const y0 = Math.floor(sy);
      const y1 = Math.min(this.height - 1, y0 + 1);
      const fy = sy - y0;
      for (let x = 0; x < width; x++) {
        const sx = width === 1 ? 0 : (x * (this.width - 1)) / (width - 1);
        const x0 = Math.floor(sx);
        const x1 = Math.min(this.width - 1, x0 + 1);
        const fx = sx - x0;
        const top = this.data[y0 * this.width + x0] * (1 - fx) + this.data[y0 * this.width + x1] * fx;
        const bot = this.data[y1 * this.width + x0] * (1 - fx) + this.data[y1 * this.width + x1] * fx;
        out.data[y * width + x] = top * (1 - fy) + bot * fy;
      }
    }
    return out;
  }

  clone(): AlphaLayer {
    const out = new AlphaLayer(this.width, this.height);
    out.data.set(this.data);
    return out;
  }

  /** The service reads alpha maps as 8-bit grayscale PNGs (alpha = gray/255),
   * so values quantize to 1/255 steps on the wire. */
  toMapSpec(): AlphaSpecJson {
    const gray = new Uint8Array(this.width * this.height);
    for (let i = 0; i < gray.length; i++) gray[i] = Math.round(this.data[i] * 255);
    return { type: "map", png_base64: toBase64(encodeGrayPng(this.width, this.height, gray)) };
  }
}
