/** Typed client for the inrstyle HTTP service. Every preview shown in the
 * studio comes from these endpoints; the UI never stylizes locally. */

export interface TrainFormConfig {
  size?: number;
  iters?: number;
  kappa?: number;
  style_weight?: number;
  seed?: number;
  center_crop?: boolean;
  snapshot_interval?: number;
}

export type AlphaSpecJson =
  | { type: "uniform"; alpha: number }
  | { type: "map"; png_base64: string }
  | {
      type: "regions";
      regions: { png_base64: string; alpha: number }[];
      default_alpha?: number;
    }
  | { type: "gradient"; axis: "x" | "y"; start: number; stop: number };

export interface RenderBody {
  alpha: AlphaSpecJson;
  width: number;
  height: number;
  chunk_rows?: number;
}

export interface LossPoint {
  iteration: number;
  content: number;
  style: number;
  total: number;
  alpha: number;
}

export interface PreviewRef {
  alpha: number;
  url: string;
}

export type SessionState = "queued" | "training" | "ready" | "failed";

export interface SessionView {
  id: string;
  state: SessionState;
  iteration: number;
  total_iterations: number;
  losses: LossPoint[];
  previews: PreviewRef[];
  error: string | null;
}

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let message = `${res.status}`;
  try {
    const body = (await res.json()) as { error?: string; detail?: unknown };
    message = body.error ?? JSON.stringify(body.detail ?? body);
  } catch {
    /* non-JSON error body: keep the status text */
  }
  throw new ApiError(res.status, message);
}

export class StudioApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(
    content: Blob,
    style: Blob,
    config: TrainFormConfig = {},
  ): Promise<{ id: string; config: Record<string, unknown> }> {
    const form = new FormData();
    form.append("content", content, "content.png");
    form.append("style", style, "style.png");
    form.append("config", JSON.stringify(config));
    const res = await this.fetchImpl(this.url("/api/sessions"), {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return (await res.json()) as { id: string; config: Record<string, unknown> };
  }

  async getSession(id: string): Promise<SessionView> {
    const res = await this.fetchImpl(this.url(`/api/sessions/${id}`));
    await raiseForStatus(res);
    return (await res.json()) as SessionView;
  }

  previewUrl(id: string, alphaKey: string): string {
    return this.url(`/api/sessions/${id}/previews/${alphaKey}.png`);
  }

  async fetchPreview(id: string, alphaKey: string): Promise<Uint8Array> {
    const res = await this.fetchImpl(this.previewUrl(id, alphaKey));
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  async render(id: string, body: RenderBody): Promise<Uint8Array> {
    const res = await this.fetchImpl(this.url(`/api/sessions/${id}/render`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  async exportArchive(id: string): Promise<Uint8Array> {
    const res = await this.fetchImpl(this.url(`/api/sessions/${id}/archive`));
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  async importArchive(archive: Blob): Promise<{ id: string }> {
    const form = new FormData();
    form.append("archive", archive, "session.inrs");
    const res = await this.fetchImpl(this.url("/api/sessions/import"), {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return (await res.json()) as { id: string };
  }
}
