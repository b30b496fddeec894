/** Training-progress poller: repeatedly fetches session status until the
 * session leaves the training states, surfacing every update along the way. */

import type { SessionView } from "./api.js";

interface PollerOptions {
  intervalMs?: number;
  onUpdate?: (view: SessionView) => void;
  onReady?: (view: SessionView) => void;
  onFailed?: (view: SessionView) => void;
  onError?: (error: unknown) => void;
}

export class TrainingPoller {
  private readonly intervalMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly getStatus: () => Promise<SessionView>,
    private readonly options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? 400;
  }

  start(): void {
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  private async tick(): Promise<void> {
    if (this.stopped) return;
    try {
      const view = await this.getStatus();
      this.options.onUpdate?.(view);
      if (view.state === "ready") {
        this.stopped = true;
        this.options.onReady?.(view);
        return;
      }
      if (view.state === "failed") {
        this.stopped = true;
        this.options.onFailed?.(view);
        return;
      }
    } catch (err) {
      this.options.onError?.(err);
    }
    if (!this.stopped) {
      this.timer = setTimeout(() => void this.tick(), this.intervalMs);
    }
  }
}
