/** Studio entry point: wires the DOM to the pure modules. Every preview is a
 * server render — the browser never stylizes pixels itself. */

import { ApiError, StudioApi } from "./api.js";
import type { SessionView } from "./api.js";
import { AlphaLayer } from "./alphaLayer.js";
import { RenderQueue } from "./renderQueue.js";
import type { RenderResult } from "./renderQueue.js";
import { TrainingPoller } from "./polling.js";

type Tool = "brush" | "region" | "gradient";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.classList.add("visible");
  setTimeout(() => box.classList.remove("visible"), 4000);
}

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  return param ?? "";
}

const api = new StudioApi(apiBase());

let sessionId: string | null = null;
let layer = new AlphaLayer(128, 128, 1);
let poller: TrainingPoller | null = null;
let queue: RenderQueue | null = null;
let lastObjectUrl: string | null = null;

function outputDims(): { width: number; height: number } {
  const width = Number(el<HTMLInputElement>("out-width").value);
  const height = Number(el<HTMLInputElement>("out-height").value);
  return { width, height };
}

function requestRender(): void {
  if (!queue) return;
  queue.request({
    alpha: layer.toMapSpec(),
    width: layer.width,
    height: layer.height,
  });
}

function showRender(result: RenderResult): void {
  const img = el<HTMLImageElement>("preview");
  if (lastObjectUrl) URL.revokeObjectURL(lastObjectUrl);
  const blob = new Blob([result.bytes.slice().buffer], { type: "image/png" });
  lastObjectUrl = URL.createObjectURL(blob);
  img.src = lastObjectUrl;
  el<HTMLSpanElement>("render-dims").textContent = `${result.body.width}×${result.body.height}`;
}

function surface(err: unknown): void {
  if (err instanceof ApiError) toast(`server: ${err.message}`);
  else toast(String(err));
}

// ---------------------------------------------------------------- training

function renderStatus(view: SessionView): void {
  el<HTMLSpanElement>("train-state").textContent = view.state;
  el<HTMLSpanElement>("train-progress").textContent =
    `${view.iteration} / ${view.total_iterations}`;
  const tail = view.losses.slice(-5);
  el<HTMLPreElement>("loss-tail").textContent = tail
    .map((p) => `#${p.iteration}  total ${p.total.toFixed(4)}  (α=${p.alpha.toFixed(2)})`)
    .join("\n");
  const strip = el<HTMLDivElement>("train-previews");
  strip.innerHTML = "";
  for (const ref of view.previews) {
    const img = document.createElement("img");
    img.src = `${apiBase()}${ref.url}?t=${view.iteration}`;
    img.title = `α=${ref.alpha}`;
    strip.appendChild(img);
  }
}

function beginSession(id: string): void {
  sessionId = id;
  el<HTMLElement>("training-panel").hidden = false;
  poller?.stop();
  poller = new TrainingPoller(() => api.getSession(id), {
    onUpdate: renderStatus,
    onReady: (view) => {
      renderStatus(view);
      el<HTMLElement>("studio-panel").hidden = false;
      queue?.dispose();
      queue = new RenderQueue((body) => api.render(id, body), {
        onRender: showRender,
        onError: surface,
      });
      const { width, height } = outputDims();
      layer = layer.resample(width, height);
      requestRender();
    },
    onFailed: (view) => toast(`training failed: ${view.error ?? "unknown error"}`),
    onError: surface,
  });
  poller.start();
}

el<HTMLFormElement>("upload-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const content = el<HTMLInputElement>("content-file").files?.[0];
  const style = el<HTMLInputElement>("style-file").files?.[0];
  if (!content || !style) {
    toast("pick both a content and a style image");
    return;
  }
  const config = {
    size: Number(el<HTMLInputElement>("cfg-size").value),
    iters: Number(el<HTMLInputElement>("cfg-iters").value),
    style_weight: Number(el<HTMLInputElement>("cfg-style-weight").value),
    seed: Number(el<HTMLInputElement>("cfg-seed").value),
    snapshot_interval: Math.max(1, Math.floor(Number(el<HTMLInputElement>("cfg-iters").value) / 10)),
  };
  api
    .createSession(content, style, config)
    .then(({ id }) => beginSession(id))
    .catch(surface);
});

el<HTMLInputElement>("archive-file").addEventListener("change", (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  api
    .importArchive(file)
    .then(({ id }) => beginSession(id))
    .catch(surface);
});

// ----------------------------------------------------------------- editing

function canvasPoint(ev: PointerEvent): { x: number; y: number } {
  const canvas = el<HTMLCanvasElement>("alpha-canvas");
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * layer.width,
    y: ((ev.clientY - rect.top) / rect.height) * layer.height,
  };
}

function drawAlphaOverlay(): void {
  const canvas = el<HTMLCanvasElement>("alpha-canvas");
  canvas.width = layer.width;
  canvas.height = layer.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const image = ctx.createImageData(layer.width, layer.height);
  for (let i = 0; i < layer.data.length; i++) {
    const v = Math.round(layer.data[i] * 255);
    image.data[i * 4] = v;
    image.data[i * 4 + 1] = v;
    image.data[i * 4 + 2] = v;
    image.data[i * 4 + 3] = 140;
  }
  ctx.putImageData(image, 0, 0);
}

function afterEdit(): void {
  drawAlphaOverlay();
  requestRender();
}

function currentTool(): Tool {
  return (document.querySelector('input[name="tool"]:checked') as HTMLInputElement)
    .value as Tool;
}

let dragStart: { x: number; y: number } | null = null;
let painting = false;

const canvas = el<HTMLCanvasElement>("alpha-canvas");
canvas.addEventListener("pointerdown", (ev) => {
  if (!sessionId) return;
  const p = canvasPoint(ev);
  const tool = currentTool();
  if (tool === "brush") {
    painting = true;
    layer.paintBrush(p.x, p.y, Number(el<HTMLInputElement>("brush-radius").value),
      Number(el<HTMLInputElement>("brush-alpha").value));
    afterEdit();
  } else {
    dragStart = p;
  }
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointermove", (ev) => {
  if (!painting) return;
  const p = canvasPoint(ev);
  layer.paintBrush(p.x, p.y, Number(el<HTMLInputElement>("brush-radius").value),
    Number(el<HTMLInputElement>("brush-alpha").value));
  afterEdit();
});
canvas.addEventListener("pointerup", (ev) => {
  const tool = currentTool();
  if (tool === "region" && dragStart) {
    const p = canvasPoint(ev);
    const x = Math.min(dragStart.x, p.x);
    const y = Math.min(dragStart.y, p.y);
    layer.fillRect(x, y, Math.abs(p.x - dragStart.x), Math.abs(p.y - dragStart.y),
      Number(el<HTMLInputElement>("brush-alpha").value));
    afterEdit();
  } else if (tool === "gradient" && dragStart) {
    const p = canvasPoint(ev);
    const axis = Math.abs(p.x - dragStart.x) >= Math.abs(p.y - dragStart.y) ? "x" : "y";
    layer.applyGradient(axis,
      Number(el<HTMLInputElement>("gradient-start").value),
      Number(el<HTMLInputElement>("gradient-stop").value));
    afterEdit();
  }
  painting = false;
  dragStart = null;
});

el<HTMLInputElement>("global-alpha").addEventListener("change", (ev) => {
  layer.fillAll(Number((ev.target as HTMLInputElement).value));
  afterEdit();
});

el<HTMLButtonElement>("apply-dims").addEventListener("click", () => {
  const { width, height } = outputDims();
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    toast("output dims must be positive integers");
    return;
  }
  if (width * height > 4096 * 4096) {
    toast("output exceeds the configured maximum");
    return;
  }
  layer = layer.resample(width, height);
  afterEdit();
});

// ------------------------------------------------------------------ export

el<HTMLButtonElement>("export-render").addEventListener("click", () => {
  const bytes = queue?.exportCurrent();
  if (!bytes) {
    toast("nothing rendered yet");
    return;
  }
  // the stored server bytes are downloaded as-is: no client re-encoding
  const blob = new Blob([bytes.slice().buffer], { type: "image/png" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "render.png";
  a.click();
  URL.revokeObjectURL(a.href);
});

el<HTMLButtonElement>("export-archive").addEventListener("click", () => {
  if (!sessionId) return;
  api
    .exportArchive(sessionId)
    .then((bytes) => {
      const blob = new Blob([bytes.slice().buffer], { type: "application/octet-stream" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `${sessionId}.inrs`;
      a.click();
      URL.revokeObjectURL(a.href);
    })
    .catch(surface);
});

drawAlphaOverlay();
