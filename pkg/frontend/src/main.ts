/** Canvas annotation UI: image list, brush drawing, undo, timing, upload. */

import { ApiClient, timingSummary } from "./api.js";
import { encodeGrayPng } from "./png.js";
import { paintStroke } from "./raster.js";
import {
  AnnotationSession,
  addElapsed,
  createSession,
  drawStroke,
  missingClasses,
  rasterize,
  undo,
} from "./session.js";
import type { ImageInfo, Point, StrokeLabel } from "./types.js";
import { BACKGROUND, FOREGROUND } from "./types.js";

const FG_COLOR: [number, number, number] = [235, 64, 52]; // red
const BG_COLOR: [number, number, number] = [64, 210, 224]; // cyan
const TICK_MS = 500;

const api = new ApiClient();

const imageListEl = document.getElementById("image-list") as HTMLUListElement;
const stageEl = document.getElementById("stage") as HTMLDivElement;
const imageCanvas = document.getElementById("image-canvas") as HTMLCanvasElement;
const overlayCanvas = document.getElementById("overlay-canvas") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;
const timerEl = document.getElementById("timer") as HTMLSpanElement;
const summaryEl = document.getElementById("summary") as HTMLSpanElement;
const radiusInput = document.getElementById("radius") as HTMLInputElement;
const radiusValueEl = document.getElementById("radius-value") as HTMLSpanElement;
const fgButton = document.getElementById("label-fg") as HTMLButtonElement;
const bgButton = document.getElementById("label-bg") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;

let images: ImageInfo[] = [];
let session: AnnotationSession | null = null;
let livePoints: Point[] = [];
let drawing = false;
let lastTick = 0;

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.classList.toggle("error", isError);
}

function labelColor(label: StrokeLabel): [number, number, number] {
  return label === FOREGROUND ? FG_COLOR : BG_COLOR;
}

function renderOverlay(): void {
  if (!session) return;
  const { width, height } = session;
  const ctx = overlayCanvas.getContext("2d")!;
  const map = rasterize(session);
  if (livePoints.length > 0) {
    paintStroke(map, width, height, {
      label: session.activeLabel,
      points: livePoints,
      radius: session.brushRadius,
    });
  }
  const img = ctx.createImageData(width, height);
  for (let i = 0; i < map.length; i++) {
    if (map[i] === 0) continue;
    const [r, g, b] = labelColor(map[i] as StrokeLabel);
    img.data[i * 4] = r;
    img.data[i * 4 + 1] = g;
    img.data[i * 4 + 2] = b;
    img.data[i * 4 + 3] = 190;
  }
  ctx.putImageData(img, 0, 0);
}

function renderImageList(): void {
  imageListEl.replaceChildren(
    ...images.map((info) => {
      const item = document.createElement("li");
      item.textContent = info.id;
      if (info.has_scribble) item.classList.add("done");
      if (session && info.id === session.imageId) item.classList.add("active");
      if (info.elapsed_ms !== null) {
        const time = document.createElement("span");
        time.className = "time";
        time.textContent = `${(info.elapsed_ms / 1000).toFixed(1)}s`;
        item.appendChild(time);
      }
      item.addEventListener("click", () => void openImage(info));
      return item;
    }),
  );
}

function renderTimer(): void {
  if (!session) {
    timerEl.textContent = "";
    return;
  }
  timerEl.textContent = `${(session.elapsedMs / 1000).toFixed(1)}s`;
}

async function refreshSummary(): Promise<void> {
  try {
    const log = await api.fetchTiming();
    const summary = timingSummary(log.entries);
    summaryEl.textContent = summary
      ? `mean ${summary.meanSeconds.toFixed(1)}s over ${summary.perImage.length}`
      : "no data";
  } catch {
    summaryEl.textContent = "no data";
  }
}

function setActiveLabel(label: StrokeLabel): void {
  if (!session) return;
  session.activeLabel = label;
  fgButton.classList.toggle("selected", label === FOREGROUND);
  bgButton.classList.toggle("selected", label === BACKGROUND);
}

/** Decode an existing scribble through the browser's own PNG reader: the
 * file is 8-bit grayscale, so the red channel is the label verbatim. */
async function loadExistingMap(info: ImageInfo): Promise<Uint8Array | undefined> {
  const bytes = await api.fetchScribble(info.id);
  if (bytes === null) return undefined;
  const bitmap = await createImageBitmap(new Blob([bytes as BlobPart], { type: "image/png" }));
  const scratch = document.createElement("canvas");
  scratch.width = info.width;
  scratch.height = info.height;
  const ctx = scratch.getContext("2d", { willReadFrequently: true })!;
  ctx.drawImage(bitmap, 0, 0);
  const rgba = ctx.getImageData(0, 0, info.width, info.height).data;
  const map = new Uint8Array(info.width * info.height);
  for (let i = 0; i < map.length; i++) map[i] = rgba[i * 4];
  return map;
}

async function openImage(info: ImageInfo): Promise<void> {
  setStatus(`loading ${info.id}...`);
  let base: Uint8Array | undefined;
  try {
    base = await loadExistingMap(info);
  } catch (err) {
    setStatus(`could not read the saved scribble: ${String(err)}`, true);
    base = undefined;
  }
  const previous = session;
  session = createSession(info.id, info.width, info.height, base);
  if (previous) session.brushRadius = previous.brushRadius;

  imageCanvas.width = overlayCanvas.width = info.width;
  imageCanvas.height = overlayCanvas.height = info.height;
  const img = new Image();
  img.src = api.imageUrl(info.id);
  await img.decode();
  imageCanvas.getContext("2d")!.drawImage(img, 0, 0);

  livePoints = [];
  drawing = false;
  lastTick = performance.now();
  setActiveLabel(FOREGROUND);
  renderOverlay();
  renderImageList();
  renderTimer();
  setStatus(`annotating ${info.id}`);
}

function canvasPoint(event: PointerEvent): Point {
  const rect = overlayCanvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * overlayCanvas.width,
    y: ((event.clientY - rect.top) / rect.height) * overlayCanvas.height,
  };
}

overlayCanvas.addEventListener("pointerdown", (event) => {
  if (!session) return;
  overlayCanvas.setPointerCapture(event.pointerId);
  drawing = true;
  livePoints = [canvasPoint(event)];
  renderOverlay();
});

overlayCanvas.addEventListener("pointermove", (event) => {
  if (!session || !drawing) return;
  livePoints.push(canvasPoint(event));
  renderOverlay();
});

function finishStroke(): void {
  if (!session || !drawing) return;
  drawing = false;
  drawStroke(session, livePoints);
  livePoints = [];
  renderOverlay();
}

overlayCanvas.addEventListener("pointerup", finishStroke);
overlayCanvas.addEventListener("pointercancel", finishStroke);

undoButton.addEventListener("click", () => {
  if (!session) return;
  undo(session);
  renderOverlay();
});

fgButton.addEventListener("click", () => setActiveLabel(FOREGROUND));
bgButton.addEventListener("click", () => setActiveLabel(BACKGROUND));

radiusInput.addEventListener("input", () => {
  const r = Number(radiusInput.value);
  radiusValueEl.textContent = `${r}px`;
  if (session) session.brushRadius = r;
});

exportButton.addEventListener("click", () => void exportCurrent());

async function exportCurrent(): Promise<void> {
  if (!session) return;
  const missing = missingClasses(session);
  if (missing.length > 0) {
    const names = missing
      .map((label) => (label === FOREGROUND ? "foreground" : "background"))
      .join(" and ");
    if (!confirm(`No ${names} strokes yet. Upload anyway?`)) return;
  }
  const png = encodeGrayPng(session.width, session.height, rasterize(session));
  setStatus("uploading...");
  try {
    await api.uploadScribble(session.imageId, png);
    await api.reportTiming(session.imageId, session.elapsedMs);
  } catch (err) {
    // nothing is cleared, so the user can simply retry
    setStatus(`upload failed, your strokes are kept locally: ${String(err)}`, true);
    return;
  }
  session.dirty = false;
  setStatus(`saved ${session.imageId}`);
  images = await api.listImages();
  renderImageList();
  await refreshSummary();
}

/** Count annotation time only while the tab is visible and an image is open. */
setInterval(() => {
  const now = performance.now();
  if (session && document.visibilityState === "visible") {
    addElapsed(session, now - lastTick);
    renderTimer();
  }
  lastTick = now;
}, TICK_MS);

window.addEventListener("keydown", (event) => {
  if (event.key === "z" && (event.ctrlKey || event.metaKey)) {
    event.preventDefault();
    undoButton.click();
  } else if (event.key === "f") {
    setActiveLabel(FOREGROUND);
  } else if (event.key === "b") {
    setActiveLabel(BACKGROUND);
  }
});

async function start(): Promise<void> {
  setStatus("loading image list...");
  try {
    images = await api.listImages();
  } catch (err) {
    setStatus(String(err), true);
    return;
  }
  renderImageList();
  await refreshSummary();
  if (images.length === 0) {
    setStatus("the server has no images");
    stageEl.classList.add("empty");
    return;
  }
  await openImage(images[0]);
}

void start();
