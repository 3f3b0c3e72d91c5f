/** DOM wiring: image list, drawing canvas, class palette, save, overlay. */

import { ApiClient } from "./api.js";
import { drawAnnotations, drawOverlay, toImage, ViewTransform } from "./draw.js";
import { CELL_CLASSES, CLASS_COLORS, DetectionsDoc, ImageInfo } from "./model.js";
import { buildOverlay, gtOnlyOverlay } from "./overlay.js";
import { AnnotationSession } from "./session.js";

const api = new ApiClient("");

const imageList = document.getElementById("image-list") as HTMLUListElement;
const canvas = document.getElementById("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const palette = document.getElementById("palette") as HTMLDivElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;
const overlayToggle = document.getElementById("overlay-toggle") as HTMLInputElement;
const statusLine = document.getElementById("status") as HTMLDivElement;
const summaryLine = document.getElementById("summary") as HTMLDivElement;

let session: AnnotationSession | null = null;
let currentImage: ImageInfo | null = null;
let bitmap: ImageBitmap | null = null;
let detectionsDoc: DetectionsDoc | null = null;
let selectedClass: string = CELL_CLASSES[0];
let overlayMode = false;
const view: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
let dragStart: [number, number] | null = null;
let dragCurrent: [number, number] | null = null;
let panStart: [number, number, number, number] | null = null;

function setStatus(text: string) {
  statusLine.textContent = text;
}

function render() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (bitmap && currentImage) {
    ctx.save();
    ctx.imageSmoothingEnabled = false;
    ctx.translate(view.offsetX, view.offsetY);
    ctx.scale(view.scale, view.scale);
    ctx.drawImage(bitmap, 0, 0);
    ctx.restore();
  }
  if (!session) {
    return;
  }
  if (overlayMode) {
    const overlay = detectionsDoc
      ? buildOverlay(session.rows, detectionsDoc)
      : gtOnlyOverlay(session.rows);
    drawOverlay(ctx, view, overlay);
    summaryLine.textContent = detectionsDoc
      ? `tp ${overlay.summary.tp} · fp ${overlay.summary.fp} · fn ${overlay.summary.fn}` +
        (overlay.summary.unmatched === 0 ? " · all objects matched" : "")
      : "no detections for this image (ground truth only)";
  } else {
    drawAnnotations(ctx, view, session.rows, null);
    summaryLine.textContent = `${session.rows.length} regions` + (session.dirty ? " · unsaved" : "");
  }
  if (dragStart && dragCurrent) {
    ctx.save();
    ctx.strokeStyle = CLASS_COLORS[selectedClass];
    ctx.setLineDash([4, 3]);
    ctx.strokeRect(
      dragStart[0],
      dragStart[1],
      dragCurrent[0] - dragStart[0],
      dragCurrent[1] - dragStart[1],
    );
    ctx.restore();
  }
}

function fitView() {
  if (!currentImage) {
    return;
  }
  const scale = Math.min(
    canvas.width / currentImage.width,
    canvas.height / currentImage.height,
  );
  view.scale = scale * 0.95;
  view.offsetX = (canvas.width - currentImage.width * view.scale) / 2;
  view.offsetY = (canvas.height - currentImage.height * view.scale) / 2;
}

async function openImage(info: ImageInfo) {
  if (session?.dirty && !confirm("Discard unsaved changes?")) {
    return;
  }
  currentImage = info;
  const [annotations, blob] = await Promise.all([
    api.getAnnotations(info.image_id),
    fetch(api.imageUrl(info.image_id)).then((r) => r.blob()),
  ]);
  bitmap = await createImageBitmap(blob);
  session = new AnnotationSession(
    info.image_id,
    info.width,
    info.height,
    annotations.rows,
    annotations.version,
  );
  detectionsDoc = await api.getDetections(info.image_id);
  fitView();
  setStatus(`${info.image_id} · v${session.version}`);
  render();
}

async function refreshImageList() {
  const images = await api.listImages();
  imageList.replaceChildren(
    ...images.map((info) => {
      const li = document.createElement("li");
      li.textContent = info.image_id;
      li.onclick = () => void openImage(info);
      return li;
    }),
  );
}

function buildPalette() {
  palette.replaceChildren(
    ...CELL_CLASSES.map((cls, i) => {
      const button = document.createElement("button");
      button.textContent = `${i + 1} ${cls}`;
      button.style.borderColor = CLASS_COLORS[cls];
      button.className = cls === selectedClass ? "selected" : "";
      button.onclick = () => {
        selectedClass = cls;
        buildPalette();
      };
      return button;
    }),
  );
}

async function save() {
  if (!session) {
    return;
  }
  const payload = session.savePayload();
  const result = await api.putAnnotations(session.imageId, payload.version, payload.rows);
  if (result.ok) {
    session.markSaved(result.version);
    setStatus(`${session.imageId} · saved at v${result.version}`);
  } else if (result.conflict) {
    setStatus(
      `conflict: server is at v${result.serverVersion}; reload the image to pick up remote edits`,
    );
  } else {
    setStatus(`save rejected: ${result.error}`);
  }
  render();
}

canvas.addEventListener("mousedown", (ev) => {
  if (overlayMode) {
    return;
  }
  if (ev.button === 1 || ev.shiftKey) {
    panStart = [ev.offsetX, ev.offsetY, view.offsetX, view.offsetY];
    return;
  }
  dragStart = [ev.offsetX, ev.offsetY];
  dragCurrent = dragStart;
});

canvas.addEventListener("mousemove", (ev) => {
  if (panStart) {
    view.offsetX = panStart[2] + (ev.offsetX - panStart[0]);
    view.offsetY = panStart[3] + (ev.offsetY - panStart[1]);
    render();
    return;
  }
  if (dragStart) {
    dragCurrent = [ev.offsetX, ev.offsetY];
    render();
  }
});

canvas.addEventListener("mouseup", (ev) => {
  if (panStart) {
    panStart = null;
    return;
  }
  if (!dragStart || !session) {
    return;
  }
  const [ix0, iy0] = toImage(view, dragStart[0], dragStart[1]);
  const [ix1, iy1] = toImage(view, ev.offsetX, ev.offsetY);
  const row = session.drawBox({ x0: ix0, y0: iy0, x1: ix1, y1: iy1 }, selectedClass);
  if (row === null) {
    setStatus("drag too small: discarded");
  }
  dragStart = dragCurrent = null;
  render();
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
  const [ix, iy] = toImage(view, ev.offsetX, ev.offsetY);
  view.scale *= factor;
  view.offsetX = ev.offsetX - ix * view.scale;
  view.offsetY = ev.offsetY - iy * view.scale;
  render();
});

document.addEventListener("keydown", (ev) => {
  const index = Number.parseInt(ev.key, 10);
  if (index >= 1 && index <= CELL_CLASSES.length) {
    selectedClass = CELL_CLASSES[index - 1];
    buildPalette();
  } else if (ev.key === "z" && session && session.rows.length > 0 && !overlayMode) {
    session.removeRow(session.rows.length - 1);
    render();
  } else if (ev.key === "s" && (ev.ctrlKey || ev.metaKey)) {
    ev.preventDefault();
    void save();
  }
});

saveButton.onclick = () => void save();
overlayToggle.onchange = () => {
  overlayMode = overlayToggle.checked;
  render();
};

buildPalette();
void refreshImageList();
setStatus("select an image to annotate (drag to draw, 1-5 pick class, z undo, ctrl+s save)");
