/** Canvas rendering for annotation boxes and review overlays. */

import { AnnotationRow, CLASS_COLORS } from "./model.js";
import { Overlay, OverlayStyle } from "./overlay.js";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function toCanvas(v: ViewTransform, x: number, y: number): [number, number] {
  return [x * v.scale + v.offsetX, y * v.scale + v.offsetY];
}

export function toImage(v: ViewTransform, cx: number, cy: number): [number, number] {
  return [(cx - v.offsetX) / v.scale, (cy - v.offsetY) / v.scale];
}

function strokeBox(
  ctx: CanvasRenderingContext2D,
  v: ViewTransform,
  xmin: number,
  ymin: number,
  xmax: number,
  ymax: number,
  color: string,
  dashed = false,
  width = 2,
) {
  const [x0, y0] = toCanvas(v, xmin, ymin);
  const [x1, y1] = toCanvas(v, xmax, ymax);
  ctx.save();
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  ctx.restore();
}

function labelText(
  ctx: CanvasRenderingContext2D,
  v: ViewTransform,
  xmin: number,
  ymin: number,
  text: string,
  color: string,
) {
  const [x, y] = toCanvas(v, xmin, ymin);
  ctx.save();
  ctx.font = "11px sans-serif";
  ctx.fillStyle = color;
  ctx.fillText(text, x + 2, y - 3);
  ctx.restore();
}

export function drawAnnotations(
  ctx: CanvasRenderingContext2D,
  v: ViewTransform,
  rows: AnnotationRow[],
  selected: number | null,
) {
  rows.forEach((r, i) => {
    const color = CLASS_COLORS[r.class] ?? "#888";
    strokeBox(ctx, v, r.xmin, r.ymin, r.xmax, r.ymax, color, false, i === selected ? 3 : 2);
    labelText(ctx, v, r.xmin, r.ymin, r.class, color);
  });
}

const OVERLAY_COLORS: Record<OverlayStyle, string> = {
  "gt-matched": "#3cb44b",
  "gt-mismatched": "#ffb000",
  "gt-missed": "#e6194b",
  "det-matched": "#0db7c4",
  "det-mismatched": "#ff6ad5",
  "det-false-alarm": "#b0b0b0",
};

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  v: ViewTransform,
  overlay: Overlay,
) {
  for (const item of overlay.items) {
    const color = OVERLAY_COLORS[item.style];
    strokeBox(ctx, v, item.xmin, item.ymin, item.xmax, item.ymax, color, item.kind === "det");
    const text =
      item.kind === "det" && item.score !== undefined
        ? `${item.label} ${(item.score * 100).toFixed(0)}%`
        : item.label;
    labelText(ctx, v, item.xmin, item.ymin, text, color);
  }
}
