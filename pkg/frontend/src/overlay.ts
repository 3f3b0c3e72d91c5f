/** Build the review overlay: ground truth vs detections, match-aware styles. */

import { AnnotationRow, DetectionsDoc } from "./model.js";

export type OverlayStyle =
  | "gt-matched" // ground truth found by a correct-class detection
  | "gt-mismatched" // found, but the detection carries the wrong class
  | "gt-missed" // no detection matched this object
  | "det-matched"
  | "det-mismatched"
  | "det-false-alarm";

export interface OverlayItem {
  kind: "gt" | "det";
  style: OverlayStyle;
  label: string;
  score?: number;
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export interface Overlay {
  items: OverlayItem[];
  summary: { tp: number; fp: number; fn: number; unmatched: number };
}

/** Ground-truth-only view (no detections document for the image). */
export function gtOnlyOverlay(rows: AnnotationRow[]): Overlay {
  return {
    items: rows.map((r) => ({
      kind: "gt",
      style: "gt-missed",
      label: r.class,
      xmin: r.xmin,
      ymin: r.ymin,
      xmax: r.xmax,
      ymax: r.ymax,
    })),
    summary: { tp: 0, fp: 0, fn: rows.length, unmatched: rows.length },
  };
}

export function buildOverlay(rows: AnnotationRow[], doc: DetectionsDoc): Overlay {
  const gtStyle = new Map<number, OverlayStyle>();
  const detStyle = new Map<number, OverlayStyle>();

  for (const pair of doc.match.pairs) {
    gtStyle.set(pair.gt_index, pair.class_match ? "gt-matched" : "gt-mismatched");
    detStyle.set(pair.det_index, pair.class_match ? "det-matched" : "det-mismatched");
  }
  for (const g of doc.match.unmatched_gt) {
    gtStyle.set(g, "gt-missed");
  }
  for (const d of doc.match.unmatched_det) {
    detStyle.set(d, "det-false-alarm");
  }

  const items: OverlayItem[] = [];
  rows.forEach((r, i) => {
    items.push({
      kind: "gt",
      style: gtStyle.get(i) ?? "gt-missed",
      label: r.class,
      xmin: r.xmin,
      ymin: r.ymin,
      xmax: r.xmax,
      ymax: r.ymax,
    });
  });
  doc.detections.forEach((d, i) => {
    items.push({
      kind: "det",
      style: detStyle.get(i) ?? "det-false-alarm",
      label: d.class ?? "?",
      score: d.score,
      xmin: d.xmin,
      ymin: d.ymin,
      xmax: d.xmax,
      ymax: d.ymax,
    });
  });

  return {
    items,
    summary: {
      tp: doc.match.tp,
      fp: doc.match.fp,
      fn: doc.match.fn,
      unmatched: doc.match.unmatched_gt.length + doc.match.unmatched_det.length,
    },
  };
}
