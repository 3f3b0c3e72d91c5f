import { describe, expect, it } from "vitest";

import { AnnotationRow, DetectionsDoc } from "../src/model.js";
import { buildOverlay, gtOnlyOverlay } from "../src/overlay.js";

const GT: AnnotationRow[] = [
  { class: "Single_cancer_cell", xmin: 5, ymin: 5, xmax: 15, ymax: 15 },
  { class: "Artifact", xmin: 30, ymin: 30, xmax: 50, ymax: 48 },
];

function doc(partial: Partial<DetectionsDoc["match"]>, detections: DetectionsDoc["detections"]): DetectionsDoc {
  return {
    image_id: "a.png",
    detections,
    match: {
      tp: 0,
      fp: 0,
      fn: 0,
      pairs: [],
      unmatched_gt: [],
      unmatched_det: [],
      ...partial,
    },
  };
}

describe("buildOverlay", () => {
  it("identity-perturbation run: every object matched, nothing unmatched", () => {
    const identity = doc(
      {
        tp: 2,
        pairs: [
          { gt_index: 0, det_index: 0, iou: 1.0, class_match: true },
          { gt_index: 1, det_index: 1, iou: 1.0, class_match: true },
        ],
      },
      GT.map((r) => ({ class: r.class, score: 0.9, xmin: r.xmin, ymin: r.ymin, xmax: r.xmax, ymax: r.ymax })),
    );
    const overlay = buildOverlay(GT, identity);
    expect(overlay.summary.unmatched).toBe(0);
    expect(overlay.items.filter((i) => i.kind === "gt").every((i) => i.style === "gt-matched")).toBe(true);
    expect(overlay.items.filter((i) => i.kind === "det").every((i) => i.style === "det-matched")).toBe(true);
  });

  it("corrupted-class pair renders with the mismatch style", () => {
    const corrupted = doc(
      {
        tp: 1,
        fp: 1,
        fn: 1,
        pairs: [
          { gt_index: 0, det_index: 0, iou: 1.0, class_match: true },
          { gt_index: 1, det_index: 1, iou: 1.0, class_match: false },
        ],
      },
      [
        { class: "Single_cancer_cell", score: 0.9, xmin: 5, ymin: 5, xmax: 15, ymax: 15 },
        { class: "MSC_cluster", score: 0.8, xmin: 30, ymin: 30, xmax: 50, ymax: 48 },
      ],
    );
    const overlay = buildOverlay(GT, corrupted);
    const gtStyles = overlay.items.filter((i) => i.kind === "gt").map((i) => i.style);
    const detStyles = overlay.items.filter((i) => i.kind === "det").map((i) => i.style);
    expect(gtStyles).toEqual(["gt-matched", "gt-mismatched"]);
    expect(detStyles).toEqual(["det-matched", "det-mismatched"]);
  });

  it("missed objects and false alarms get their own styles", () => {
    const partial = doc(
      {
        tp: 1,
        fp: 1,
        fn: 1,
        pairs: [{ gt_index: 0, det_index: 0, iou: 0.9, class_match: true }],
        unmatched_gt: [1],
        unmatched_det: [1],
      },
      [
        { class: "Single_cancer_cell", score: 0.9, xmin: 5, ymin: 5, xmax: 15, ymax: 15 },
        { class: "Artifact", score: 0.6, xmin: 70, ymin: 70, xmax: 90, ymax: 90 },
      ],
    );
    const overlay = buildOverlay(GT, partial);
    expect(overlay.items.map((i) => i.style)).toEqual([
      "gt-matched",
      "gt-missed",
      "det-matched",
      "det-false-alarm",
    ]);
    expect(overlay.summary.unmatched).toBe(2);
  });

  it("gt-only view lists every region as missing detections", () => {
    const overlay = gtOnlyOverlay(GT);
    expect(overlay.items).toHaveLength(2);
    expect(overlay.items.every((i) => i.style === "gt-missed")).toBe(true);
  });
});
