/** Shared types mirroring the serve API's JSON shapes. */

export interface AnnotationRow {
  class: string;
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export interface ImageInfo {
  image_id: string;
  file_path: string;
  width: number;
  height: number;
  colorspace: string;
  version: number;
}

export interface DetectionBox {
  class: string | null;
  score: number;
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export interface MatchPair {
  gt_index: number;
  det_index: number;
  iou: number;
  class_match: boolean;
}

export interface MatchSummary {
  tp: number;
  fp: number;
  fn: number;
  pairs: MatchPair[];
  unmatched_gt: number[];
  unmatched_det: number[];
}

export interface DetectionsDoc {
  image_id: string;
  detections: DetectionBox[];
  match: MatchSummary;
}

/** The five region classes, in the order annotators were given them (keys 1-5). */
export const CELL_CLASSES = [
  "Single_cancer_cell",
  "Cancer_cluster",
  "Single_MSC_cell",
  "MSC_cluster",
  "Artifact",
] as const;

export const CLASS_COLORS: Record<string, string> = {
  Single_cancer_cell: "#e6194b",
  Cancer_cluster: "#f58231",
  Single_MSC_cell: "#3cb44b",
  MSC_cluster: "#4363d8",
  Artifact: "#911eb4",
};

/** The canonical CSV line this row serializes to (for display and tests). */
export function csvLine(image: ImageInfo, row: AnnotationRow): string {
  return [
    image.image_id,
    image.width,
    image.height,
    row.class,
    row.xmin,
    row.ymin,
    row.xmax,
    row.ymax,
  ].join(",");
}
