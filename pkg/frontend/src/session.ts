/** Editing state for one image's annotations.
 *
 * The session holds a working copy of the rows plus the server version
 * it was loaded at; saving with a stale version is rejected by the
 * server (409) and surfaced as a conflict instead of overwriting
 * someone else's edit.
 */

import { AnnotationRow, CELL_CLASSES } from "./model.js";

export const MIN_BOX_SIZE = 2;

export interface DragGesture {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/**
 * Turn a drag gesture into an annotation draft.
 *
 * Coordinates snap to integer pixels, the box is clamped to the image,
 * and drags under 2x2 px are discarded (returns null).
 */
export function draftFromDrag(
  drag: DragGesture,
  cls: string,
  imageWidth: number,
  imageHeight: number,
): AnnotationRow | null {
  if (!(CELL_CLASSES as readonly string[]).includes(cls)) {
    throw new Error(`unknown class ${cls}`);
  }
  let xmin = Math.round(Math.min(drag.x0, drag.x1));
  let xmax = Math.round(Math.max(drag.x0, drag.x1));
  let ymin = Math.round(Math.min(drag.y0, drag.y1));
  let ymax = Math.round(Math.max(drag.y0, drag.y1));

  xmin = Math.max(0, Math.min(xmin, imageWidth));
  xmax = Math.max(0, Math.min(xmax, imageWidth));
  ymin = Math.max(0, Math.min(ymin, imageHeight));
  ymax = Math.max(0, Math.min(ymax, imageHeight));

  if (xmax - xmin < MIN_BOX_SIZE || ymax - ymin < MIN_BOX_SIZE) {
    return null;
  }
  return { class: cls, xmin, ymin, xmax, ymax };
}

export class AnnotationSession {
  readonly imageId: string;
  readonly imageWidth: number;
  readonly imageHeight: number;
  rows: AnnotationRow[];
  version: number;
  dirty = false;

  constructor(
    imageId: string,
    imageWidth: number,
    imageHeight: number,
    rows: AnnotationRow[],
    version: number,
  ) {
    this.imageId = imageId;
    this.imageWidth = imageWidth;
    this.imageHeight = imageHeight;
    this.rows = rows.map((r) => ({ ...r }));
    this.version = version;
  }

  /** Apply a drag; returns the appended row or null when discarded. */
  drawBox(drag: DragGesture, cls: string): AnnotationRow | null {
    const draft = draftFromDrag(drag, cls, this.imageWidth, this.imageHeight);
    if (draft === null) {
      return null;
    }
    this.rows.push(draft);
    this.dirty = true;
    return draft;
  }

  removeRow(index: number): void {
    if (index < 0 || index >= this.rows.length) {
      return;
    }
    this.rows.splice(index, 1);
    this.dirty = true;
  }

  /** Payload for put-annotations: the working copy at the loaded version. */
  savePayload(): { version: number; rows: AnnotationRow[] } {
    return { version: this.version, rows: this.rows.map((r) => ({ ...r })) };
  }

  /** Record a successful save: adopt the server's new version. */
  markSaved(newVersion: number): void {
    this.version = newVersion;
    this.dirty = false;
  }
}
