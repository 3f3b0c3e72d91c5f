/** Typed client for the serve API (list/get/put annotations, detections). */

import { AnnotationRow, DetectionsDoc, ImageInfo } from "./model.js";

export type SaveResult =
  | { ok: true; version: number }
  | { ok: false; conflict: boolean; serverVersion?: number; error: string };

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/image/${encodeURIComponent(imageId)}`;
  }

  async listImages(): Promise<ImageInfo[]> {
    const resp = await fetch(`${this.baseUrl}/api/images`);
    if (!resp.ok) {
      throw new Error(`list-images failed: ${resp.status}`);
    }
    const doc = await resp.json();
    return doc.images as ImageInfo[];
  }

  async getAnnotations(
    imageId: string,
  ): Promise<{ version: number; rows: AnnotationRow[] }> {
    const resp = await fetch(
      `${this.baseUrl}/api/annotations/${encodeURIComponent(imageId)}`,
    );
    if (!resp.ok) {
      throw new Error(`get-annotations failed: ${resp.status}`);
    }
    const doc = await resp.json();
    return { version: doc.version, rows: doc.rows as AnnotationRow[] };
  }

  async putAnnotations(
    imageId: string,
    version: number,
    rows: AnnotationRow[],
  ): Promise<SaveResult> {
    const resp = await fetch(
      `${this.baseUrl}/api/annotations/${encodeURIComponent(imageId)}`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ version, rows }),
      },
    );
    const doc = await resp.json();
    if (resp.ok) {
      return { ok: true, version: doc.version as number };
    }
    return {
      ok: false,
      conflict: resp.status === 409,
      serverVersion: doc.version as number | undefined,
      error: (doc.error as string) ?? `save failed: ${resp.status}`,
    };
  }

  /** Detections + match summary, or null when none exist for the image. */
  async getDetections(imageId: string): Promise<DetectionsDoc | null> {
    const resp = await fetch(
      `${this.baseUrl}/api/detections/${encodeURIComponent(imageId)}`,
    );
    if (resp.status === 404) {
      return null;
    }
    if (!resp.ok) {
      throw new Error(`get-detections failed: ${resp.status}`);
    }
    return (await resp.json()) as DetectionsDoc;
  }
}
