import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  return vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  })) as unknown as typeof fetch;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists images", async () => {
    vi.stubGlobal("fetch", mockFetch(200, { images: [{ image_id: "a.png", version: 1 }] }));
    const images = await new ApiClient().listImages();
    expect(images).toHaveLength(1);
    expect(images[0].image_id).toBe("a.png");
  });

  it("successful save returns the new version", async () => {
    vi.stubGlobal("fetch", mockFetch(200, { image_id: "a.png", version: 3 }));
    const result = await new ApiClient().putAnnotations("a.png", 2, []);
    expect(result).toEqual({ ok: true, version: 3 });
  });

  it("stale save surfaces the conflict and the server version", async () => {
    vi.stubGlobal(
      "fetch",
      mockFetch(409, { error: "version conflict: server is at 5", version: 5 }),
    );
    const result = await new ApiClient().putAnnotations("a.png", 3, []);
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.conflict).toBe(true);
      expect(result.serverVersion).toBe(5);
    }
  });

  it("invalid rows surface the server message without a conflict flag", async () => {
    vi.stubGlobal("fetch", mockFetch(400, { error: "box outside image" }));
    const result = await new ApiClient().putAnnotations("a.png", 1, []);
    expect(result.ok).toBe(false);
    if (!result.ok) {
      expect(result.conflict).toBe(false);
      expect(result.error).toContain("outside");
    }
  });

  it("missing detections come back as null", async () => {
    vi.stubGlobal("fetch", mockFetch(404, { error: "no detections for image" }));
    expect(await new ApiClient().getDetections("a.png")).toBeNull();
  });

  it("escapes image ids in urls", () => {
    expect(new ApiClient("http://x").imageUrl("a b.png")).toBe(
      "http://x/api/image/a%20b.png",
    );
  });
});
