import { describe, expect, it } from "vitest";

import { AnnorigClient, ApiError } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeFetch(status: number, body: unknown, calls: Call[]) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
}

describe("api client contract", () => {
  it("creates sessions with the label catalog", async () => {
    const calls: Call[] = [];
    const client = new AnnorigClient("http://rig", fakeFetch(201, {
      id: "s1", state: "annotating", labels: ["a"], annotations: 0, samples: 0,
    }, calls));
    const info = await client.createSession(["a"]);
    expect(info.id).toBe("s1");
    expect(calls[0].url).toBe("http://rig/sessions");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({ labels: ["a"] });
  });

  it("posts sample batches and returns the overlay pixels", async () => {
    const calls: Call[] = [];
    const client = new AnnorigClient("", fakeFetch(202, {
      accepted: 2, projector_pixel: [5, 6], camera_pixel: [7, 8],
    }, calls));
    const resp = await client.sendSamples("s1", [
      { pixel: [1, 2], pen_down: true },
      { pixel: [3, 4], pen_down: true },
    ]);
    expect(resp.camera_pixel).toEqual([7, 8]);
    expect(calls[0].url).toBe("/sessions/s1/samples");
    const payload = JSON.parse(calls[0].init?.body as string);
    expect(payload.samples).toHaveLength(2);
  });

  it("raises ApiError with the server's code", async () => {
    const calls: Call[] = [];
    const client = new AnnorigClient("", fakeFetch(409, {
      code: "open_contour", message: "gap too large",
    }, calls));
    const err = await client
      .finalizeAnnotation("s1", "polygon", "part")
      .then(() => null, (e) => e as ApiError);
    expect(err).toBeInstanceOf(ApiError);
    expect(err?.code).toBe("open_contour");
    expect(err?.status).toBe(409);
    expect(err?.message).toBe("gap too large");
  });

  it("keeps a defined code for non-JSON errors", async () => {
    const client = new AnnorigClient("", async () =>
      new Response("boom", { status: 500 }));
    const err = await client.sessionInfo("s1").then(() => null, (e) => e as ApiError);
    expect(err?.code).toBe("http_error");
  });

  it("builds capture and export requests", async () => {
    const calls: Call[] = [];
    const client = new AnnorigClient("", fakeFetch(202, {}, calls));
    await client.startCapture("s1", 20);
    expect(calls[0].url).toBe("/sessions/s1/capture");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual(
      { frames: { count: 20 } });

    await client.exportArchive("s1", "yolo");
    expect(calls[1].url).toBe("/sessions/s1/export?format=yolo");
  });
});
