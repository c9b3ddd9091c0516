// Typed client for the annorig session service. Every method maps 1:1 onto
// an endpoint; non-2xx responses become ApiError carrying the server's
// {code, message} payload.

export type SessionState = "annotating" | "capturing" | "closed";
export type ShapeKind = "bbox" | "polygon" | "polyline";
export type ExportFormat = "yolo" | "cvat" | "json";

export interface SessionInfo {
  id: string;
  state: SessionState;
  labels: string[];
  annotations: number;
  samples: number;
}

export interface SampleRecord {
  pixel: [number, number];
  pen_down: boolean;
}

export interface SampleResponse {
  accepted: number;
  projector_pixel?: [number, number];
  camera_pixel?: [number, number];
}

export interface AnnotationShape {
  id: string;
  label: string;
  kind: ShapeKind;
  points: [number, number][];
  frame_index: number;
}

export interface CaptureStatus {
  state: "idle" | "running" | "done" | "error";
  frames_done: number;
  frames_total: number;
  gaps: number[];
  message: string;
}

export interface OverlayMeta {
  frame_index: number;
  camera_trail: [number, number][];
  projector_trail: [number, number][];
  annotations: AnnotationShape[];
  state: SessionState;
}

export interface DatasetFrame {
  image: string;
  width: number;
  height: number;
  annotations: { label: string; kind: ShapeKind; points: [number, number][] }[];
}

export interface DatasetDoc {
  labels: string[];
  frames: DatasetFrame[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body.code === "string") {
      code = body.code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(resp.status, code, message);
}

export class AnnorigClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async postJson(path: string, body: unknown): Promise<Response> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return raiseForStatus(resp);
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`);
    return (await raiseForStatus(resp)).json() as Promise<T>;
  }

  async createSession(labels: string[]): Promise<SessionInfo> {
    const resp = await this.postJson("/sessions", { labels });
    return resp.json();
  }

  async sessionInfo(id: string): Promise<SessionInfo> {
    return this.getJson(`/sessions/${id}`);
  }

  async sendSamples(id: string, samples: SampleRecord[]): Promise<SampleResponse> {
    const resp = await this.postJson(`/sessions/${id}/samples`, { samples });
    return resp.json();
  }

  async finalizeAnnotation(id: string, kind: ShapeKind, label: string):
      Promise<AnnotationShape> {
    const resp = await this.postJson(`/sessions/${id}/annotations`, { kind, label });
    return resp.json();
  }

  async startCapture(id: string, frameCount?: number): Promise<void> {
    const frames = frameCount === undefined ? {} : { count: frameCount };
    await this.postJson(`/sessions/${id}/capture`, { frames });
  }

  async captureStatus(id: string): Promise<CaptureStatus> {
    return this.getJson(`/sessions/${id}/capture/status`);
  }

  async overlayMeta(id: string): Promise<OverlayMeta> {
    return this.getJson(`/sessions/${id}/frames/latest/meta`);
  }

  async dataset(id: string): Promise<DatasetDoc> {
    return this.getJson(`/sessions/${id}/dataset`);
  }

  latestFrameUrl(id: string): string {
    return `${this.baseUrl}/sessions/${id}/frames/latest`;
  }

  async exportArchive(id: string, format: ExportFormat): Promise<Blob> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/sessions/${id}/export?format=${format}`);
    return (await raiseForStatus(resp)).blob();
  }

  async closeSession(id: string): Promise<SessionInfo> {
    const resp = await this.postJson(`/sessions/${id}/close`, {});
    return resp.json();
  }
}
