// Session UI wiring. The browser is a thin terminal for the service: every
// coordinate on screen was computed server-side; the client only batches
// mouse samples, polls, and renders what comes back.

import {
  AnnorigClient,
  ApiError,
  ExportFormat,
  SessionInfo,
  ShapeKind,
} from "./api.js";
import { messageFor } from "./errors.js";
import { OverlayRenderer } from "./overlay.js";
import { PointerLoop, SampleBatcher } from "./pointer.js";

export interface AppOptions {
  labels?: string[];
  imageSize?: [number, number];
  autoPoll?: boolean; // timers off in tests; drive flushSamples/pollCapture manually
  pollMs?: number;
}

export class App {
  session: SessionInfo | null = null;
  lastToast = "";
  captureDone = false;

  readonly canvas: HTMLCanvasElement;
  readonly renderer: OverlayRenderer;
  readonly pointer: PointerLoop;
  readonly batcher: SampleBatcher;
  readonly labelSelect: HTMLSelectElement;
  readonly kindSelect: HTMLSelectElement;
  readonly finalizeButton: HTMLButtonElement;
  readonly captureButton: HTMLButtonElement;
  readonly downloadButtons: Record<ExportFormat, HTMLButtonElement>;
  readonly newSessionButton: HTMLButtonElement;
  readonly statusLine: HTMLElement;
  readonly toastBox: HTMLElement;
  readonly filmstrip: HTMLElement;

  private readonly labels: string[];
  private readonly imageSize: [number, number];
  private annotationCount = 0;
  private timers: ReturnType<typeof setInterval>[] = [];

  constructor(
    root: HTMLElement,
    private readonly client: AnnorigClient,
    private readonly options: AppOptions = {},
  ) {
    this.labels = options.labels ?? ["defect"];
    this.imageSize = options.imageSize ?? [2448, 2048];

    this.canvas = document.createElement("canvas");
    this.canvas.width = 816;
    this.canvas.height = Math.round(
      (816 * this.imageSize[1]) / this.imageSize[0]);
    this.canvas.className = "camera-view";

    this.renderer = new OverlayRenderer(this.canvas);
    this.renderer.setImageSize(this.imageSize[0], this.imageSize[1]);

    this.batcher = new SampleBatcher((samples) => {
      void this.transmit(samples);
    });
    this.pointer = new PointerLoop(this.batcher.push, (x, y) => [
      (x * this.imageSize[0]) / this.canvas.width,
      (y * this.imageSize[1]) / this.canvas.height,
    ]);
    this.pointer.attach(this.canvas);

    this.labelSelect = document.createElement("select");
    for (const label of this.labels) {
      const opt = document.createElement("option");
      opt.value = label;
      opt.textContent = label;
      this.labelSelect.appendChild(opt);
    }
    this.kindSelect = document.createElement("select");
    for (const kind of ["bbox", "polygon", "polyline"]) {
      const opt = document.createElement("option");
      opt.value = kind;
      opt.textContent = kind;
      this.kindSelect.appendChild(opt);
    }

    this.finalizeButton = this.button("Finalize shape", () => this.finalize());
    this.captureButton = this.button("Start capture", () => this.startCapture());
    this.downloadButtons = {
      yolo: this.button("YOLO", () => this.download("yolo")),
      cvat: this.button("CVAT", () => this.download("cvat")),
      json: this.button("JSON", () => this.download("json")),
    };
    this.newSessionButton = this.button("New session", () => this.start());
    this.statusLine = document.createElement("div");
    this.statusLine.className = "status";
    this.toastBox = document.createElement("div");
    this.toastBox.className = "toast";
    this.filmstrip = document.createElement("div");
    this.filmstrip.className = "filmstrip";

    const controls = document.createElement("div");
    controls.className = "controls";
    controls.append(this.labelSelect, this.kindSelect, this.finalizeButton,
                    this.captureButton, this.downloadButtons.yolo,
                    this.downloadButtons.cvat, this.downloadButtons.json,
                    this.newSessionButton);
    root.append(this.canvas, controls, this.statusLine, this.toastBox,
                this.filmstrip);
    this.refreshControls();
  }

  private button(label: string, onClick: () => void): HTMLButtonElement {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", onClick);
    return b;
  }

  toast(message: string): void {
    this.lastToast = message;
    this.toastBox.textContent = message;
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      this.toast(messageFor(err.code));
      if (err.code === "unknown_session") {
        this.session = null; // server restarted: offer a fresh start
        this.refreshControls();
      }
    } else {
      this.toast(`Unexpected failure: ${String(err)}`);
    }
  }

  refreshControls(): void {
    const annotating = this.session?.state === "annotating";
    this.finalizeButton.disabled = !annotating;
    this.captureButton.disabled = !annotating || this.annotationCount === 0;
    const exportable = this.session !== null;
    for (const b of Object.values(this.downloadButtons)) b.disabled = !exportable;
    this.newSessionButton.disabled = false;
    this.statusLine.textContent = this.session
      ? `session ${this.session.id} - ${this.session.state}`
      : "no session";
  }

  async start(): Promise<void> {
    this.stopTimers();
    try {
      this.session = await this.client.createSession(this.labels);
      this.annotationCount = 0;
      this.captureDone = false;
      this.renderer.clearTrail();
      this.renderer.setAnnotations([]);
      this.filmstrip.replaceChildren();
      this.toast("");
      this.refreshControls();
      if (this.options.autoPoll ?? true) {
        const ms = this.options.pollMs ?? 100; // the service expects ~10 Hz polls
        this.timers.push(setInterval(() => this.batcher.flush(), 50));
        this.timers.push(setInterval(() => void this.refreshFrame(), ms));
      }
    } catch (err) {
      this.fail(err);
    }
  }

  stopTimers(): void {
    this.timers.forEach(clearInterval);
    this.timers = [];
  }

  private async transmit(samples: Parameters<AnnorigClient["sendSamples"]>[1]):
      Promise<void> {
    if (!this.session) return;
    try {
      const resp = await this.client.sendSamples(this.session.id, samples);
      if (resp.camera_pixel) {
        // display only what the server computed
        this.renderer.appendTrail(resp.camera_pixel);
        this.renderer.render();
      }
    } catch (err) {
      this.fail(err);
    }
  }

  async refreshFrame(): Promise<void> {
    if (!this.session) return;
    const img = new Image();
    img.src = `${this.client.latestFrameUrl(this.session.id)}?t=${Date.now()}`;
    img.onload = () => {
      this.renderer.setFrame(img);
      this.renderer.render();
    };
  }

  async finalize(): Promise<void> {
    if (!this.session) return;
    try {
      await this.client.finalizeAnnotation(
        this.session.id,
        this.kindSelect.value as ShapeKind,
        this.labelSelect.value);
      this.annotationCount += 1;
      const meta = await this.client.overlayMeta(this.session.id);
      this.renderer.clearTrail();
      this.renderer.setAnnotations(meta.annotations);
      this.renderer.render();
      this.toast("");
      this.refreshControls();
    } catch (err) {
      this.fail(err);
    }
  }

  async startCapture(frameCount?: number): Promise<void> {
    if (!this.session) return;
    try {
      await this.client.startCapture(this.session.id, frameCount);
      this.session = { ...this.session, state: "capturing" };
      this.refreshControls();
      if (this.options.autoPoll ?? true) {
        const timer = setInterval(() => {
          void this.pollCapture().then((done) => {
            if (done) clearInterval(timer);
          });
        }, this.options.pollMs ?? 100);
        this.timers.push(timer);
      }
    } catch (err) {
      this.fail(err);
    }
  }

  // one poll step; resolves true when the capture job has finished
  async pollCapture(): Promise<boolean> {
    if (!this.session) return true;
    try {
      const status = await this.client.captureStatus(this.session.id);
      this.statusLine.textContent =
        `capture ${status.state}: ${status.frames_done}/${status.frames_total}`;
      if (status.state === "error") {
        this.toast(`Capture failed: ${status.message}`);
        return true;
      }
      if (status.state !== "done") return false;
      this.captureDone = true;
      await this.buildFilmstrip();
      return true;
    } catch (err) {
      this.fail(err);
      return true;
    }
  }

  private async buildFilmstrip(): Promise<void> {
    if (!this.session) return;
    const doc = await this.client.dataset(this.session.id);
    this.filmstrip.replaceChildren();
    for (const frame of doc.frames) {
      const cell = document.createElement("div");
      cell.className = "film-cell";
      cell.textContent =
        `${frame.image}: ${frame.annotations.length} shape(s)`;
      this.filmstrip.appendChild(cell);
    }
  }

  async download(format: ExportFormat): Promise<Blob | null> {
    if (!this.session) return null;
    try {
      const blob = await this.client.exportArchive(this.session.id, format);
      const anchor = document.createElement("a");
      anchor.href = URL.createObjectURL(blob);
      anchor.download = `${this.session.id}-${format}.zip`;
      anchor.click();
      URL.revokeObjectURL(anchor.href);
      return blob;
    } catch (err) {
      this.fail(err);
      return null;
    }
  }
}

export function createApp(root: HTMLElement, client: AnnorigClient,
                          options: AppOptions = {}): App {
  return new App(root, client, options);
}
