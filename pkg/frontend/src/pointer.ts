// Mouse-as-pointer input loop: while the button is held, cursor positions on
// the camera-view canvas become pen-down samples for the server. Nothing is
// transmitted while the mouse is up or merely hovering.

import { SampleRecord } from "./api.js";

export type SampleSink = (sample: SampleRecord) => void;

// canvas CSS coordinates -> camera image pixels
export type PixelMapper = (x: number, y: number) => [number, number];

export class PointerLoop {
  private pressed = false;

  constructor(
    private readonly sink: SampleSink,
    private readonly mapPixel: PixelMapper,
  ) {}

  get isPressed(): boolean {
    return this.pressed;
  }

  attach(canvas: HTMLElement): void {
    canvas.addEventListener("mousedown", (e) => this.onDown(e as MouseEvent));
    canvas.addEventListener("mousemove", (e) => this.onMove(e as MouseEvent));
    window.addEventListener("mouseup", () => this.onUp());
    canvas.addEventListener("mouseleave", () => this.onUp());
  }

  onDown(event: MouseEvent): void {
    this.pressed = true;
    this.emit(event);
  }

  onMove(event: MouseEvent): void {
    if (!this.pressed) return; // hovering transmits nothing
    this.emit(event);
  }

  onUp(): void {
    this.pressed = false;
  }

  private emit(event: MouseEvent): void {
    const target = event.target as HTMLElement | null;
    const rect = target?.getBoundingClientRect?.();
    const x = rect ? event.clientX - rect.left : event.clientX;
    const y = rect ? event.clientY - rect.top : event.clientY;
    this.sink({ pixel: this.mapPixel(x, y), pen_down: true });
  }
}

// Collects samples and flushes them in order as one batch per tick; callers
// drive ticks (timer in the app, manual calls in tests).
export class SampleBatcher {
  private queue: SampleRecord[] = [];

  constructor(private readonly send: (samples: SampleRecord[]) => void) {}

  push = (sample: SampleRecord): void => {
    this.queue.push(sample);
  };

  get pending(): number {
    return this.queue.length;
  }

  flush(): void {
    if (this.queue.length === 0) return;
    const batch = this.queue;
    this.queue = [];
    this.send(batch);
  }
}
