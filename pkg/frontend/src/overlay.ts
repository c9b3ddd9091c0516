// Camera-view rendering: the latest frame plus everything the server says to
// draw. All displayed coordinates come from server responses (sample
// responses and the overlay meta endpoint); the client applies only the
// image->canvas display scale, never its own geometry.

import { AnnotationShape } from "./api.js";

export class OverlayRenderer {
  private trail: [number, number][] = [];
  private annotations: AnnotationShape[] = [];
  private frame: CanvasImageSource | null = null;
  private imageSize: [number, number] = [1, 1];

  constructor(private readonly canvas: HTMLCanvasElement) {}

  // exposed for contract tests: what the renderer would draw
  get trailPoints(): readonly [number, number][] {
    return this.trail;
  }

  get drawnAnnotations(): readonly AnnotationShape[] {
    return this.annotations;
  }

  setImageSize(width: number, height: number): void {
    this.imageSize = [width, height];
  }

  setFrame(frame: CanvasImageSource): void {
    this.frame = frame;
  }

  appendTrail(point: [number, number]): void {
    this.trail.push(point);
  }

  setTrail(points: [number, number][]): void {
    this.trail = points.slice();
  }

  clearTrail(): void {
    this.trail = [];
  }

  setAnnotations(annotations: AnnotationShape[]): void {
    this.annotations = annotations.slice();
  }

  private toCanvas(p: [number, number]): [number, number] {
    const sx = this.canvas.width / this.imageSize[0];
    const sy = this.canvas.height / this.imageSize[1];
    return [p[0] * sx, p[1] * sy];
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return; // jsdom-style environments: state is still inspectable
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.frame) {
      ctx.drawImage(this.frame, 0, 0, this.canvas.width, this.canvas.height);
    }

    if (this.trail.length > 0) {
      ctx.strokeStyle = "#3ddc84";
      ctx.lineWidth = 2;
      ctx.beginPath();
      this.trail.forEach((p, i) => {
        const [x, y] = this.toCanvas(p);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    }

    ctx.strokeStyle = "#ff5c5c";
    ctx.lineWidth = 2;
    for (const ann of this.annotations) {
      ctx.beginPath();
      if (ann.kind === "bbox") {
        const [x0, y0] = this.toCanvas(ann.points[0]);
        const [x1, y1] = this.toCanvas(ann.points[1]);
        ctx.rect(x0, y0, x1 - x0, y1 - y0);
      } else {
        ann.points.forEach((p, i) => {
          const [x, y] = this.toCanvas(p);
          if (i === 0) ctx.moveTo(x, y);
          else ctx.lineTo(x, y);
        });
        if (ann.kind === "polygon") ctx.closePath();
      }
      ctx.stroke();
    }
  }
}
