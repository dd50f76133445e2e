/**
 * Canvas box editor: draws the frame with ground-truth boxes (cyan),
 * detections (orange), and flag state; drag inside a box to move it, drag a
 * corner to resize, drag on empty space to create a box.
 */

import {
  CornerBox,
  Handle,
  ViewTransform,
  boxToCanvas,
  boxToImage,
  clampToImage,
  dragBox,
  fitTransform,
  hitTest,
  normalizeCorners,
} from "./geometry.js";
import { ViewState } from "./state.js";
import { FrameDetections } from "./api.js";

const BOX_COLOR = "#00e5ff";
const BOX_SELECTED = "#ffffff";
const DET_COLOR = "#ff9100";
const FLAG_COLOR = "#ff1744";

interface DragState {
  boxIndex: number;
  handle: Handle;
  lastX: number;
  lastY: number;
}

interface CreateState {
  startX: number;
  startY: number;
}

export class BoxEditor {
  private image: HTMLImageElement | null = null;
  private imageW = 0;
  private imageH = 0;
  private transform: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
  private drag: DragState | null = null;
  private create: CreateState | null = null;
  private detections: CornerBox[] = [];
  private detScores: number[] = [];
  flagged = false;
  onChange: () => void = () => {};

  constructor(
    private canvas: HTMLCanvasElement,
    private state: ViewState,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
  }

  setImage(img: HTMLImageElement, w: number, h: number): void {
    this.image = img;
    this.imageW = w;
    this.imageH = h;
    this.transform = fitTransform(w, h, this.canvas.width, this.canvas.height);
    this.render();
  }

  setDetections(dets: FrameDetections | undefined): void {
    this.detections = dets ? dets.boxes.map((d) => d.box) : [];
    this.detScores = dets ? dets.boxes.map((d) => d.score) : [];
    this.render();
  }

  private canvasPoint(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * this.canvas.width,
      ((e.clientY - rect.top) / rect.height) * this.canvas.height,
    ];
  }

  private pointerDown(e: PointerEvent): void {
    const pt = this.canvasPoint(e);
    this.canvas.setPointerCapture(e.pointerId);
    for (let i = this.state.boxes.length - 1; i >= 0; i--) {
      const canvasBox = boxToCanvas(this.state.boxes[i], this.transform);
      const handle = hitTest(pt, canvasBox);
      if (handle) {
        this.state.selected = i;
        this.drag = { boxIndex: i, handle, lastX: pt[0], lastY: pt[1] };
        this.render();
        return;
      }
    }
    this.state.selected = null;
    this.create = { startX: pt[0], startY: pt[1] };
    this.render();
  }

  private pointerMove(e: PointerEvent): void {
    if (!this.drag && !this.create) {
      return;
    }
    const pt = this.canvasPoint(e);
    if (this.drag) {
      const dx = (pt[0] - this.drag.lastX) / this.transform.scale;
      const dy = (pt[1] - this.drag.lastY) / this.transform.scale;
      const moved = dragBox(this.state.boxes[this.drag.boxIndex], this.drag.handle, dx, dy);
      this.state.setBox(this.drag.boxIndex, clampToImage(moved, this.imageW, this.imageH));
      this.drag.lastX = pt[0];
      this.drag.lastY = pt[1];
    }
    this.render(this.create ? pt : undefined);
  }

  private pointerUp(e: PointerEvent): void {
    const pt = this.canvasPoint(e);
    if (this.create) {
      const raw = normalizeCorners(
        boxToImage(
          { x1: this.create.startX, y1: this.create.startY, x2: pt[0], y2: pt[1] },
          this.transform,
        ),
      );
      const clamped = clampToImage(raw, this.imageW, this.imageH);
      if (clamped.x2 - clamped.x1 >= 2 && clamped.y2 - clamped.y1 >= 2) {
        this.state.addBox(clamped);
      }
      this.create = null;
    }
    this.drag = null;
    this.render();
    this.onChange();
  }

  render(rubberBand?: [number, number]): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.fillStyle = "#111";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(
        this.image,
        this.transform.offsetX,
        this.transform.offsetY,
        this.imageW * this.transform.scale,
        this.imageH * this.transform.scale,
      );
    }
    this.detections.forEach((box, i) => {
      const c = boxToCanvas(box, this.transform);
      ctx.strokeStyle = DET_COLOR;
      ctx.lineWidth = 1.5;
      ctx.setLineDash([5, 3]);
      ctx.strokeRect(c.x1, c.y1, c.x2 - c.x1, c.y2 - c.y1);
      ctx.setLineDash([]);
      ctx.fillStyle = DET_COLOR;
      ctx.font = "11px sans-serif";
      ctx.fillText(this.detScores[i].toFixed(2), c.x1 + 2, c.y1 - 3);
    });
    this.state.boxes.forEach((box, i) => {
      const c = boxToCanvas(box, this.transform);
      ctx.strokeStyle = i === this.state.selected ? BOX_SELECTED : BOX_COLOR;
      ctx.lineWidth = 2;
      ctx.strokeRect(c.x1, c.y1, c.x2 - c.x1, c.y2 - c.y1);
      for (const [hx, hy] of [
        [c.x1, c.y1],
        [c.x2, c.y1],
        [c.x1, c.y2],
        [c.x2, c.y2],
      ]) {
        ctx.fillStyle = ctx.strokeStyle;
        ctx.fillRect(hx - 3, hy - 3, 6, 6);
      }
    });
    if (this.create && rubberBand) {
      ctx.strokeStyle = BOX_SELECTED;
      ctx.setLineDash([4, 4]);
      ctx.strokeRect(
        this.create.startX,
        this.create.startY,
        rubberBand[0] - this.create.startX,
        rubberBand[1] - this.create.startY,
      );
      ctx.setLineDash([]);
    }
    if (this.flagged) {
      ctx.strokeStyle = FLAG_COLOR;
      ctx.lineWidth = 4;
      ctx.strokeRect(2, 2, this.canvas.width - 4, this.canvas.height - 4);
    }
  }
}
