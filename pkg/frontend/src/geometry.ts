/**
 * Box forms and the canvas/image coordinate transform.
 *
 * The server speaks center form [cx, cy, w, h] in image pixels; the editor
 * works in corner form in canvas pixels. The view transform letterboxes the
 * image into the canvas (uniform scale, centered).
 */

export interface CenterBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export interface CornerBox {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export type Handle = "nw" | "ne" | "sw" | "se" | "move";

export function centerToCorner(b: CenterBox): CornerBox {
  return {
    x1: b.cx - b.w / 2,
    y1: b.cy - b.h / 2,
    x2: b.cx + b.w / 2,
    y2: b.cy + b.h / 2,
  };
}

export function cornerToCenter(b: CornerBox): CenterBox {
  return {
    cx: (b.x1 + b.x2) / 2,
    cy: (b.y1 + b.y2) / 2,
    w: b.x2 - b.x1,
    h: b.y2 - b.y1,
  };
}

/** Put corners in canonical order (x1 < x2, y1 < y2) after a drag. */
export function normalizeCorners(b: CornerBox): CornerBox {
  return {
    x1: Math.min(b.x1, b.x2),
    y1: Math.min(b.y1, b.y2),
    x2: Math.max(b.x1, b.x2),
    y2: Math.max(b.y1, b.y2),
  };
}

export function fitTransform(
  imageW: number,
  imageH: number,
  canvasW: number,
  canvasH: number,
): ViewTransform {
  const scale = Math.min(canvasW / imageW, canvasH / imageH);
  return {
    scale,
    offsetX: (canvasW - imageW * scale) / 2,
    offsetY: (canvasH - imageH * scale) / 2,
  };
}

export function imageToCanvas(x: number, y: number, t: ViewTransform): [number, number] {
  return [x * t.scale + t.offsetX, y * t.scale + t.offsetY];
}

export function canvasToImage(x: number, y: number, t: ViewTransform): [number, number] {
  return [(x - t.offsetX) / t.scale, (y - t.offsetY) / t.scale];
}

export function boxToCanvas(b: CornerBox, t: ViewTransform): CornerBox {
  const [x1, y1] = imageToCanvas(b.x1, b.y1, t);
  const [x2, y2] = imageToCanvas(b.x2, b.y2, t);
  return { x1, y1, x2, y2 };
}

export function boxToImage(b: CornerBox, t: ViewTransform): CornerBox {
  const [x1, y1] = canvasToImage(b.x1, b.y1, t);
  const [x2, y2] = canvasToImage(b.x2, b.y2, t);
  return { x1, y1, x2, y2 };
}

/** Which part of a (canvas-space) box a canvas point grabs, if any. */
export function hitTest(
  point: [number, number],
  box: CornerBox,
  tolerance = 6,
): Handle | null {
  const [px, py] = point;
  const corners: Array<[Handle, number, number]> = [
    ["nw", box.x1, box.y1],
    ["ne", box.x2, box.y1],
    ["sw", box.x1, box.y2],
    ["se", box.x2, box.y2],
  ];
  for (const [handle, cx, cy] of corners) {
    if (Math.abs(px - cx) <= tolerance && Math.abs(py - cy) <= tolerance) {
      return handle;
    }
  }
  if (px >= box.x1 && px <= box.x2 && py >= box.y1 && py <= box.y2) {
    return "move";
  }
  return null;
}

/** Apply a drag (dx, dy) to a box via the grabbed handle. */
export function dragBox(box: CornerBox, handle: Handle, dx: number, dy: number): CornerBox {
  switch (handle) {
    case "move":
      return { x1: box.x1 + dx, y1: box.y1 + dy, x2: box.x2 + dx, y2: box.y2 + dy };
    case "nw":
      return normalizeCorners({ ...box, x1: box.x1 + dx, y1: box.y1 + dy });
    case "ne":
      return normalizeCorners({ ...box, x2: box.x2 + dx, y1: box.y1 + dy });
    case "sw":
      return normalizeCorners({ ...box, x1: box.x1 + dx, y2: box.y2 + dy });
    case "se":
      return normalizeCorners({ ...box, x2: box.x2 + dx, y2: box.y2 + dy });
  }
}

export function clampToImage(b: CornerBox, imageW: number, imageH: number): CornerBox {
  const clamp = (v: number, lo: number, hi: number) => Math.min(Math.max(v, lo), hi);
  const out = normalizeCorners(b);
  return {
    x1: clamp(out.x1, 0, imageW),
    y1: clamp(out.y1, 0, imageH),
    x2: clamp(out.x2, 0, imageW),
    y2: clamp(out.y2, 0, imageH),
  };
}
