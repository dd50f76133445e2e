/**
 * Typed client for the annotation service.
 *
 * The wire format carries boxes in center form [cx, cy, w, h]; the UI edits
 * corner form. This module is the single place where the two are converted.
 */

import { CenterBox, CornerBox, centerToCorner, cornerToCenter } from "./geometry.js";

export interface SequenceSummary {
  id: string;
  view: string;
  frame_count: number;
  frame_size: [number, number];
  reference_index: number;
  flagged_frames: number;
}

export interface FrameAnnotation {
  sequence: string;
  frame: number;
  interval: string;
  is_reference: boolean;
  pinned: boolean;
  flagged: boolean;
  boxes: CornerBox[];
}

export interface FrameDetections {
  frame: number;
  boxes: Array<{ box: CornerBox; score: number }>;
}

function toWire(boxes: CornerBox[]): number[][] {
  return boxes.map((b) => {
    const c: CenterBox = cornerToCenter(b);
    return [c.cx, c.cy, c.w, c.h];
  });
}

function fromWire(raw: number[][]): CornerBox[] {
  return raw.map(([cx, cy, w, h]) => centerToCorner({ cx, cy, w, h }));
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`api error ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  async listSequences(): Promise<SequenceSummary[]> {
    const body = await request<{ sequences: SequenceSummary[] }>(`${this.base}/api/sequences`);
    return body.sequences;
  }

  frameImageUrl(sequence: string, frame: number): string {
    return `${this.base}/api/sequences/${sequence}/frames/${frame}`;
  }

  async getBoxes(sequence: string, frame: number): Promise<FrameAnnotation> {
    const raw = await request<{ boxes: number[][] } & Omit<FrameAnnotation, "boxes">>(
      `${this.base}/api/sequences/${sequence}/frames/${frame}/boxes`,
    );
    return { ...raw, boxes: fromWire(raw.boxes) };
  }

  async putBoxes(sequence: string, frame: number, boxes: CornerBox[]): Promise<FrameAnnotation> {
    const raw = await request<{ boxes: number[][] } & Omit<FrameAnnotation, "boxes">>(
      `${this.base}/api/sequences/${sequence}/frames/${frame}/boxes`,
      {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ boxes: toWire(boxes) }),
      },
    );
    return { ...raw, boxes: fromWire(raw.boxes) };
  }

  async repropagate(
    sequence: string,
    fromFrame: number,
    boxes: CornerBox[],
  ): Promise<FrameAnnotation[]> {
    const raw = await request<{ frames: Array<{ boxes: number[][] } & Omit<FrameAnnotation, "boxes">> }>(
      `${this.base}/api/sequences/${sequence}/repropagate`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ from: fromFrame, boxes: toWire(boxes) }),
      },
    );
    return raw.frames.map((f) => ({ ...f, boxes: fromWire(f.boxes) }));
  }

  async getDetections(sequence: string): Promise<FrameDetections[]> {
    const raw = await request<{ detections: Array<{ frame: number; boxes: number[][] }> }>(
      `${this.base}/api/sequences/${sequence}/detections`,
    );
    return raw.detections.map((rec) => ({
      frame: rec.frame,
      boxes: rec.boxes.map(([cx, cy, w, h, score]) => ({
        box: centerToCorner({ cx, cy, w, h }),
        score,
      })),
    }));
  }
}
