/**
 * View state of the review session: which frame is shown, the working copy
 * of its boxes, and the unsaved-edits guard. Pending edits are never
 * silently discarded: navigation away from a dirty frame goes through a
 * confirm callback.
 */

import { CornerBox } from "./geometry.js";
import { FrameAnnotation } from "./api.js";

export type ConfirmFn = () => boolean;

export class ViewState {
  sequenceId: string | null = null;
  frameIndex = 0;
  frameCount = 0;
  referenceIndex = 0;
  boxes: CornerBox[] = [];
  flaggedFrames: boolean[] = [];
  selected: number | null = null;
  private savedBoxes = "";

  get dirty(): boolean {
    return JSON.stringify(this.boxes) !== this.savedBoxes;
  }

  openSequence(id: string, frameCount: number, referenceIndex: number): void {
    this.sequenceId = id;
    this.frameCount = frameCount;
    this.referenceIndex = referenceIndex;
    this.frameIndex = 0;
    this.boxes = [];
    this.savedBoxes = JSON.stringify(this.boxes);
    this.flaggedFrames = new Array(frameCount).fill(false);
    this.selected = null;
  }

  loadFrame(record: FrameAnnotation): void {
    this.frameIndex = record.frame;
    this.boxes = record.boxes.map((b) => ({ ...b }));
    this.savedBoxes = JSON.stringify(this.boxes);
    this.flaggedFrames[record.frame] = record.flagged;
    this.selected = null;
  }

  /** Returns the frame to show next, or null if the user kept their edits. */
  requestNavigation(target: number, confirmDiscard: ConfirmFn): number | null {
    const clamped = Math.min(Math.max(target, 0), Math.max(this.frameCount - 1, 0));
    if (clamped === this.frameIndex) {
      return null;
    }
    if (this.dirty && !confirmDiscard()) {
      return null;
    }
    return clamped;
  }

  setBox(index: number, box: CornerBox): void {
    this.boxes[index] = box;
  }

  addBox(box: CornerBox): number {
    this.boxes.push(box);
    this.selected = this.boxes.length - 1;
    return this.selected;
  }

  deleteSelected(): boolean {
    if (this.selected === null) {
      return false;
    }
    this.boxes.splice(this.selected, 1);
    this.selected = null;
    return true;
  }

  markSaved(record: FrameAnnotation): void {
    this.boxes = record.boxes.map((b) => ({ ...b }));
    this.savedBoxes = JSON.stringify(this.boxes);
    this.flaggedFrames[record.frame] = record.flagged;
  }

  applyFlags(frames: FrameAnnotation[]): void {
    for (const f of frames) {
      this.flaggedFrames[f.frame] = f.flagged;
    }
  }

  flaggedCount(): number {
    return this.flaggedFrames.filter(Boolean).length;
  }
}
