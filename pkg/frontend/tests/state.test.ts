import { describe, expect, it } from "vitest";

import { FrameAnnotation } from "../src/api.js";
import { ViewState } from "../src/state.js";

function record(frame: number, boxes = [{ x1: 1, y1: 2, x2: 5, y2: 8 }], flagged = false): FrameAnnotation {
  return {
    sequence: "s",
    frame,
    interval: "optimal",
    is_reference: frame === 2,
    pinned: false,
    flagged,
    boxes,
  };
}

describe("ViewState", () => {
  it("tracks dirty state through edits and saves", () => {
    const s = new ViewState();
    s.openSequence("s", 5, 2);
    s.loadFrame(record(0));
    expect(s.dirty).toBe(false);
    s.setBox(0, { x1: 2, y1: 2, x2: 6, y2: 8 });
    expect(s.dirty).toBe(true);
    s.markSaved(record(0, s.boxes));
    expect(s.dirty).toBe(false);
  });

  it("never silently discards unsaved edits", () => {
    const s = new ViewState();
    s.openSequence("s", 5, 2);
    s.loadFrame(record(0));
    s.addBox({ x1: 0, y1: 0, x2: 4, y2: 4 });
    let asked = 0;
    // decline the confirm: navigation is refused
    expect(s.requestNavigation(3, () => (asked++, false))).toBeNull();
    expect(asked).toBe(1);
    expect(s.frameIndex).toBe(0);
    // accept the confirm: navigation proceeds
    expect(s.requestNavigation(3, () => true)).toBe(3);
  });

  it("clean frames navigate without confirmation", () => {
    const s = new ViewState();
    s.openSequence("s", 5, 2);
    s.loadFrame(record(1));
    expect(
      s.requestNavigation(4, () => {
        throw new Error("must not ask");
      }),
    ).toBe(4);
  });

  it("clamps navigation to the sequence", () => {
    const s = new ViewState();
    s.openSequence("s", 5, 2);
    s.loadFrame(record(1));
    expect(s.requestNavigation(99, () => true)).toBe(4);
    expect(s.requestNavigation(-3, () => true)).toBe(0);
  });

  it("add/delete update the working set and selection", () => {
    const s = new ViewState();
    s.openSequence("s", 3, 1);
    s.loadFrame(record(0, []));
    const idx = s.addBox({ x1: 0, y1: 0, x2: 4, y2: 4 });
    expect(idx).toBe(0);
    expect(s.selected).toBe(0);
    expect(s.deleteSelected()).toBe(true);
    expect(s.boxes).toHaveLength(0);
    expect(s.deleteSelected()).toBe(false);
  });

  it("collects flags from repropagation results", () => {
    const s = new ViewState();
    s.openSequence("s", 3, 1);
    s.applyFlags([record(0, [], false), record(1, [], true), record(2, [], true)]);
    expect(s.flaggedCount()).toBe(2);
    expect(s.flaggedFrames).toEqual([false, true, true]);
  });
});
