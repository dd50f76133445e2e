/**
 * End-to-end test against the real annotation service.
 *
 * Generates a drifting synthetic dataset with the toolkit CLI, starts the
 * HTTP service, and drives the same client code the UI uses: edit a box and
 * save it, reload and check persistence, then repropagate from a badly
 * placed box (many flags) and again from the corrected box (fewer flags).
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { cornerToCenter } from "../src/geometry.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let dataDir: string;
let server: ChildProcess | null = null;

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/api/sequences`);
      if (resp.ok) {
        return;
      }
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("annotation service did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "review-ui-e2e-"));
  const synth = spawnSync(
    "python3",
    [
      "-m", "stenokit.cli", "synth",
      "--out", dataDir,
      "--sequences", "1",
      "--seed", "1",
      "--size", "64",
      "--frames", "0,0,10,0",
      "--lesion-rate", "1.0",
      "--drift", "2,0",
      "--noise", "4",
    ],
    { encoding: "utf8" },
  );
  expect(synth.status, synth.stderr).toBe(0);

  server = spawn(
    "python3",
    ["-m", "stenokit.cli", "serve", "--data", dataDir, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForService();
}, 60_000);

afterAll(() => {
  server?.kill();
  if (dataDir) {
    rmSync(dataDir, { recursive: true, force: true });
  }
});

describe("review workflow against the live service", () => {
  const api = new ApiClient(BASE);

  it("loads the generated sequence", async () => {
    const sequences = await api.listSequences();
    expect(sequences).toHaveLength(1);
    expect(sequences[0].frame_count).toBe(10);
    expect(sequences[0].frame_size).toEqual([64, 64]);
  });

  it("edits a box, saves, reloads: persisted within a pixel", async () => {
    const [seq] = await api.listSequences();
    const before = await api.getBoxes(seq.id, 1);
    expect(before.boxes.length).toBeGreaterThan(0);

    const edited = {
      x1: before.boxes[0].x1 + 3.5,
      y1: before.boxes[0].y1 + 2.25,
      x2: before.boxes[0].x2 + 3.5,
      y2: before.boxes[0].y2 + 2.25,
    };
    const saved = await api.putBoxes(seq.id, 1, [edited]);
    expect(saved.pinned).toBe(true);

    // a fresh client stands in for a page reload
    const reloaded = await new ApiClient(BASE).getBoxes(seq.id, 1);
    expect(reloaded.pinned).toBe(true);
    expect(reloaded.boxes).toHaveLength(1);
    for (const key of ["x1", "y1", "x2", "y2"] as const) {
      expect(Math.abs(reloaded.boxes[0][key] - edited[key])).toBeLessThanOrEqual(1.0);
    }
  });

  it("repropagating a corrected box reduces the flag count", async () => {
    const [seq] = await api.listSequences();
    const ref = seq.reference_index;
    const truth = await api.getBoxes(seq.id, ref);

    // deliberately wrong: off the vessel, which drifts away to the right
    const wrong = [{ x1: 4, y1: 2, x2: 20, y2: 18 }];
    const badRun = await api.repropagate(seq.id, ref, wrong);
    const badFlags = badRun.filter((f) => f.flagged).length;
    expect(badFlags).toBeGreaterThan(0);

    const goodRun = await api.repropagate(seq.id, ref, truth.boxes);
    const goodFlags = goodRun.filter((f) => f.flagged).length;
    expect(goodFlags).toBeLessThan(badFlags);

    // downstream frames actually moved onto the drifting lesion
    const downstream = goodRun[ref + 2];
    const center = cornerToCenter(downstream.boxes[0]);
    const refCenter = cornerToCenter(truth.boxes[0]);
    expect(Math.abs(center.cx - (refCenter.cx + 2 * 2))).toBeLessThanOrEqual(2.0);
  });

  it("rejects malformed boxes with a validation error", async () => {
    const [seq] = await api.listSequences();
    await expect(
      api.putBoxes(seq.id, 0, [{ x1: 10, y1: 10, x2: 10, y2: 10 }]),
    ).rejects.toMatchObject({ status: 422 });
  });
});
