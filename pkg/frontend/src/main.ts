import { ApiClient, ApiError, FrameDetections } from "./api.js";
import { BoxEditor } from "./editor.js";
import { Scrubber } from "./scrubber.js";
import { ViewState } from "./state.js";

const api = new ApiClient("");
const state = new ViewState();

const sequenceSelect = document.getElementById("sequence") as HTMLSelectElement;
const canvas = document.getElementById("frame") as HTMLCanvasElement;
const slider = document.getElementById("scrub") as HTMLInputElement;
const strip = document.getElementById("flagstrip") as HTMLCanvasElement;
const frameLabel = document.getElementById("frame-label") as HTMLElement;
const statusLine = document.getElementById("status") as HTMLElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;
const deleteButton = document.getElementById("delete-box") as HTMLButtonElement;
const repropagateButton = document.getElementById("repropagate") as HTMLButtonElement;
const detectionsToggle = document.getElementById("show-dets") as HTMLInputElement;

const editor = new BoxEditor(canvas, state);
const scrubber = new Scrubber(slider, strip, frameLabel, state);
let frameSize: [number, number] = [0, 0];
let detections: Map<number, FrameDetections> = new Map();

function status(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.classList.toggle("error", isError);
}

function fail(err: unknown): void {
  status(err instanceof ApiError ? err.message : String(err), true);
}

async function loadFrame(frame: number): Promise<void> {
  if (!state.sequenceId) {
    return;
  }
  const record = await api.getBoxes(state.sequenceId, frame);
  state.loadFrame(record);
  editor.flagged = record.flagged;
  const img = new Image();
  img.src = api.frameImageUrl(state.sequenceId, frame);
  await img.decode();
  editor.setImage(img, frameSize[0], frameSize[1]);
  editor.setDetections(detectionsToggle.checked ? detections.get(frame) : undefined);
  scrubber.sync();
  status(
    `${record.interval}${record.is_reference ? ", reference frame" : ""}` +
      `${record.pinned ? ", pinned" : ""}${record.flagged ? ", FLAGGED" : ""}`,
  );
}

async function openSequence(id: string): Promise<void> {
  const summaries = await api.listSequences();
  const summary = summaries.find((s) => s.id === id);
  if (!summary) {
    throw new Error(`unknown sequence ${id}`);
  }
  frameSize = summary.frame_size;
  state.openSequence(id, summary.frame_count, summary.reference_index);
  detections = new Map();
  try {
    for (const rec of await api.getDetections(id)) {
      detections.set(rec.frame, rec);
    }
  } catch {
    /* detections are optional */
  }
  await loadFrame(summary.reference_index >= 0 ? 0 : 0);
}

function navigate(target: number): void {
  const next = state.requestNavigation(target, () =>
    window.confirm("Discard unsaved box edits on this frame?"),
  );
  if (next !== null) {
    loadFrame(next).catch(fail);
  }
}

scrubber.onNavigate = navigate;
editor.onChange = () => {
  saveButton.disabled = !state.dirty;
};

saveButton.addEventListener("click", () => {
  if (!state.sequenceId) {
    return;
  }
  api
    .putBoxes(state.sequenceId, state.frameIndex, state.boxes)
    .then((record) => {
      state.markSaved(record);
      editor.render();
      scrubber.sync();
      saveButton.disabled = true;
      status("saved; frame pinned");
    })
    .catch(fail);
});

deleteButton.addEventListener("click", () => {
  if (state.deleteSelected()) {
    editor.render();
    editor.onChange();
  }
});

repropagateButton.addEventListener("click", () => {
  if (!state.sequenceId) {
    return;
  }
  status("repropagating...");
  api
    .repropagate(state.sequenceId, state.frameIndex, state.boxes)
    .then((frames) => {
      state.applyFlags(frames);
      const record = frames[state.frameIndex];
      state.markSaved(record);
      editor.flagged = record.flagged;
      editor.render();
      scrubber.sync();
      saveButton.disabled = true;
      status(`repropagated from frame ${state.frameIndex}; ${state.flaggedCount()} frames flagged`);
    })
    .catch(fail);
});

detectionsToggle.addEventListener("change", () => {
  editor.setDetections(detectionsToggle.checked ? detections.get(state.frameIndex) : undefined);
});

sequenceSelect.addEventListener("change", () => {
  openSequence(sequenceSelect.value).catch(fail);
});

api
  .listSequences()
  .then((summaries) => {
    for (const s of summaries) {
      const opt = document.createElement("option");
      opt.value = s.id;
      opt.textContent = `${s.id} (${s.view}, ${s.frame_count} frames, ${s.flagged_frames} flagged)`;
      sequenceSelect.appendChild(opt);
    }
    if (summaries.length) {
      return openSequence(summaries[0].id);
    }
    status("no sequences in the dataset", true);
    return undefined;
  })
  .catch(fail);
