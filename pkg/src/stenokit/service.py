"""HTTP annotation service for sequence review and correction.

State is event-sourced: every mutation appends one line to the sequence's
``events.jsonl`` and replaying that log over the base manifest reconstructs
the current annotations exactly.  Frames edited by hand are pinned; a later
repropagation never overwrites a pinned frame.  Repropagation results are
stored inside their event, so replay never reruns the tracker.

Endpoints (JSON unless noted):

* ``GET  /api/sequences``                      sequence summaries
* ``GET  /api/sequences/{sid}/frames/{k}``       frame PNG
* ``GET  /api/sequences/{sid}/frames/{k}/boxes`` frame annotation record
* ``PUT  /api/sequences/{sid}/frames/{k}/boxes`` set boxes (pins the frame)
* ``POST /api/sequences/{sid}/repropagate``      ``{"from": k, "boxes": [...]}``
* ``GET  /api/sequences/{sid}/detections``       detections, if available
"""

from __future__ import annotations

import io
import json
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel, Field

from .geometry import Box
from .tracking import TrackerParams, propagate
from .data.manifest import SequenceManifest
from .data.store import load_sequence, read_jsonl, sequence_dirs

__all__ = ["AnnotationStore", "create_app"]


def _validate_boxes(raw, frame_size) -> list[Box]:
    w, h = frame_size
    boxes = []
    for vals in raw:
        if len(vals) != 4 or not all(np.isfinite(v) for v in vals):
            raise HTTPException(422, detail=f"malformed box {vals}")
        cx, cy, bw, bh = (float(v) for v in vals)
        if bw <= 0 or bh <= 0:
            raise HTTPException(422, detail=f"box sides must be positive: {vals}")
        if cx + bw / 2 <= 0 or cx - bw / 2 >= w or cy + bh / 2 <= 0 or cy - bh / 2 >= h:
            raise HTTPException(422, detail=f"box {vals} lies outside the {w}x{h} frame")
        boxes.append(Box(cx, cy, bw, bh))
    return boxes


def _boxes_json(boxes: list[Box]) -> list[list[float]]:
    return [[b.cx, b.cy, b.w, b.h] for b in boxes]


class _SequenceState:
    """Mutable annotation state of one sequence plus its event log."""

    def __init__(self, seq_dir: Path):
        self.dir = seq_dir
        self.lock = threading.RLock()
        self.frames, self.manifest = load_sequence(seq_dir)
        self.boxes: dict[int, list[Box]] = {
            f.index: list(f.boxes) for f in self.manifest.frames
        }
        self.pinned: set[int] = set()
        self.flagged: dict[int, bool] = {f.index: False for f in self.manifest.frames}
        self.next_event_id = 1
        self.events_path = seq_dir / "events.jsonl"
        if self.events_path.exists():
            for event in read_jsonl(self.events_path):
                self._apply(event)
                self.next_event_id = event["event_id"] + 1

    # -- event machinery ---------------------------------------------------

    def _apply(self, event: dict):
        action = event["action"]
        frame = event["frame"]
        if action == "set_boxes":
            self.boxes[frame] = [Box(*v) for v in event["boxes"]]
            self.pinned.add(frame)
            self.flagged[frame] = False
        elif action == "delete_box":
            kept = [b for i, b in enumerate(self.boxes[frame]) if i != event["box_index"]]
            self.boxes[frame] = kept
            self.pinned.add(frame)
        elif action == "repropagate_from":
            self.boxes[frame] = [Box(*v) for v in event["boxes"]]
            self.pinned.add(frame)
            self.flagged[frame] = False
            for rec in event["result"]:
                k = rec["frame"]
                if k == frame or k in self.pinned:
                    continue
                self.boxes[k] = [Box(*v) for v in rec["boxes"]]
                self.flagged[k] = bool(rec["flagged"])
        else:
            raise ValueError(f"unknown annotation action {action!r}")

    def record(self, event: dict) -> dict:
        event = {
            "event_id": self.next_event_id,
            "timestamp": time.time(),
            "sequence": self.manifest.sequence_id,
            **event,
        }
        self.next_event_id += 1
        with open(self.events_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._apply(event)
        return event

    # -- views ---------------------------------------------------------------

    def frame_record(self, k: int) -> dict:
        rec = self.manifest.frames[k]
        return {
            "sequence": self.manifest.sequence_id,
            "frame": k,
            "interval": rec.interval,
            "is_reference": rec.is_reference,
            "pinned": k in self.pinned,
            "flagged": self.flagged[k],
            "boxes": _boxes_json(self.boxes[k]),
        }

    def summary(self) -> dict:
        return {
            "id": self.manifest.sequence_id,
            "view": self.manifest.view,
            "frame_count": len(self.manifest.frames),
            "frame_size": list(self.manifest.frame_size),
            "reference_index": self.manifest.reference_index,
            "flagged_frames": sum(self.flagged.values()),
        }


class AnnotationStore:
    """All sequences under one dataset root."""

    def __init__(self, root, tracker: TrackerParams = TrackerParams(), frame_cap: int = 256):
        self.root = Path(root)
        self.tracker = tracker
        self.frame_cap = frame_cap
        self.sequences: dict[str, _SequenceState] = {}
        for seq_dir in sequence_dirs(self.root):
            state = _SequenceState(seq_dir)
            self.sequences[state.manifest.sequence_id] = state

    def get(self, sid: str) -> _SequenceState:
        if sid not in self.sequences:
            raise HTTPException(404, detail=f"unknown sequence {sid!r}")
        return self.sequences[sid]

    def frame_state(self, sid: str, k: int) -> _SequenceState:
        state = self.get(sid)
        if not (0 <= k < len(state.manifest.frames)):
            raise HTTPException(404, detail=f"sequence {sid!r} has no frame {k}")
        return state

    def repropagate(self, sid: str, from_index: int, boxes: list[Box]) -> list[dict]:
        state = self.frame_state(sid, from_index)
        if len(state.manifest.frames) > self.frame_cap:
            raise HTTPException(422, detail=f"sequence longer than the {self.frame_cap}-frame cap")
        with state.lock:
            frames = state.frames.astype(np.float64)
            results = propagate(frames, from_index, boxes, self.tracker)
            result_json = [
                {
                    "frame": k,
                    "boxes": _boxes_json([r.box for r in row]),
                    "flagged": bool(any(r.flagged for r in row)),
                }
                for k, row in enumerate(results)
            ]
            state.record(
                {
                    "action": "repropagate_from",
                    "frame": from_index,
                    "boxes": _boxes_json(boxes),
                    "result": result_json,
                }
            )
            return [state.frame_record(k) for k in range(len(state.manifest.frames))]


class BoxesPayload(BaseModel):
    boxes: list[list[float]]


class RepropagatePayload(BaseModel):
    from_frame: int = Field(alias="from")
    boxes: list[list[float]]


def create_app(root, tracker: TrackerParams = TrackerParams(), frame_cap: int = 256, ui_dir=None) -> FastAPI:
    """Build the FastAPI app serving the dataset under ``root``."""
    store = AnnotationStore(root, tracker, frame_cap)
    app = FastAPI(title="stenokit annotation service")
    app.state.store = store

    @app.get("/api/sequences")
    def list_sequences():
        return {"sequences": [s.summary() for s in store.sequences.values()]}

    @app.get("/api/sequences/{sid}/frames/{k}")
    def get_frame(sid: str, k: int):
        state = store.frame_state(sid, k)
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(state.frames[k], mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/sequences/{sid}/frames/{k}/boxes")
    def get_boxes(sid: str, k: int):
        state = store.frame_state(sid, k)
        with state.lock:
            return state.frame_record(k)

    @app.put("/api/sequences/{sid}/frames/{k}/boxes")
    def put_boxes(sid: str, k: int, payload: BoxesPayload):
        state = store.frame_state(sid, k)
        boxes = _validate_boxes(payload.boxes, state.manifest.frame_size)
        with state.lock:
            state.record({"action": "set_boxes", "frame": k, "boxes": _boxes_json(boxes)})
            return state.frame_record(k)

    @app.post("/api/sequences/{sid}/repropagate")
    def repropagate(sid: str, payload: RepropagatePayload):
        state = store.frame_state(sid, payload.from_frame)
        boxes = _validate_boxes(payload.boxes, state.manifest.frame_size)
        return {"frames": store.repropagate(sid, payload.from_frame, boxes)}

    @app.get("/api/sequences/{sid}/detections")
    def get_detections(sid: str):
        store.get(sid)
        path = store.root / "detections.jsonl"
        records = []
        if path.exists():
            records = [r for r in read_jsonl(path) if r.get("sequence") == sid]
        return {"detections": records}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
