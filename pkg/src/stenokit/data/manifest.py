"""Sequence manifests: the on-disk dataset model.

A sequence is a directory holding 8-bit grayscale PNG frames plus one
``manifest.json`` (schema version 1) describing the patient, the viewing
angle, per-frame contrast intervals, ground-truth boxes, and the reference
frame.  Field names are part of the format:

.. code-block:: json

    {
      "schema": 1,
      "sequence_id": "seq-0001",
      "patient_id": "pat-0001",
      "view": "RCA",
      "frame_size": [64, 64],
      "provenance": {"kind": "synthetic", "seed": 7},
      "frames": [
        {"index": 0, "interval": "no_contrast", "file": "frame_0000.png",
         "is_reference": false, "boxes": []},
        {"index": 1, "interval": "optimal", "file": "frame_0001.png",
         "is_reference": true, "boxes": [[32.0, 30.5, 16.0, 16.0]]}
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..geometry import Box

SCHEMA_VERSION = 1
INTERVALS = ("no_contrast", "introducing", "optimal", "vanishing")
VIEWS = ("RCA", "LCA", "other")

__all__ = [
    "INTERVALS",
    "VIEWS",
    "SCHEMA_VERSION",
    "FrameRecord",
    "SequenceManifest",
    "save_manifest",
    "load_manifest",
    "manifest_stats",
]


@dataclass
class FrameRecord:
    index: int
    interval: str
    boxes: list[Box] = field(default_factory=list)
    is_reference: bool = False
    file: str | None = None

    def __post_init__(self):
        if self.interval not in INTERVALS:
            raise ValueError(f"unknown interval {self.interval!r}")
        if self.interval == "no_contrast" and self.boxes:
            raise ValueError("no-contrast frames cannot carry boxes")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "interval": self.interval,
            "file": self.file,
            "is_reference": self.is_reference,
            "boxes": [[b.cx, b.cy, b.w, b.h] for b in self.boxes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameRecord":
        return cls(
            index=d["index"],
            interval=d["interval"],
            boxes=[Box(*vals) for vals in d.get("boxes", [])],
            is_reference=d.get("is_reference", False),
            file=d.get("file"),
        )


@dataclass
class SequenceManifest:
    sequence_id: str
    patient_id: str
    view: str
    frame_size: tuple[int, int]
    frames: list[FrameRecord]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.view not in VIEWS:
            raise ValueError(f"view must be one of {VIEWS}, got {self.view!r}")
        indices = [f.index for f in self.frames]
        if indices != list(range(len(self.frames))):
            raise ValueError("frame indices must be contiguous from 0")
        refs = sum(f.is_reference for f in self.frames)
        if refs != 1:
            raise ValueError(f"exactly one reference frame required, found {refs}")

    @property
    def reference_index(self) -> int:
        return next(f.index for f in self.frames if f.is_reference)

    @property
    def num_boxes(self) -> int:
        return sum(len(f.boxes) for f in self.frames)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "sequence_id": self.sequence_id,
            "patient_id": self.patient_id,
            "view": self.view,
            "frame_size": list(self.frame_size),
            "provenance": self.provenance,
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceManifest":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported manifest schema {d.get('schema')!r}")
        return cls(
            sequence_id=d["sequence_id"],
            patient_id=d["patient_id"],
            view=d["view"],
            frame_size=tuple(d["frame_size"]),
            provenance=d.get("provenance", {}),
            frames=[FrameRecord.from_dict(f) for f in d["frames"]],
        )


def save_manifest(manifest: SequenceManifest, path):
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=1, sort_keys=True) + "\n")


def load_manifest(path) -> SequenceManifest:
    return SequenceManifest.from_dict(json.loads(Path(path).read_text()))


def manifest_stats(manifests) -> dict:
    """Dataset summary: patient/sequence counts, frames per contrast interval,
    box totals, and the same breakdown per viewing angle."""

    def bucket():
        return {
            "patients": set(),
            "sequences": 0,
            "frames": {name: 0 for name in INTERVALS},
            "boxes": 0,
        }

    total = bucket()
    per_view = {}
    for m in manifests:
        for b in (total, per_view.setdefault(m.view, bucket())):
            b["patients"].add(m.patient_id)
            b["sequences"] += 1
            b["boxes"] += m.num_boxes
            for f in m.frames:
                b["frames"][f.interval] += 1

    def finalize(b):
        return {
            "patients": len(b["patients"]),
            "sequences": b["sequences"],
            "frames": b["frames"],
            "boxes": b["boxes"],
        }

    return {
        "total": finalize(total),
        "per_view": {view: finalize(b) for view, b in sorted(per_view.items())},
    }
