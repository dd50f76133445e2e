"""Dataset directory layout and detection-file IO.

A dataset root holds one directory per sequence:

    root/
      seq-0000/
        manifest.json
        frame_0000.png
        frame_0001.png
        ...

Detections and propagation results are JSON-lines files with one record per
frame: ``{"sequence": id, "frame": k, "boxes": [[cx, cy, w, h, score], ...]}``
(propagation records carry ``"flagged": [bool, ...]`` instead of scores).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .manifest import SequenceManifest, load_manifest, save_manifest

__all__ = [
    "save_sequence",
    "load_sequence",
    "load_frame",
    "sequence_dirs",
    "write_jsonl",
    "read_jsonl",
]


def save_sequence(root, frames: np.ndarray, manifest: SequenceManifest) -> Path:
    """Write frames and manifest under root/<sequence_id>/; returns the dir."""
    seq_dir = Path(root) / manifest.sequence_id
    seq_dir.mkdir(parents=True, exist_ok=True)
    for record, frame in zip(manifest.frames, frames):
        name = f"frame_{record.index:04d}.png"
        record.file = name
        Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="L").save(seq_dir / name)
    save_manifest(manifest, seq_dir / "manifest.json")
    return seq_dir


def load_sequence(seq_dir) -> tuple[np.ndarray, SequenceManifest]:
    seq_dir = Path(seq_dir)
    manifest = load_manifest(seq_dir / "manifest.json")
    frames = np.stack([load_frame(seq_dir, record.file) for record in manifest.frames])
    return frames, manifest


def load_frame(seq_dir, file_name: str) -> np.ndarray:
    with Image.open(Path(seq_dir) / file_name) as img:
        return np.asarray(img.convert("L"))


def sequence_dirs(root) -> list[Path]:
    root = Path(root)
    return sorted(p.parent for p in root.glob("*/manifest.json"))


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
