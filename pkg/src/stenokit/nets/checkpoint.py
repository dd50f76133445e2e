"""Versioned model checkpoints.

A checkpoint is a single ``.npz`` archive holding every named parameter
tensor plus one JSON metadata entry with the format version, the network
configuration, and optional schedule/run metadata.  Writing is byte-for-byte
deterministic for identical contents.
"""

from __future__ import annotations

import json

import numpy as np

from .network import NetConfig, ToyNet

FORMAT_VERSION = 1
_META_KEY = "__stenokit_meta__"

__all__ = ["save_net", "load_net", "FORMAT_VERSION"]


def save_net(path, net: ToyNet, extra: dict | None = None):
    """Write the net's parameters and configuration to ``path``."""
    meta = {
        "format_version": FORMAT_VERSION,
        "config": net.config.to_dict(),
        "extra": extra or {},
    }
    arrays = dict(net.state_dict())
    arrays[_META_KEY] = np.frombuffer(
        json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8
    )
    np.savez(path, **arrays)


def load_net(path) -> tuple[ToyNet, dict]:
    """Rebuild a net from a checkpoint; returns (net, extra metadata)."""
    with np.load(path) as archive:
        if _META_KEY not in archive:
            raise ValueError(f"{path} is not a model checkpoint")
        meta = json.loads(bytes(archive[_META_KEY]).decode())
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        net = ToyNet(NetConfig.from_dict(meta["config"]))
        state = {k: archive[k] for k in archive.files if k != _META_KEY}
    net.load_state_dict(state)
    return net, meta.get("extra", {})
